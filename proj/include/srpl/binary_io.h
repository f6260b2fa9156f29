// Copyright 2026 The srpl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SRPL_BINARY_IO_H_
#define SRPL_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srpl/error.h"

namespace srpl {

// Little-endian byte sink used by every on-disk binary format.
class ByteWriter {
 public:
  void Magic(std::string_view m) { bytes_.append(m); }
  void U16(uint16_t v) { PutLe(v, 2); }
  void U32(uint32_t v) { PutLe(v, 4); }
  void F32(float v) { PutLe(std::bit_cast<uint32_t>(v), 4); }
  void F64(double v) { PutLe(std::bit_cast<uint64_t>(v), 8); }
  void Str16(std::string_view s) {
    if (s.size() > UINT16_MAX) throw DataError("string too long for u16 length prefix");
    U16(static_cast<uint16_t>(s.size()));
    bytes_.append(s);
  }
  const std::string& bytes() const { return bytes_; }

 private:
  void PutLe(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  void ExpectMagic(std::string_view m) {
    if (data_.substr(pos_, m.size()) != m) {
      throw DataError("bad magic: expected " + std::string(m));
    }
    pos_ += m.size();
  }
  uint16_t U16() { return static_cast<uint16_t>(GetLe(2)); }
  uint32_t U32() { return static_cast<uint32_t>(GetLe(4)); }
  float F32() { return std::bit_cast<float>(static_cast<uint32_t>(GetLe(4))); }
  double F64() { return std::bit_cast<double>(GetLe(8)); }
  std::string Str16() {
    const uint16_t n = U16();
    Need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == data_.size(); }
  size_t position() const { return pos_; }

 private:
  void Need(size_t n) const {
    if (data_.size() - pos_ < n) {
      throw DataError("truncated binary data at byte " + std::to_string(pos_));
    }
  }
  uint64_t GetLe(int n) {
    Need(static_cast<size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<size_t>(n);
    return v;
  }
  std::string_view data_;
  size_t pos_ = 0;
};

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

}  // namespace srpl

#endif  // SRPL_BINARY_IO_H_
