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

#include "run_manifest.h"

#include <openssl/evp.h>

#include <memory>

#include <fmt/format.h>

#include "srpl/binary_io.h"
#include "srpl/error.h"

namespace srpl {

std::string FileSha256(const std::string& path) {
  const std::string bytes = ReadFileBytes(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("sha256 failed for " + path);
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::AddInput(const std::string& path) {
  inputs_.push_back({{"path", path}, {"sha256", FileSha256(path)}});
}

nlohmann::json RunManifest::ToJson() const {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : outputs_) outputs.push_back({{"path", p}, {"sha256", FileSha256(p)}});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return {{"command", command_}, {"config", config_},          {"seeds", seeds_},
          {"inputs", inputs_},   {"outputs", outputs},         {"wall_seconds", secs}};
}

void RunManifest::Write(const std::string& path) const {
  WriteFileBytes(path, ToJson().dump(2) + "\n");
}

}  // namespace srpl
