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

#include "srpl/embedding_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "srpl/binary_io.h"
#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

namespace {

constexpr std::string_view kEmbeddingMagic = "SRPLEMB1";

bool HasBareNonFiniteToken(std::string_view line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (line.substr(i, 3) == "NaN" || line.substr(i, 8) == "Infinity") {
      return true;
    }
  }
  return false;
}

std::string FloatText(float v) {
  // 9 significant digits always reparse to the same float, including when
  // the text is first read as a double.
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view TagName(Tag tag) {
  switch (tag) {
    case Tag::kEnroll:
      return "enroll";
    case Tag::kTestTarget:
      return "test_target";
    case Tag::kTestOutlier:
      return "test_outlier";
    case Tag::kNegative:
      return "negative";
  }
  return "enroll";
}

std::optional<Tag> ParseTag(std::string_view name) {
  for (Tag t : {Tag::kEnroll, Tag::kTestTarget, Tag::kTestOutlier, Tag::kNegative}) {
    if (TagName(t) == name) return t;
  }
  return std::nullopt;
}

Format FormatFromPath(const std::string& path) {
  return path.ends_with(".bin") ? Format::kBinary : Format::kJsonl;
}

std::optional<Format> ParseFormat(std::string_view name) {
  if (name == "jsonl") return Format::kJsonl;
  if (name == "bin" || name == "binary") return Format::kBinary;
  return std::nullopt;
}

int ValidateRecords(const std::vector<EmbeddingRecord>& records, int dimension) {
  if (records.empty()) return -1;
  if (dimension < 0) dimension = static_cast<int>(records.front().vector.size());
  if (dimension < 2) {
    throw DataError("dimension must be at least 2, got " + std::to_string(dimension));
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (static_cast<int>(r.vector.size()) != dimension) {
      throw DataError("dimension mismatch at record " + std::to_string(i) + ": expected " +
                      std::to_string(dimension) + ", got " + std::to_string(r.vector.size()));
    }
    for (float v : r.vector) {
      if (!std::isfinite(v)) throw DataError("non-finite entry at record " + std::to_string(i));
    }
    if (!seen.emplace(r.speaker_id, r.utterance_id).second) {
      throw DataError("duplicate (speaker, utterance) pair at record " + std::to_string(i) +
                      ": (" + r.speaker_id + ", " + r.utterance_id + ")");
    }
  }
  return dimension;
}

Corpus Corpus::FromRecords(std::vector<EmbeddingRecord> records) {
  if (records.empty()) throw DataError("empty corpus");
  Corpus c;
  c.dimension_ = ValidateRecords(records);
  c.records_ = std::move(records);
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < c.records_.size(); ++i) {
    const auto& spk = c.records_[i].speaker_id;
    auto [it, inserted] = index.emplace(spk, c.speakers_.size());
    if (inserted) {
      c.speakers_.push_back(spk);
      c.by_speaker_.emplace_back();
    }
    c.by_speaker_[it->second].push_back(i);
  }
  return c;
}

Matrix Corpus::Rows(const std::vector<size_t>& indices) const {
  Matrix m(static_cast<Eigen::Index>(indices.size()), dimension_);
  for (size_t r = 0; r < indices.size(); ++r) {
    const auto& v = records_.at(indices[r]).vector;
    for (int c = 0; c < dimension_; ++c) m(static_cast<Eigen::Index>(r), c) = v[c];
  }
  return m;
}

std::vector<EmbeddingRecord> ParseJsonl(std::string_view text) {
  std::vector<EmbeddingRecord> out;
  size_t line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const size_t rec = out.size();
    auto where = [&] {
      return "record " + std::to_string(rec) + " (line " + std::to_string(line_no) + ")";
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      if (HasBareNonFiniteToken(line)) throw DataError("non-finite entry at record " + std::to_string(rec));
      throw DataError("malformed " + where() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("speaker") || !j.contains("utt") || !j.contains("vec")) {
      throw DataError("malformed " + where() + ": need \"speaker\", \"utt\" and \"vec\"");
    }
    const auto& spk = j["speaker"];
    const auto& utt = j["utt"];
    const auto& vec = j["vec"];
    if (!spk.is_string() || !utt.is_string() || !vec.is_array()) {
      throw DataError("malformed " + where() + ": wrong field types");
    }
    EmbeddingRecord r;
    r.speaker_id = spk.get<std::string>();
    r.utterance_id = utt.get<std::string>();
    r.vector.reserve(vec.size());
    for (const auto& x : vec) {
      if (!x.is_number()) throw DataError("malformed " + where() + ": non-numeric vector entry");
      r.vector.push_back(static_cast<float>(x.get<double>()));
    }
    if (j.contains("tag")) {
      const auto& t = j["tag"];
      std::optional<Tag> tag = t.is_string() ? ParseTag(t.get<std::string>()) : std::nullopt;
      if (!tag) throw DataError("malformed " + where() + ": unknown tag");
      r.tag = tag;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EmbeddingRecord> ParseBinary(std::string_view bytes) {
  ByteReader in(bytes);
  in.ExpectMagic(kEmbeddingMagic);
  const uint32_t dim = in.U32();
  const uint32_t count = in.U32();
  std::vector<EmbeddingRecord> out;
  out.reserve(std::min<uint32_t>(count, 1u << 20));
  for (uint32_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    try {
      r.speaker_id = in.Str16();
      r.utterance_id = in.Str16();
      r.vector.resize(dim);
      for (uint32_t d = 0; d < dim; ++d) r.vector[d] = in.F32();
    } catch (const DataError& e) {
      throw DataError("malformed record " + std::to_string(i) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  if (!in.AtEnd()) throw DataError("trailing bytes after record " + std::to_string(count));
  return out;
}

std::string ToJsonl(const std::vector<EmbeddingRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += "{\"speaker\": ";
    out += nlohmann::json(r.speaker_id).dump();
    out += ", \"utt\": ";
    out += nlohmann::json(r.utterance_id).dump();
    out += ", \"vec\": [";
    for (size_t i = 0; i < r.vector.size(); ++i) {
      if (i) out += ", ";
      out += FloatText(r.vector[i]);
    }
    out += "]";
    if (r.tag) {
      out += ", \"tag\": \"";
      out += TagName(*r.tag);
      out += "\"";
    }
    out += "}\n";
  }
  return out;
}

std::string ToBinary(const std::vector<EmbeddingRecord>& records) {
  ByteWriter w;
  w.Magic(kEmbeddingMagic);
  const uint32_t dim = records.empty() ? 0 : static_cast<uint32_t>(records.front().vector.size());
  w.U32(dim);
  w.U32(static_cast<uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.vector.size() != dim) throw DataError("cannot write records of mixed dimension");
    w.Str16(r.speaker_id);
    w.Str16(r.utterance_id);
    for (float v : r.vector) w.F32(v);
  }
  return w.bytes();
}

static std::vector<EmbeddingRecord> ReadRecords(const std::string& path, Format format) {
  const std::string bytes = ReadFileBytes(path);
  return format == Format::kBinary ? ParseBinary(bytes) : ParseJsonl(bytes);
}

Corpus LoadCorpus(const std::string& path, Format format) {
  return Corpus::FromRecords(ReadRecords(path, format));
}

Corpus LoadCorpus(const std::string& path) { return LoadCorpus(path, FormatFromPath(path)); }

void SaveRecords(const std::vector<EmbeddingRecord>& records, const std::string& path,
                 Format format) {
  WriteFileBytes(path, format == Format::kBinary ? ToBinary(records) : ToJsonl(records));
}

std::vector<EmbeddingRecord> LoadNegatives(const std::string& path, Format format) {
  std::vector<EmbeddingRecord> records = ReadRecords(path, format);
  ValidateRecords(records);
  for (auto& r : records) r.tag = Tag::kNegative;
  return records;
}

std::vector<EmbeddingRecord> LoadNegatives(const std::string& path) {
  return LoadNegatives(path, FormatFromPath(path));
}

void CheckCompatible(const std::vector<EmbeddingRecord>& negatives, int dimension) {
  if (negatives.empty()) return;
  const int d = static_cast<int>(negatives.front().vector.size());
  if (d != dimension) {
    throw DataError("dimension mismatch: negatives have dimension " + std::to_string(d) +
                    ", corpus has " + std::to_string(dimension));
  }
}

std::vector<size_t> OpenSetSplit::ReservedRecords(const Corpus& corpus) const {
  std::set<std::string> reserved(reserved_speakers.begin(), reserved_speakers.end());
  std::vector<size_t> out;
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (reserved.contains(corpus[i].speaker_id)) out.push_back(i);
  }
  return out;
}

std::vector<OpenSetSplit> MakeFolds(const Corpus& corpus, const FoldOptions& o) {
  if (o.n_folds < 1 || o.n_targets < 2 || o.n_outliers < 1 || o.shots < 1) {
    throw ConfigError("need n_folds >= 1, n_targets >= 2, n_outliers >= 1, shots >= 1");
  }
  const size_t n_spk = corpus.speakers().size();
  const size_t window = static_cast<size_t>(o.n_targets + o.n_outliers);
  if (n_spk < window) {
    throw DataError("insufficient speakers: have " + std::to_string(n_spk) + ", need " +
                    std::to_string(window));
  }

  Rng order_rng(Rng::Mix(o.seed, 0));
  const std::vector<size_t> order = order_rng.Permutation(n_spk);
  const size_t n_folds = static_cast<size_t>(o.n_folds);
  const size_t stride = (n_spk + n_folds - 1) / n_folds;

  std::vector<OpenSetSplit> splits;
  for (size_t f = 0; f < n_folds; ++f) {
    OpenSetSplit s;
    s.fold_index = static_cast<int>(f);
    const size_t start = (f * stride) % n_spk;
    std::vector<size_t> targets, outliers;
    std::vector<bool> used(n_spk, false);
    for (size_t k = 0; k < window; ++k) {
      const size_t spk = order[(start + k) % n_spk];
      used[spk] = true;
      (k < static_cast<size_t>(o.n_targets) ? targets : outliers).push_back(spk);
    }
    for (size_t k = 0; k < n_spk; ++k) {
      const size_t spk = order[(start + window + k) % n_spk];
      if (!used[spk]) {
        used[spk] = true;
        s.reserved_speakers.push_back(corpus.speakers()[spk]);
      }
    }

    Rng utt_rng(Rng::Mix(o.seed, 1000 + f));
    for (size_t spk : targets) {
      s.target_speakers.push_back(corpus.speakers()[spk]);
      std::vector<size_t> utts = corpus.utterances_of(spk);
      if (utts.size() < static_cast<size_t>(o.shots) + 1) {
        throw DataError("insufficient utterances for speaker " + corpus.speakers()[spk] +
                        ": have " + std::to_string(utts.size()) + ", need " +
                        std::to_string(o.shots + 1));
      }
      utt_rng.Shuffle(&utts);
      s.enroll_records.insert(s.enroll_records.end(), utts.begin(), utts.begin() + o.shots);
      s.test_target_records.insert(s.test_target_records.end(), utts.begin() + o.shots,
                                   utts.end());
    }
    for (size_t spk : outliers) {
      s.outlier_speakers.push_back(corpus.speakers()[spk]);
      const auto& utts = corpus.utterances_of(spk);
      s.test_outlier_records.insert(s.test_outlier_records.end(), utts.begin(), utts.end());
    }
    std::sort(s.enroll_records.begin(), s.enroll_records.end());
    std::sort(s.test_target_records.begin(), s.test_target_records.end());
    std::sort(s.test_outlier_records.begin(), s.test_outlier_records.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

nlohmann::json SplitsToJson(const std::vector<OpenSetSplit>& splits) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : splits) {
    arr.push_back({{"fold", s.fold_index},
                   {"target_speakers", s.target_speakers},
                   {"outlier_speakers", s.outlier_speakers},
                   {"reserved_speakers", s.reserved_speakers},
                   {"enroll", s.enroll_records},
                   {"test_target", s.test_target_records},
                   {"test_outlier", s.test_outlier_records}});
  }
  return {{"folds", arr}};
}

std::vector<OpenSetSplit> SplitsFromJson(const nlohmann::json& j, const Corpus& corpus) {
  std::vector<OpenSetSplit> out;
  try {
    std::set<std::string> known(corpus.speakers().begin(), corpus.speakers().end());
    for (const auto& f : j.at("folds")) {
      OpenSetSplit s;
      s.fold_index = f.at("fold").get<int>();
      s.target_speakers = f.at("target_speakers").get<std::vector<std::string>>();
      s.outlier_speakers = f.at("outlier_speakers").get<std::vector<std::string>>();
      s.reserved_speakers = f.at("reserved_speakers").get<std::vector<std::string>>();
      s.enroll_records = f.at("enroll").get<std::vector<size_t>>();
      s.test_target_records = f.at("test_target").get<std::vector<size_t>>();
      s.test_outlier_records = f.at("test_outlier").get<std::vector<size_t>>();
      for (const auto* list : {&s.target_speakers, &s.outlier_speakers, &s.reserved_speakers}) {
        for (const auto& spk : *list) {
          if (!known.contains(spk)) throw DataError("split names unknown speaker " + spk);
        }
      }
      for (const auto* list : {&s.enroll_records, &s.test_target_records, &s.test_outlier_records}) {
        for (size_t i : *list) {
          if (i >= corpus.size()) throw DataError("split record index out of range for corpus");
        }
      }
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
  return out;
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileBytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace srpl
