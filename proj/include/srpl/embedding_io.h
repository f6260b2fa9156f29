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

#ifndef SRPL_EMBEDDING_IO_H_
#define SRPL_EMBEDDING_IO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "srpl/numeric.h"

namespace srpl {

enum class Tag { kEnroll, kTestTarget, kTestOutlier, kNegative };

std::string_view TagName(Tag tag);
std::optional<Tag> ParseTag(std::string_view name);

// One utterance-level embedding as produced by an upstream speaker frontend.
struct EmbeddingRecord {
  std::string speaker_id;
  std::string utterance_id;
  std::vector<float> vector;
  std::optional<Tag> tag;

  bool operator==(const EmbeddingRecord&) const = default;
};

enum class Format { kJsonl, kBinary };

// ".bin" selects the binary format; everything else is JSONL.
Format FormatFromPath(const std::string& path);
std::optional<Format> ParseFormat(std::string_view name);

// A validated, immutable set of records sharing one dimension.
class Corpus {
 public:
  // Validates dimension agreement, finiteness, and (speaker, utt) uniqueness.
  // Throws DataError naming the offending record index.
  static Corpus FromRecords(std::vector<EmbeddingRecord> records);

  int dimension() const { return dimension_; }
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  const EmbeddingRecord& operator[](size_t i) const { return records_[i]; }

  // Speaker ids in order of first appearance.
  const std::vector<std::string>& speakers() const { return speakers_; }
  // Record indices of speaker `speakers()[s]`, in corpus order.
  const std::vector<size_t>& utterances_of(size_t s) const { return by_speaker_[s]; }

  // Rows of the requested records as a double matrix.
  Matrix Rows(const std::vector<size_t>& indices) const;

 private:
  Corpus() = default;
  int dimension_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::vector<std::string> speakers_;
  std::vector<std::vector<size_t>> by_speaker_;
};

// Shared validation: all records have `dimension` finite entries (dimension
// inferred from the first record when < 0), no duplicate (speaker, utt).
// Returns the dimension, or -1 for an empty list.
int ValidateRecords(const std::vector<EmbeddingRecord>& records, int dimension = -1);

std::vector<EmbeddingRecord> ParseJsonl(std::string_view text);
std::vector<EmbeddingRecord> ParseBinary(std::string_view bytes);
std::string ToJsonl(const std::vector<EmbeddingRecord>& records);
std::string ToBinary(const std::vector<EmbeddingRecord>& records);

Corpus LoadCorpus(const std::string& path, Format format);
Corpus LoadCorpus(const std::string& path);
void SaveRecords(const std::vector<EmbeddingRecord>& records, const std::string& path,
                 Format format);

// Loads a negative pool; every record is re-tagged as kNegative. An empty
// file yields an empty pool.
std::vector<EmbeddingRecord> LoadNegatives(const std::string& path, Format format);
std::vector<EmbeddingRecord> LoadNegatives(const std::string& path);

// Throws DataError if the pool is nonempty and its dimension differs.
void CheckCompatible(const std::vector<EmbeddingRecord>& negatives, int dimension);

struct OpenSetSplit {
  int fold_index = 0;
  std::vector<std::string> target_speakers;
  std::vector<std::string> outlier_speakers;
  std::vector<std::string> reserved_speakers;
  std::vector<size_t> enroll_records;
  std::vector<size_t> test_target_records;
  std::vector<size_t> test_outlier_records;

  // All records of the reserved speakers (the real-negative pool).
  std::vector<size_t> ReservedRecords(const Corpus& corpus) const;

  bool operator==(const OpenSetSplit&) const = default;
};

struct FoldOptions {
  int n_folds = 5;
  int n_targets = 10;
  int n_outliers = 15;
  int shots = 20;
  uint64_t seed = 0;
};

// Speakers are shuffled once by seed; fold f takes a window starting at
// f * ceil(S / n_folds) (mod S) whose first n_targets speakers are targets
// and next n_outliers are outliers. Each target contributes `shots` enroll
// utterances (seeded pick) and the rest to test_target.
std::vector<OpenSetSplit> MakeFolds(const Corpus& corpus, const FoldOptions& options);

nlohmann::json SplitsToJson(const std::vector<OpenSetSplit>& splits);
std::vector<OpenSetSplit> SplitsFromJson(const nlohmann::json& j, const Corpus& corpus);

}  // namespace srpl

#endif  // SRPL_EMBEDDING_IO_H_
