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

#ifndef SRPL_TRAINER_H_
#define SRPL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srpl/adapter.h"
#include "srpl/embedding_io.h"
#include "srpl/srpl_core.h"

namespace srpl {

enum class Mode { kSrpl, kSrplPlus, kSoftmax, kPrototype };

std::string_view ModeName(Mode mode);
std::optional<Mode> ParseMode(std::string_view name);

struct TrainConfig {
  Hyperparameters hyper;
  Mode mode = Mode::kSrpl;
  uint64_t seed = 0;
  // Empty means [D, D, D, D].
  std::vector<int> adapter_dims;
  // Print a progress line every N epochs (0 = silent).
  int log_every = 0;

  LossOptions loss;
  bool learn_radius = true;
  double initial_radius = 0.0;
  // L2-normalise adapter outputs before the head.
  bool normalize_output = false;
  // Pseudo-class count for negatives without speaker labels.
  int n_syn_classes = 10;
  // Embedding files with additional enrollment utterances for target
  // speakers. Read by the command-line tool; the library takes records.
  std::vector<std::string> extra_enroll;

  // Starting adapter; replaces the seeded initialisation when set.
  std::optional<AdapterNetwork> initial_adapter;

  void Validate() const;
};

struct LinearClassifier {
  Matrix weight;  // K x D
  Vector bias;    // K
  bool operator==(const LinearClassifier&) const = default;
};

struct EnrolledModel {
  Mode mode = Mode::kSrpl;
  AdapterNetwork adapter;
  bool normalize_output = false;
  LogitKind logits = LogitKind::kInnerProduct;
  SrplHead head;               // srpl, srpl_plus
  LinearClassifier classifier; // softmax
  Matrix prototypes;           // prototype, K x D
  std::vector<std::string> speakers;  // class index -> speaker id

  int num_classes() const { return static_cast<int>(speakers.size()); }
  int input_dim() const { return adapter.input_dim(); }
  bool operator==(const EnrolledModel&) const = default;
};

// Enrollment data already gathered into matrices.
struct EnrollmentData {
  Matrix inputs;                      // n x D_in
  std::vector<int> labels;            // in [0, K)
  std::vector<std::string> speakers;  // K ids
};

struct NegativePool {
  Matrix inputs;                   // m x D_in, may be empty
  std::vector<int> pseudo_labels;  // one per row, dense in [0, M)
  int num_classes = 0;
};

struct TrainResult {
  EnrolledModel model;
  std::vector<LossBreakdown> history;  // one entry per epoch
};

// Assigns pseudo-classes: distinct speaker ids when every record carries one,
// otherwise seeded k-means into `n_syn_classes` clusters.
NegativePool MakeNegativePool(const std::vector<EmbeddingRecord>& negatives, int n_syn_classes,
                              uint64_t seed);

// `extra` holds additional enrollment utterances (e.g. embeddings of
// synthesized audio). Records of non-target speakers are skipped.
EnrollmentData GatherEnrollment(const OpenSetSplit& split, const Corpus& corpus,
                                const std::vector<EmbeddingRecord>& extra = {});

// Plain mini-batch SGD for hyper.epochs passes with a seeded per-epoch
// reshuffle. Negatives only affect kSrplPlus. Throws NumericError on a
// non-finite loss or parameter.
TrainResult Enroll(const EnrollmentData& data, const NegativePool& negatives,
                   const TrainConfig& config);
TrainResult Enroll(const OpenSetSplit& split, const Corpus& corpus,
                   const std::vector<EmbeddingRecord>& negatives, const TrainConfig& config,
                   const std::vector<EmbeddingRecord>& extra_enrollment = {});

// Baseline entry points; equivalent to Enroll with the mode forced.
TrainResult EnrollBaselineSoftmax(const EnrollmentData& data, TrainConfig config);
TrainResult EnrollBaselinePrototype(const EnrollmentData& data, TrainConfig config);

struct Prediction {
  Vector scores;  // K probabilities
  int best_class = 0;
  double confidence = 0.0;
};

// Adapted embeddings as fed to the head.
Matrix Embed(const EnrolledModel& model, const Matrix& inputs);
Prediction Predict(const EnrolledModel& model, const Vector& input);
std::vector<Prediction> PredictBatch(const EnrolledModel& model, const Matrix& inputs);

// Class means of rows grouped by label.
Matrix ClassMeans(const Matrix& rows, const std::vector<int>& labels, int k);

}  // namespace srpl

#endif  // SRPL_TRAINER_H_
