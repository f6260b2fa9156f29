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

#ifndef SRPL_OPENSET_EVAL_H_
#define SRPL_OPENSET_EVAL_H_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srpl/embedding_io.h"
#include "srpl/trainer.h"

namespace srpl {

inline constexpr int kOutlierClass = -1;

struct ScoredUtterance {
  double confidence = 0.0;
  int predicted_class = 0;
  int true_class = kOutlierClass;

  bool is_outlier() const { return true_class == kOutlierClass; }
};

struct CurvePoint {
  double threshold = 0.0;
  double ccr = 0.0;
  double fpr = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct OpenSetReport {
  double auc = 0.0;
  double oscr = 0.0;
  double closed_acc = 0.0;
  std::vector<CurvePoint> curve;  // ascending threshold
  size_t n_targets = 0;
  size_t n_outliers = 0;
};

// Fraction of target utterances whose predicted class is correct.
double ClosedAccuracy(const std::vector<ScoredUtterance>& targets);

// Mann-Whitney AUC with ties counted as 1/2, O(n log n).
double Auc(const std::vector<double>& targets, const std::vector<double>& outliers);

// CCR/FPR at every distinct observed confidence plus one sentinel below the
// minimum and one above the maximum; ascending threshold.
std::vector<CurvePoint> CcrFprCurve(const std::vector<ScoredUtterance>& targets,
                                    const std::vector<ScoredUtterance>& outliers);

// Trapezoidal area of CCR over FPR in [0, 1]; duplicate FPR values keep
// their largest CCR.
double Oscr(const std::vector<CurvePoint>& curve);

OpenSetReport MakeReport(const std::vector<ScoredUtterance>& targets,
                         const std::vector<ScoredUtterance>& outliers);

struct EvalOutput {
  OpenSetReport report;
  // Adapted test embeddings, filled when requested.
  std::vector<EmbeddingRecord> embeddings;
};

EvalOutput Evaluate(const EnrolledModel& model, const OpenSetSplit& split, const Corpus& corpus,
                    bool emit_embeddings = false);

// Field-wise mean; the curve is left empty.
OpenSetReport MeanReport(const std::vector<OpenSetReport>& reports);

nlohmann::json ReportToJson(const OpenSetReport& report);
std::string CurveToCsv(const std::vector<CurvePoint>& curve);
std::string EmbeddingsToCsv(const std::vector<EmbeddingRecord>& records);

}  // namespace srpl

#endif  // SRPL_OPENSET_EVAL_H_
