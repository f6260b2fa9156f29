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

#ifndef SRPL_PIPELINE_H_
#define SRPL_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srpl/benchgen.h"
#include "srpl/embedding_io.h"
#include "srpl/openset_eval.h"
#include "srpl/trainer.h"

namespace srpl {

enum class NegativeSource {
  kNone,
  kSynthetic,  // benchgen pseudo-speakers
  kReal,       // the fold's reserved speakers
  kFile,       // user-supplied pool
};

// One row of a comparison table: a training mode plus ablation switches.
struct Variant {
  std::string name;
  Mode mode = Mode::kSrpl;
  NegativeSource negatives = NegativeSource::kNone;
  bool center_focus = true;    // false sets lambda_c = 0
  bool task_optimize = true;   // false uses squared-distance logits
  bool syn_centers = true;
};

// Resolves a bench mode name: srpl, srpl_plus (synthetic or file
// negatives), srpl_plus_real, softmax, prototype.
Variant VariantForMode(const std::string& name, bool have_negative_file);

// The five ablation rows, strongest first.
std::vector<Variant> AblationVariants();

struct BenchOptions {
  FoldOptions folds;
  std::vector<uint64_t> seeds = {0};
  // Folds actually run per seed (<= folds.n_folds); 0 means all.
  int max_folds = 0;
  std::vector<Variant> variants;
  TrainConfig base;
  // Template for synthetic negatives; dim and seed are filled per run.
  ClusterSpec negative_spec{10, 100, 32, 0.2, 1.0, 0};
  std::vector<EmbeddingRecord> negative_file;
  // Appended to every run's enrollment set for matching target speakers.
  std::vector<EmbeddingRecord> extra_enrollment;
  // Worker threads; 0 reads SRPL_THREADS (default 1).
  int threads = 0;
};

struct RunResult {
  uint64_t seed = 0;
  int fold = 0;
  OpenSetReport report;
  double train_seconds = 0.0;
  // Training hit a non-finite value; the report is empty.
  bool diverged = false;
};

struct VariantResult {
  Variant variant;
  std::vector<RunResult> runs;
  // Over runs that did not diverge.
  OpenSetReport mean;
  double min_oscr = 0.0, max_oscr = 0.0;
  int n_diverged = 0;
  double mean_train_seconds = 0.0;
};

struct BenchResult {
  std::vector<VariantResult> variants;
};

TrainConfig ConfigForVariant(const Variant& v, TrainConfig base);

// A diverged run is kept in `runs` but left out of the means. Throws
// NumericError only when every run of some variant diverged.
BenchResult RunBench(const Corpus& corpus, const BenchOptions& options);

// Metrics only; deterministic for fixed inputs.
nlohmann::json BenchToJson(const BenchResult& result);
// Table with AUC / OSCR / ACC in percent and the OSCR range over runs.
std::string BenchTable(const BenchResult& result);
// AUC / OSCR plus mean wall-clock tuning cost per run.
std::string AblationTable(const BenchResult& result);

// Worker count from SRPL_THREADS, at least 1.
int ThreadsFromEnv();

}  // namespace srpl

#endif  // SRPL_PIPELINE_H_
