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

#include "srpl/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

Variant VariantForMode(const std::string& name, bool have_negative_file) {
  if (name == "srpl") return {"SRPL", Mode::kSrpl};
  if (name == "srpl_plus") {
    return have_negative_file ? Variant{"SRPL+(FileNeg)", Mode::kSrplPlus, NegativeSource::kFile}
                              : Variant{"SRPL+(SynNeg)", Mode::kSrplPlus, NegativeSource::kSynthetic};
  }
  if (name == "srpl_plus_real") return {"SRPL+(RealNeg)", Mode::kSrplPlus, NegativeSource::kReal};
  if (name == "softmax") return {"SoftmaxTune", Mode::kSoftmax};
  if (name == "prototype") return {"ProtoTypeTune", Mode::kPrototype};
  throw ConfigError("unknown bench mode '" + name + "'");
}

std::vector<Variant> AblationVariants() {
  Variant plus{"SRPL+", Mode::kSrplPlus, NegativeSource::kSynthetic};
  Variant no_syn = plus;
  no_syn.name = "  w/o SynCenters";
  no_syn.syn_centers = false;
  Variant srpl{"SRPL", Mode::kSrpl};
  Variant no_cf = srpl;
  no_cf.name = "  w/o CenterFocus";
  no_cf.center_focus = false;
  Variant no_task = no_cf;
  no_task.name = "    w/o SpkTaskOptimize";
  no_task.task_optimize = false;
  return {plus, no_syn, srpl, no_cf, no_task};
}

TrainConfig ConfigForVariant(const Variant& v, TrainConfig base) {
  base.mode = v.mode;
  if (!v.center_focus) base.hyper.lambda_c = 0.0;
  if (!v.task_optimize) base.loss.logits = LogitKind::kSquaredDistance;
  base.loss.syn_centers = v.syn_centers;
  return base;
}

int ThreadsFromEnv() {
  const char* env = std::getenv("SRPL_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::max(1, n);
}

BenchResult RunBench(const Corpus& corpus, const BenchOptions& o) {
  if (o.variants.empty()) throw ConfigError("no variants to run");
  if (o.seeds.empty()) throw ConfigError("no seeds to run");
  CheckCompatible(o.negative_file, corpus.dimension());
  const int n_folds = o.max_folds > 0 ? std::min(o.max_folds, o.folds.n_folds) : o.folds.n_folds;

  struct SeedData {
    std::vector<OpenSetSplit> splits;
    std::vector<EmbeddingRecord> synthetic;
  };
  std::vector<SeedData> per_seed;
  const bool need_syn = std::any_of(o.variants.begin(), o.variants.end(), [](const Variant& v) {
    return v.mode == Mode::kSrplPlus && v.negatives == NegativeSource::kSynthetic;
  });
  for (uint64_t seed : o.seeds) {
    SeedData sd;
    FoldOptions fo = o.folds;
    fo.seed = seed;
    sd.splits = MakeFolds(corpus, fo);
    if (need_syn) {
      ClusterSpec spec = o.negative_spec;
      spec.dim = corpus.dimension();
      spec.seed = Rng::Mix(seed, 99);
      sd.synthetic = GenerateNegatives(spec);
    }
    per_seed.push_back(std::move(sd));
  }

  struct Job {
    size_t seed_index;
    int fold;
    size_t variant;
  };
  std::vector<Job> jobs;
  for (size_t s = 0; s < o.seeds.size(); ++s) {
    for (int f = 0; f < n_folds; ++f) {
      for (size_t v = 0; v < o.variants.size(); ++v) jobs.push_back({s, f, v});
    }
  }
  std::vector<RunResult> results(jobs.size());

  auto run_job = [&](const Job& job) {
    const Variant& v = o.variants[job.variant];
    const OpenSetSplit& split = per_seed[job.seed_index].splits[static_cast<size_t>(job.fold)];
    TrainConfig cfg = ConfigForVariant(v, o.base);
    cfg.seed = Rng::Mix(o.seeds[job.seed_index], static_cast<uint64_t>(job.fold));
    std::vector<EmbeddingRecord> negatives;
    if (v.mode == Mode::kSrplPlus) {
      switch (v.negatives) {
        case NegativeSource::kSynthetic:
          negatives = per_seed[job.seed_index].synthetic;
          break;
        case NegativeSource::kReal:
          for (size_t i : split.ReservedRecords(corpus)) negatives.push_back(corpus[i]);
          break;
        case NegativeSource::kFile:
          negatives = o.negative_file;
          break;
        case NegativeSource::kNone:
          break;
      }
    }
    RunResult r;
    r.seed = o.seeds[job.seed_index];
    r.fold = job.fold;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const TrainResult trained = Enroll(split, corpus, negatives, cfg, o.extra_enrollment);
      r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.report = Evaluate(trained.model, split, corpus).report;
    } catch (const NumericError&) {
      r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.diverged = true;
    }
    return r;
  };

  const int threads = std::max(1, o.threads > 0 ? o.threads : ThreadsFromEnv());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_job(jobs[i]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  BenchResult out;
  for (size_t v = 0; v < o.variants.size(); ++v) {
    VariantResult vr;
    vr.variant = o.variants[v];
    std::vector<OpenSetReport> reports;
    double seconds = 0.0;
    for (size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].variant != v) continue;
      vr.runs.push_back(results[j]);
      seconds += results[j].train_seconds;
      if (results[j].diverged) {
        ++vr.n_diverged;
      } else {
        reports.push_back(results[j].report);
      }
    }
    if (reports.empty()) throw NumericError("every run of " + vr.variant.name + " diverged");
    vr.mean = MeanReport(reports);
    vr.min_oscr = vr.max_oscr = reports.front().oscr;
    for (const auto& r : reports) {
      vr.min_oscr = std::min(vr.min_oscr, r.oscr);
      vr.max_oscr = std::max(vr.max_oscr, r.oscr);
    }
    vr.mean_train_seconds = seconds / static_cast<double>(vr.runs.size());
    out.variants.push_back(std::move(vr));
  }
  return out;
}

nlohmann::json BenchToJson(const BenchResult& result) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : result.variants) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : v.runs) {
      if (r.diverged) {
        runs.push_back({{"seed", r.seed}, {"fold", r.fold}, {"diverged", true}});
        continue;
      }
      runs.push_back({{"seed", r.seed},
                      {"fold", r.fold},
                      {"auc", r.report.auc},
                      {"oscr", r.report.oscr},
                      {"closed_acc", r.report.closed_acc}});
    }
    arr.push_back({{"name", v.variant.name},
                   {"mode", ModeName(v.variant.mode)},
                   {"mean", {{"auc", v.mean.auc}, {"oscr", v.mean.oscr}, {"closed_acc", v.mean.closed_acc}}},
                   {"oscr_min", v.min_oscr},
                   {"oscr_max", v.max_oscr},
                   {"diverged", v.n_diverged},
                   {"runs", runs}});
  }
  return {{"variants", arr}};
}

namespace {

std::string DivergedNote(const BenchResult& result) {
  std::string out;
  for (const auto& v : result.variants) {
    if (v.n_diverged == 0) continue;
    std::string name = v.variant.name;
    name.erase(0, name.find_first_not_of(' '));
    out += fmt::format("note: {} of {} {} runs diverged and are excluded\n", v.n_diverged,
                       v.runs.size(), name);
  }
  return out;
}

}  // namespace

std::string BenchTable(const BenchResult& result) {
  std::string out = fmt::format("{:<24} {:>8} {:>8} {:>8}   {}\n", "Method", "AUC(%)", "OSCR(%)",
                                "ACC(%)", "OSCR range over runs");
  out += std::string(72, '-') + "\n";
  for (const auto& v : result.variants) {
    out += fmt::format("{:<24} {:>8.2f} {:>8.2f} {:>8.2f}   [{:.2f}, {:.2f}]\n", v.variant.name,
                       100 * v.mean.auc, 100 * v.mean.oscr, 100 * v.mean.closed_acc,
                       100 * v.min_oscr, 100 * v.max_oscr);
  }
  return out + DivergedNote(result);
}

std::string AblationTable(const BenchResult& result) {
  std::string out = fmt::format("{:<26} {:>8} {:>8} {:>14}\n", "Method", "AUC(%)", "OSCR(%)",
                                "Tuning cost");
  out += std::string(60, '-') + "\n";
  for (const auto& v : result.variants) {
    out += fmt::format("{:<26} {:>8.2f} {:>8.2f} {:>13.3f}s\n", v.variant.name, 100 * v.mean.auc,
                       100 * v.mean.oscr, v.mean_train_seconds);
  }
  return out + DivergedNote(result);
}

}  // namespace srpl
