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

// srpl: generate, split, enroll, evaluate, benchmark and ablate.
//
// Exit codes: 0 ok, 2 usage or configuration, 3 data or I/O, 4 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "run_manifest.h"
#include "srpl/benchgen.h"
#include "srpl/binary_io.h"
#include "srpl/checkpoint.h"
#include "srpl/config.h"
#include "srpl/embedding_io.h"
#include "srpl/error.h"
#include "srpl/openset_eval.h"
#include "srpl/pipeline.h"
#include "srpl/rng.h"
#include "srpl/trainer.h"

namespace fs = std::filesystem;

namespace srpl {
namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct GenArgs {
  ClusterSpec spec;
  std::string out;
  std::string format;
  std::string neg_out;
  int neg_speakers = 10;
  int neg_utts = 100;
};

struct SplitArgs {
  std::string corpus;
  FoldOptions folds;
  std::string out;
};

// Flags shared by the training commands.
struct TrainArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::string mode;
  std::string negatives;
  std::vector<std::string> extra_enroll;
  int log_every = 0;
};

struct EnrollArgs {
  TrainArgs train;
  std::string corpus;
  std::string splits;
  FoldOptions folds;
  int fold = 0;
  std::string out;
};

struct EvalArgs {
  std::string corpus;
  std::string splits;
  FoldOptions folds;
  int fold = 0;
  std::string model;
  std::string out;
  bool emit_embeddings = false;
  std::string format = "jsonl";
};

struct BenchArgs {
  TrainArgs train;
  std::string corpus;
  std::string modes = "softmax,prototype,srpl,srpl_plus";
  int folds = 5;
  int n_seeds = 1;
  int threads = 0;
  std::string out;
};

Format FormatOrDefault(const std::string& name, const std::string& path) {
  if (name.empty()) return FormatFromPath(path);
  const auto f = ParseFormat(name);
  if (!f) throw ConfigError("unknown format '" + name + "'");
  return *f;
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

TrainConfig ResolveConfig(const TrainArgs& a, RunManifest* m) {
  TrainConfig c;
  if (!a.config.empty()) {
    c = LoadTrainConfig(a.config);
    m->AddInput(a.config);
  }
  if (a.seed) c.seed = *a.seed;
  if (!a.mode.empty()) {
    const auto mode = ParseMode(a.mode);
    if (!mode) throw ConfigError("unknown mode '" + a.mode + "'");
    c.mode = *mode;
  }
  if (a.log_every > 0) c.log_every = a.log_every;
  c.extra_enroll.insert(c.extra_enroll.end(), a.extra_enroll.begin(), a.extra_enroll.end());
  c.Validate();
  return c;
}

std::vector<EmbeddingRecord> LoadExtraEnrollment(const TrainConfig& c, RunManifest* m) {
  std::vector<EmbeddingRecord> out;
  for (const auto& path : c.extra_enroll) {
    m->AddInput(path);
    const Corpus extra = LoadCorpus(path);
    out.insert(out.end(), extra.records().begin(), extra.records().end());
  }
  return out;
}

std::vector<OpenSetSplit> ResolveSplits(const std::string& splits_path, const FoldOptions& folds,
                                        const Corpus& corpus, RunManifest* m) {
  if (splits_path.empty()) return MakeFolds(corpus, folds);
  m->AddInput(splits_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFileBytes(splits_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(splits_path + ": " + e.what());
  }
  return SplitsFromJson(j, corpus);
}

const OpenSetSplit& PickFold(const std::vector<OpenSetSplit>& splits, int fold) {
  if (fold < 0 || static_cast<size_t>(fold) >= splits.size()) {
    throw ConfigError("fold " + std::to_string(fold) + " out of range (have " +
                      std::to_string(splits.size()) + ")");
  }
  return splits[static_cast<size_t>(fold)];
}

int CmdGen(const GenArgs& a) {
  RunManifest m("gen");
  ClusterSpec spec = a.spec;
  spec.Validate();
  m.AddSeed(spec.seed);
  m.SetConfig({{"speakers", spec.n_speakers},
               {"utts", spec.utterances_per_speaker},
               {"dim", spec.dim},
               {"within_spread", spec.within_spread},
               {"between_spread", spec.between_spread}});
  EnsureParent(a.out);
  SaveRecords(Generate(spec).records(), a.out, FormatOrDefault(a.format, a.out));
  m.AddOutput(a.out);
  if (!a.neg_out.empty()) {
    ClusterSpec neg = spec;
    neg.n_speakers = a.neg_speakers;
    neg.utterances_per_speaker = a.neg_utts;
    EnsureParent(a.neg_out);
    SaveRecords(GenerateNegatives(neg), a.neg_out, FormatOrDefault(a.format, a.neg_out));
    m.AddOutput(a.neg_out);
  }
  m.Write(a.out + ".manifest.json");
  return 0;
}

int CmdSplit(const SplitArgs& a) {
  RunManifest m("split");
  m.AddInput(a.corpus);
  m.AddSeed(a.folds.seed);
  m.SetConfig({{"folds", a.folds.n_folds},
               {"targets", a.folds.n_targets},
               {"outliers", a.folds.n_outliers},
               {"shots", a.folds.shots}});
  const Corpus corpus = LoadCorpus(a.corpus);
  EnsureParent(a.out);
  WriteFileBytes(a.out, SplitsToJson(MakeFolds(corpus, a.folds)).dump(2) + "\n");
  m.AddOutput(a.out);
  m.Write(a.out + ".manifest.json");
  return 0;
}

int CmdEnroll(const EnrollArgs& a) {
  RunManifest m("enroll");
  const TrainConfig cfg = ResolveConfig(a.train, &m);
  m.AddSeed(cfg.seed);
  m.AddInput(a.corpus);
  const Corpus corpus = LoadCorpus(a.corpus);
  const auto splits = ResolveSplits(a.splits, a.folds, corpus, &m);
  const OpenSetSplit& split = PickFold(splits, a.fold);

  std::vector<EmbeddingRecord> negatives;
  if (cfg.mode == Mode::kSrplPlus) {
    if (!a.train.negatives.empty()) {
      m.AddInput(a.train.negatives);
      negatives = LoadNegatives(a.train.negatives);
    } else {
      ClusterSpec neg = BenchOptions{}.negative_spec;
      neg.dim = corpus.dimension();
      neg.seed = Rng::Mix(cfg.seed, 99);
      negatives = GenerateNegatives(neg);
    }
  }
  const TrainResult r = Enroll(split, corpus, negatives, cfg, LoadExtraEnrollment(cfg, &m));

  fs::create_directories(a.out);
  nlohmann::json echo = TrainConfigToJson(cfg);
  echo["fold"] = a.fold;
  SaveModel(r.model, echo, a.out);
  nlohmann::json history = nlohmann::json::array();
  for (const auto& b : r.history) {
    history.push_back({{"total", b.total}, {"l_s", b.l_s}, {"l_r", b.l_r}, {"l_c", b.l_c}, {"h_neg", b.h_neg}});
  }
  WriteFileBytes(Join(a.out, "history.json"), history.dump(2) + "\n");
  m.SetConfig(echo);
  std::vector<std::string> written;
  for (const auto& e : fs::directory_iterator(a.out)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") written.push_back(e.path().string());
  }
  std::sort(written.begin(), written.end());
  for (const auto& p : written) m.AddOutput(p);
  m.Write(Join(a.out, "manifest.json"));
  return 0;
}

int CmdEval(const EvalArgs& a) {
  RunManifest m("eval");
  m.AddInput(a.corpus);
  const Corpus corpus = LoadCorpus(a.corpus);
  const auto splits = ResolveSplits(a.splits, a.folds, corpus, &m);
  const OpenSetSplit& split = PickFold(splits, a.fold);
  const EnrolledModel model = LoadModel(a.model);
  m.AddInput(Join(a.model, "model.json"));
  if (model.input_dim() != corpus.dimension()) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                    ", corpus has " + std::to_string(corpus.dimension()));
  }
  const EvalOutput out = Evaluate(model, split, corpus, a.emit_embeddings);

  fs::create_directories(a.out);
  const std::string report = Join(a.out, "report.json");
  WriteFileBytes(report, ReportToJson(out.report).dump(2) + "\n");
  const std::string curve = Join(a.out, "curve.csv");
  WriteFileBytes(curve, CurveToCsv(out.report.curve));
  m.AddOutput(report);
  m.AddOutput(curve);
  if (a.emit_embeddings) {
    const Format f = FormatOrDefault(a.format, "");
    const std::string path = Join(a.out, f == Format::kBinary ? "embeddings.bin" : "embeddings.jsonl");
    SaveRecords(out.embeddings, path, f);
    m.AddOutput(path);
    const std::string csv = Join(a.out, "embeddings.csv");
    WriteFileBytes(csv, EmbeddingsToCsv(out.embeddings));
    m.AddOutput(csv);
  }
  m.SetConfig({{"fold", a.fold}, {"model", a.model}});
  m.Write(Join(a.out, "manifest.json"));
  std::cout << fmt::format("AUC {:.2f}  OSCR {:.2f}  ACC {:.2f}\n", 100 * out.report.auc,
                           100 * out.report.oscr, 100 * out.report.closed_acc);
  return 0;
}

int RunTable(const BenchArgs& a, bool ablate) {
  RunManifest m(ablate ? "ablate" : "bench");
  BenchOptions o;
  o.base = ResolveConfig(a.train, &m);
  o.seeds.clear();
  for (int s = 0; s < a.n_seeds; ++s) o.seeds.push_back(o.base.seed + static_cast<uint64_t>(s));
  for (uint64_t s : o.seeds) m.AddSeed(s);
  if (a.folds < 1) throw ConfigError("--folds must be >= 1");
  o.max_folds = a.folds;
  o.threads = a.threads;
  o.extra_enrollment = LoadExtraEnrollment(o.base, &m);

  Corpus corpus = a.corpus.empty() ? Generate(ClusterSpec{}) : LoadCorpus(a.corpus);
  if (!a.corpus.empty()) m.AddInput(a.corpus);
  const bool have_file = !a.train.negatives.empty();
  if (have_file) {
    m.AddInput(a.train.negatives);
    o.negative_file = LoadNegatives(a.train.negatives);
  }
  if (ablate) {
    o.variants = AblationVariants();
    if (have_file) {
      for (auto& v : o.variants) {
        if (v.mode == Mode::kSrplPlus) v.negatives = NegativeSource::kFile;
      }
    }
  } else {
    std::stringstream ss(a.modes);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) o.variants.push_back(VariantForMode(name, have_file));
    }
  }

  const BenchResult r = RunBench(corpus, o);
  const std::string table = ablate ? AblationTable(r) : BenchTable(r);
  std::cout << table;
  nlohmann::json echo = TrainConfigToJson(o.base);
  echo["folds"] = a.folds;
  echo["modes"] = a.modes;
  m.SetConfig(echo);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const std::string json = Join(a.out, ablate ? "ablation.json" : "bench.json");
    const std::string txt = Join(a.out, ablate ? "ablation.txt" : "bench.txt");
    WriteFileBytes(json, BenchToJson(r).dump(2) + "\n");
    WriteFileBytes(txt, table);
    m.AddOutput(json);
    m.AddOutput(txt);
    m.Write(Join(a.out, "manifest.json"));
  }
  return 0;
}

void AddTrainFlags(CLI::App* cmd, TrainArgs* a) {
  cmd->add_option("--config", a->config, "key = value training config file");
  cmd->add_option("--seed", a->seed, "run seed (overrides the config)");
  cmd->add_option("--mode", a->mode, "srpl | srpl_plus | softmax | prototype");
  cmd->add_option("--negatives", a->negatives, "negative pool file (jsonl or bin)");
  cmd->add_option("--extra-enroll", a->extra_enroll,
                  "extra enrollment embeddings for target speakers (repeatable)");
  cmd->add_option("--log-every", a->log_every, "print losses every N epochs");
}

void AddFoldFlags(CLI::App* cmd, FoldOptions* f, bool with_seed) {
  cmd->add_option("--n-folds", f->n_folds, "folds")->check(CLI::PositiveNumber);
  cmd->add_option("--targets", f->n_targets, "target speakers per fold")->check(CLI::PositiveNumber);
  cmd->add_option("--outliers", f->n_outliers, "outlier speakers per fold")->check(CLI::PositiveNumber);
  cmd->add_option("--shots", f->shots, "enroll utterances per target")->check(CLI::PositiveNumber);
  if (with_seed) cmd->add_option("--split-seed", f->seed, "fold seed");
}

int Main(int argc, char** argv) {
  CLI::App app{"Few-shot open-set speaker identification backend"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic embedding corpus");
  g->add_option("--speakers", gen.spec.n_speakers)->check(CLI::PositiveNumber);
  g->add_option("--utts", gen.spec.utterances_per_speaker)->check(CLI::PositiveNumber);
  g->add_option("--dim", gen.spec.dim)->check(CLI::PositiveNumber);
  g->add_option("--within", gen.spec.within_spread, "within-speaker spread");
  g->add_option("--between", gen.spec.between_spread, "speaker center radius");
  g->add_option("--seed", gen.spec.seed);
  g->add_option("-o,--out", gen.out, "corpus path")->required();
  g->add_option("--format", gen.format, "jsonl | bin (default: from extension)");
  g->add_option("--negatives-out", gen.neg_out, "also write a negative pool here");
  g->add_option("--neg-speakers", gen.neg_speakers)->check(CLI::PositiveNumber);
  g->add_option("--neg-utts", gen.neg_utts)->check(CLI::PositiveNumber);

  SplitArgs split;
  auto* s = app.add_subcommand("split", "write open-set folds for a corpus");
  s->add_option("--corpus", split.corpus)->required();
  s->add_option("--folds", split.folds.n_folds)->check(CLI::PositiveNumber);
  AddFoldFlags(s, &split.folds, false);
  s->add_option("--seed", split.folds.seed);
  s->add_option("-o,--out", split.out, "splits json")->required();

  EnrollArgs enroll;
  auto* e = app.add_subcommand("enroll", "train on one fold and write a model directory");
  e->add_option("--corpus", enroll.corpus)->required();
  e->add_option("--splits", enroll.splits, "splits json (default: generated)");
  AddFoldFlags(e, &enroll.folds, true);
  e->add_option("--fold", enroll.fold);
  AddTrainFlags(e, &enroll.train);
  e->add_option("--out", enroll.out, "model directory")->required();

  EvalArgs eval;
  auto* v = app.add_subcommand("eval", "score a fold's test utterances");
  v->add_option("--corpus", eval.corpus)->required();
  v->add_option("--splits", eval.splits);
  AddFoldFlags(v, &eval.folds, true);
  v->add_option("--fold", eval.fold);
  v->add_option("--model", eval.model, "model directory")->required();
  v->add_option("--out", eval.out, "report directory")->required();
  v->add_flag("--emit-embeddings", eval.emit_embeddings, "write adapted test embeddings");
  v->add_option("--format", eval.format, "embedding format: jsonl | bin");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "compare modes over folds and seeds");
  b->add_option("--corpus", bench.corpus, "default: built-in synthetic benchmark");
  b->add_option("--modes", bench.modes, "comma list of srpl, srpl_plus, srpl_plus_real, softmax, prototype");
  b->add_option("--folds", bench.folds, "folds to run per seed");
  b->add_option("--seeds", bench.n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  b->add_option("--threads", bench.threads, "worker slots (default: SRPL_THREADS or 1)");
  AddTrainFlags(b, &bench.train);
  b->add_option("--out", bench.out, "report directory");

  BenchArgs ablate;
  auto* a = app.add_subcommand("ablate", "ablation table with tuning cost");
  a->add_option("--corpus", ablate.corpus);
  a->add_option("--folds", ablate.folds);
  a->add_option("--seeds", ablate.n_seeds)->check(CLI::PositiveNumber);
  a->add_option("--threads", ablate.threads);
  AddTrainFlags(a, &ablate.train);
  a->add_option("--out", ablate.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*g) return CmdGen(gen);
    if (*s) return CmdSplit(split);
    if (*e) return CmdEnroll(enroll);
    if (*v) return CmdEval(eval);
    if (*b) return RunTable(bench, false);
    if (*a) return RunTable(ablate, true);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace srpl

int main(int argc, char** argv) { return srpl::Main(argc, argv); }
