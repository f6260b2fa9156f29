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

#include <gtest/gtest.h>

#include "srpl/error.h"

namespace srpl {
namespace {

BenchOptions Small() {
  BenchOptions o;
  o.max_folds = 2;
  o.seeds = {0, 1};
  o.base.hyper.epochs = 5;
  o.negative_spec.n_speakers = 3;
  o.negative_spec.utterances_per_speaker = 10;
  for (const char* m : {"softmax", "srpl", "srpl_plus", "srpl_plus_real"}) {
    o.variants.push_back(VariantForMode(m, false));
  }
  return o;
}

const Corpus& SmallCorpus() {
  static const Corpus c = Generate({50, 25, 8, 0.2, 1.0, 0});
  return c;
}

TEST(Bench, ShapeAndRanges) {
  const BenchResult r = RunBench(SmallCorpus(), Small());
  ASSERT_EQ(r.variants.size(), 4u);
  for (const auto& v : r.variants) {
    EXPECT_EQ(v.runs.size(), 4u);
    EXPECT_LE(v.min_oscr, v.mean.oscr);
    EXPECT_GE(v.max_oscr, v.mean.oscr);
    EXPECT_GE(v.mean.auc, 0.0);
    EXPECT_LE(v.mean.auc, 1.0);
  }
  const std::string table = BenchTable(r);
  EXPECT_NE(table.find("SRPL+(RealNeg)"), std::string::npos);
  EXPECT_NE(AblationTable(r).find("Tuning cost"), std::string::npos);
}

TEST(Bench, DeterministicAcrossThreadCounts) {
  BenchOptions o = Small();
  o.threads = 1;
  const std::string a = BenchToJson(RunBench(SmallCorpus(), o)).dump();
  EXPECT_EQ(BenchToJson(RunBench(SmallCorpus(), o)).dump(), a);
  o.threads = 3;
  EXPECT_EQ(BenchToJson(RunBench(SmallCorpus(), o)).dump(), a);
}

TEST(Bench, SingleFoldIsSubsetOfFull) {
  BenchOptions o = Small();
  const BenchResult full = RunBench(SmallCorpus(), o);
  o.max_folds = 1;
  o.seeds = {0};
  const BenchResult one = RunBench(SmallCorpus(), o);
  for (size_t v = 0; v < one.variants.size(); ++v) {
    ASSERT_EQ(one.variants[v].runs.size(), 1u);
    EXPECT_EQ(one.variants[v].runs[0].report.oscr, full.variants[v].runs[0].report.oscr);
  }
}

TEST(Variants, ModesAndAblations) {
  EXPECT_EQ(VariantForMode("srpl_plus", true).negatives, NegativeSource::kFile);
  EXPECT_EQ(VariantForMode("srpl_plus", false).negatives, NegativeSource::kSynthetic);
  EXPECT_EQ(VariantForMode("srpl_plus_real", false).negatives, NegativeSource::kReal);
  EXPECT_THROW(VariantForMode("svm", false), ConfigError);
  const auto ab = AblationVariants();
  ASSERT_EQ(ab.size(), 5u);
  const TrainConfig no_cf = ConfigForVariant(ab[3], {});
  EXPECT_EQ(no_cf.hyper.lambda_c, 0.0);
  EXPECT_EQ(no_cf.loss.logits, LogitKind::kInnerProduct);
  EXPECT_EQ(ConfigForVariant(ab[4], {}).loss.logits, LogitKind::kSquaredDistance);
  EXPECT_FALSE(ConfigForVariant(ab[1], {}).loss.syn_centers);
}

TEST(Bench, DivergedRunsAreFlagged) {
  BenchOptions o = Small();
  o.variants = {VariantForMode("prototype", false)};
  o.max_folds = 5;
  o.seeds = {7};
  o.base.hyper.epochs = 100;
  const BenchResult r = RunBench(Generate({}), o);
  const VariantResult& v = r.variants.front();
  int flagged = 0;
  for (const auto& run : v.runs) flagged += run.diverged ? 1 : 0;
  EXPECT_EQ(flagged, v.n_diverged);
  // Fold 3 of this seed is a known divergence under the default regimen.
  ASSERT_EQ(v.n_diverged, 1);
  EXPECT_TRUE(v.runs[3].diverged);
  EXPECT_NE(BenchTable(r).find("1 of 5 ProtoTypeTune runs diverged"), std::string::npos);
  EXPECT_EQ(BenchToJson(r)["variants"][0]["diverged"], 1);
  o.base.hyper.learning_rate = 1e6;
  EXPECT_THROW(RunBench(SmallCorpus(), o), NumericError);
}

TEST(Bench, Errors) {
  BenchOptions o = Small();
  o.variants.clear();
  EXPECT_THROW(RunBench(SmallCorpus(), o), ConfigError);
  o = Small();
  o.negative_file = GenerateNegatives({1, 2, 5, 0.2, 1.0, 0});
  EXPECT_THROW(RunBench(SmallCorpus(), o), DataError);
}

}  // namespace
}  // namespace srpl
