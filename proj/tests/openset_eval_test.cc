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

#include "srpl/openset_eval.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "metric_oracles.h"

#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {
namespace {

using testing::BruteOscr;
using testing::PairwiseAuc;

ScoredUtterance T(double conf, bool correct) { return {conf, correct ? 1 : 0, 1}; }
ScoredUtterance O(double conf) { return {conf, 0, kOutlierClass}; }

struct RandomScores {
  std::vector<ScoredUtterance> targets, outliers;
  std::vector<double> tc, oc;
};

RandomScores Draw(Rng* rng, size_t max_n, int levels) {
  RandomScores s;
  const size_t nt = 1 + rng->Below(max_n), no = 1 + rng->Below(max_n);
  // Coarse levels force plenty of ties.
  auto conf = [&] { return levels > 0 ? static_cast<double>(rng->Below(static_cast<uint64_t>(levels))) / levels : rng->Uniform(); };
  for (size_t i = 0; i < nt; ++i) {
    s.targets.push_back(T(conf(), rng->Uniform() < 0.7));
    s.tc.push_back(s.targets.back().confidence);
  }
  for (size_t i = 0; i < no; ++i) {
    s.outliers.push_back(O(conf()));
    s.oc.push_back(s.outliers.back().confidence);
  }
  return s;
}

TEST(ClosedAccuracy, CountsAndErrors) {
  EXPECT_EQ(ClosedAccuracy({T(0.1, true), T(0.2, true)}), 1.0);
  EXPECT_EQ(ClosedAccuracy({T(0.1, true), T(0.2, true), T(0.3, false), T(0.9, true)}), 0.75);
  try {
    ClosedAccuracy({O(0.3)});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "no target utterances");
  }
}

TEST(Auc, HandExamples) {
  EXPECT_EQ(Auc({0.9, 0.8}, {0.1, 0.2}), 1.0);
  EXPECT_EQ(Auc({0.5, 0.5}, {0.5, 0.5, 0.5}), 0.5);
  EXPECT_EQ(Auc({0.9, 0.4}, {0.6, 0.1}), 0.75);
  EXPECT_THROW(Auc({}, {0.1}), DataError);
  EXPECT_THROW(Auc({0.1}, {}), DataError);
  EXPECT_THROW(Auc({NAN}, {0.1}), DataError);
}

TEST(Auc, MatchesPairwiseOracleExactly) {
  Rng rng(77);
  for (int t = 0; t < 1000; ++t) {
    const RandomScores s = Draw(&rng, 200, t % 3 == 0 ? 0 : 1 + t % 7);
    ASSERT_EQ(Auc(s.tc, s.oc), PairwiseAuc(s.tc, s.oc)) << t;
  }
}

TEST(Curve, HandEnumeratedTable) {
  // targets: 0.9 correct, 0.6 correct, 0.7 wrong; outliers 0.8, 0.5
  const auto curve = CcrFprCurve({T(0.9, true), T(0.6, true), T(0.7, false)}, {O(0.8), O(0.5)});
  const std::vector<CurvePoint> expected = {
      {-0.5, 2.0 / 3, 1.0}, {0.5, 2.0 / 3, 1.0}, {0.6, 2.0 / 3, 0.5}, {0.7, 1.0 / 3, 0.5},
      {0.8, 1.0 / 3, 0.5},  {0.9, 1.0 / 3, 0.0}, {1.9, 0.0, 0.0}};
  ASSERT_EQ(curve.size(), expected.size());
  for (size_t i = 0; i < curve.size(); ++i) {
    EXPECT_DOUBLE_EQ(curve[i].threshold, expected[i].threshold) << i;
    EXPECT_DOUBLE_EQ(curve[i].ccr, expected[i].ccr) << i;
    EXPECT_DOUBLE_EQ(curve[i].fpr, expected[i].fpr) << i;
  }
  // (0, 1/3), (0.5, 2/3), (1, 2/3)
  EXPECT_NEAR(Oscr(curve), 0.25 + 1.0 / 3, 1e-15);
}

TEST(Curve, SentinelsGiveExtremes) {
  const std::vector<ScoredUtterance> t = {T(0.3, true), T(0.4, false), T(0.5, true)};
  const auto curve = CcrFprCurve(t, {O(0.35), O(0.45)});
  EXPECT_EQ(curve.front().fpr, 1.0);
  EXPECT_EQ(curve.front().ccr, ClosedAccuracy(t));
  EXPECT_EQ(curve.back().fpr, 0.0);
  EXPECT_EQ(curve.back().ccr, 0.0);
  EXPECT_THROW(CcrFprCurve({}, {O(0.1)}), DataError);
}

TEST(Oscr, PerfectAndMalformed) {
  EXPECT_EQ(Oscr(CcrFprCurve({T(0.9, true), T(0.8, true)}, {O(0.1), O(0.2)})), 1.0);
  EXPECT_THROW(Oscr({}), DataError);
  EXPECT_THROW(Oscr({{0.0, 0.5, 0.2}, {1.0, 0.4, 1.0}}), DataError);
  EXPECT_THROW(Oscr({{0.0, 1.5, 0.0}, {1.0, 0.4, 1.0}}), DataError);
}

TEST(Oscr, MatchesBruteForceAndCurveProperties) {
  Rng rng(91);
  for (int t = 0; t < 300; ++t) {
    const RandomScores s = Draw(&rng, 60, t % 2 ? 0 : 1 + t % 5);
    const auto curve = CcrFprCurve(s.targets, s.outliers);
    const double oscr = Oscr(curve);
    ASSERT_NEAR(oscr, BruteOscr(s.targets, s.outliers), 1e-12) << t;
    double max_ccr = 0.0;
    for (size_t i = 0; i < curve.size(); ++i) {
      ASSERT_GE(curve[i].ccr, 0.0);
      ASSERT_LE(curve[i].fpr, 1.0);
      max_ccr = std::max(max_ccr, curve[i].ccr);
      if (i > 0) {
        ASSERT_LT(curve[i - 1].threshold, curve[i].threshold);
        ASSERT_LE(curve[i].ccr, curve[i - 1].ccr);
        ASSERT_LE(curve[i].fpr, curve[i - 1].fpr);
      }
    }
    ASSERT_LE(oscr, max_ccr + 1e-15);
    ASSERT_LE(oscr, ClosedAccuracy(s.targets) + 1e-15);
  }
}

TEST(Oscr, IndependentConfidenceGivesHalfAccuracy) {
  Rng rng(5);
  std::vector<ScoredUtterance> t, o;
  const double acc = 0.8;
  for (int i = 0; i < 10000; ++i) {
    t.push_back(T(rng.Uniform(), rng.Uniform() < acc));
    o.push_back(O(rng.Uniform()));
  }
  EXPECT_NEAR(Oscr(CcrFprCurve(t, o)), ClosedAccuracy(t) * 0.5, 0.02);
}

TEST(Metrics, RankInvariance) {
  Rng rng(13);
  const std::vector<double (*)(double)> transforms = {
      [](double x) { return std::exp(3.0 * x); }, [](double x) { return x * x * x + 2.0; },
      [](double x) { return std::log1p(x) - 7.0; }};
  for (int t = 0; t < 50; ++t) {
    RandomScores s = Draw(&rng, 80, t % 2 ? 0 : 6);
    const double auc = Auc(s.tc, s.oc);
    const double oscr = Oscr(CcrFprCurve(s.targets, s.outliers));
    for (auto f : transforms) {
      RandomScores m = s;
      for (auto& x : m.targets) x.confidence = f(x.confidence);
      for (auto& x : m.outliers) x.confidence = f(x.confidence);
      for (auto& x : m.tc) x = f(x);
      for (auto& x : m.oc) x = f(x);
      EXPECT_EQ(Auc(m.tc, m.oc), auc);
      EXPECT_NEAR(Oscr(CcrFprCurve(m.targets, m.outliers)), oscr, 1e-15);
    }
  }
}

TEST(Report, ConstantConfidenceAndMean) {
  const OpenSetReport r = MakeReport({T(0.5, true), T(0.5, false)}, {O(0.5), O(0.5), O(0.5)});
  EXPECT_EQ(r.auc, 0.5);
  EXPECT_EQ(r.closed_acc, 0.5);
  EXPECT_EQ(r.n_targets, 2u);
  EXPECT_EQ(r.n_outliers, 3u);
  for (double v : {r.auc, r.oscr, r.closed_acc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  OpenSetReport a, b;
  a.auc = 0.2;
  b.auc = 0.6;
  a.oscr = 1.0;
  EXPECT_DOUBLE_EQ(MeanReport({a, b}).auc, 0.4);
  EXPECT_DOUBLE_EQ(MeanReport({a, b}).oscr, 0.5);
  const auto j = ReportToJson(r);
  EXPECT_EQ(j.at("curve").size(), r.curve.size());
  EXPECT_EQ(CurveToCsv(r.curve).substr(0, 17), "threshold,ccr,fpr");
}

}  // namespace
}  // namespace srpl
