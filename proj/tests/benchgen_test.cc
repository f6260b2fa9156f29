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

#include "srpl/benchgen.h"

#include <cmath>

#include <gtest/gtest.h>

#include "srpl/error.h"

namespace srpl {
namespace {

TEST(Generate, CountsIdsAndDimension) {
  const Corpus c = Generate({50, 25, 32, 0.2, 1.0, 0});
  EXPECT_EQ(c.size(), 1250u);
  EXPECT_EQ(c.dimension(), 32);
  EXPECT_EQ(c.speakers().size(), 50u);
  EXPECT_EQ(c[0].speaker_id, "spk0000");
  EXPECT_EQ(c[0].utterance_id, "spk0000_u0000");
  EXPECT_EQ(c[1249].utterance_id, "spk0049_u0024");
}

TEST(Generate, DeterministicPerSeed) {
  const ClusterSpec spec{6, 4, 5, 0.3, 1.0, 9};
  EXPECT_EQ(Generate(spec).records(), Generate(spec).records());
  ClusterSpec other = spec;
  other.seed = 10;
  EXPECT_NE(Generate(other).records(), Generate(spec).records());
}

TEST(Generate, CentersOnSphere) {
  const Matrix centers = SpeakerCenters({20, 1, 8, 0.1, 2.5, 3});
  for (Eigen::Index s = 0; s < centers.rows(); ++s) EXPECT_NEAR(centers.row(s).norm(), 2.5, 1e-12);
}

TEST(Generate, TinySpreadCollapsesOntoCenter) {
  const ClusterSpec spec{3, 5, 4, 1e-30, 1.0, 2};
  const Matrix centers = SpeakerCenters(spec);
  const Corpus c = Generate(spec);
  for (size_t i = 0; i < c.size(); ++i) {
    for (int d = 0; d < 4; ++d) {
      EXPECT_EQ(c[i].vector[static_cast<size_t>(d)], static_cast<float>(centers(static_cast<Eigen::Index>(i / 5), d)));
    }
  }
}

TEST(Generate, SpeakerMeanApproachesCenter) {
  const int n = 4000;
  const ClusterSpec spec{3, n, 6, 0.5, 1.0, 4};
  const Matrix centers = SpeakerCenters(spec);
  const Corpus c = Generate(spec);
  for (size_t s = 0; s < 3; ++s) {
    const Matrix rows = c.Rows(c.utterances_of(s));
    const Vector mean = rows.colwise().mean().transpose();
    for (int d = 0; d < 6; ++d) {
      EXPECT_NEAR(mean(d), centers(static_cast<Eigen::Index>(s), d), 3 * 0.5 / std::sqrt(n));
    }
  }
}

TEST(Generate, InvalidSpecs) {
  EXPECT_THROW(Generate({0, 5, 4, 0.1, 1.0, 0}), ConfigError);
  EXPECT_THROW(Generate({2, 5, 4, 0.0, 1.0, 0}), ConfigError);
  EXPECT_THROW(Generate({2, 5, 4, 0.1, -1.0, 0}), ConfigError);
  EXPECT_THROW(Generate({2, 5, 1, 0.1, 1.0, 0}), ConfigError);
}

TEST(Negatives, ThousandTaggedAndEmpty) {
  const auto negs = GenerateNegatives({10, 100, 32, 0.2, 1.0, 0});
  ASSERT_EQ(negs.size(), 1000u);
  for (const auto& r : negs) EXPECT_EQ(r.tag, Tag::kNegative);
  EXPECT_EQ(negs.front().speaker_id, "neg0000");
  EXPECT_TRUE(GenerateNegatives({0, 100, 32, 0.2, 1.0, 0}).empty());
  EXPECT_EQ(GenerateNegatives({2, 3, 4, 0.2, 1.0, 5}), GenerateNegatives({2, 3, 4, 0.2, 1.0, 5}));
}

TEST(Negatives, IndependentOfCorpusWithSameSeed) {
  const ClusterSpec spec{2, 3, 4, 0.2, 1.0, 5};
  const Corpus c = Generate(spec);
  const auto negs = GenerateNegatives(spec);
  EXPECT_NE(c[0].vector, negs[0].vector);
}

TEST(Generate, PassesCorpusValidation) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_NO_THROW(Corpus::FromRecords(Generate({7, 3, 5, 0.4, 1.0, seed}).records()));
  }
}

}  // namespace
}  // namespace srpl
