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

#include <fmt/format.h>

#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

namespace {

constexpr uint64_t kCenterStream = 0;
constexpr uint64_t kNoiseStream = 1;
constexpr uint64_t kNegativeCenterStream = 0x6e6567;  // "neg"
constexpr uint64_t kNegativeNoiseStream = 0x6e6568;

Matrix DrawCenters(int n, int dim, double radius, uint64_t seed) {
  Rng rng(seed);
  Matrix c(n, dim);
  for (int s = 0; s < n; ++s) {
    double norm = 0.0;
    do {
      for (int d = 0; d < dim; ++d) c(s, d) = rng.Normal();
      norm = c.row(s).norm();
    } while (norm == 0.0);
    c.row(s) *= radius / norm;
  }
  return c;
}

std::vector<EmbeddingRecord> DrawRecords(const ClusterSpec& spec, const Matrix& centers,
                                         uint64_t noise_seed, const char* prefix) {
  Rng rng(noise_seed);
  std::vector<EmbeddingRecord> out;
  out.reserve(static_cast<size_t>(spec.n_speakers) * spec.utterances_per_speaker);
  for (int s = 0; s < spec.n_speakers; ++s) {
    const std::string spk = fmt::format("{}{:04d}", prefix, s);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      EmbeddingRecord r;
      r.speaker_id = spk;
      r.utterance_id = fmt::format("{}_u{:04d}", spk, u);
      r.vector.resize(static_cast<size_t>(spec.dim));
      for (int d = 0; d < spec.dim; ++d) {
        r.vector[static_cast<size_t>(d)] = static_cast<float>(centers(s, d) + spec.within_spread * rng.Normal());
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

void ClusterSpec::Validate() const {
  if (n_speakers < 1 || utterances_per_speaker < 1) throw ConfigError("cluster counts must be >= 1");
  if (dim < 2) throw ConfigError("cluster dimension must be >= 2");
  if (!(within_spread > 0.0) || !(between_spread > 0.0) || !std::isfinite(within_spread) ||
      !std::isfinite(between_spread)) {
    throw ConfigError("cluster spreads must be finite and > 0");
  }
}

Matrix SpeakerCenters(const ClusterSpec& spec) {
  spec.Validate();
  return DrawCenters(spec.n_speakers, spec.dim, spec.between_spread, Rng::Mix(spec.seed, kCenterStream));
}

Corpus Generate(const ClusterSpec& spec) {
  const Matrix centers = SpeakerCenters(spec);
  auto records = DrawRecords(spec, centers, Rng::Mix(spec.seed, kNoiseStream), "spk");
  return Corpus::FromRecords(std::move(records));
}

std::vector<EmbeddingRecord> GenerateNegatives(const ClusterSpec& spec) {
  if (spec.n_speakers == 0) return {};
  spec.Validate();
  const Matrix centers = DrawCenters(spec.n_speakers, spec.dim, spec.between_spread,
                                     Rng::Mix(spec.seed, kNegativeCenterStream));
  auto records = DrawRecords(spec, centers, Rng::Mix(spec.seed, kNegativeNoiseStream), "neg");
  for (auto& r : records) r.tag = Tag::kNegative;
  ValidateRecords(records);
  return records;
}

}  // namespace srpl
