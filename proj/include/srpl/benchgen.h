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

#ifndef SRPL_BENCHGEN_H_
#define SRPL_BENCHGEN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "srpl/embedding_io.h"

namespace srpl {

// Each speaker is a spherical Gaussian whose center lies on the sphere of
// radius `between_spread`.
struct ClusterSpec {
  int n_speakers = 50;
  int utterances_per_speaker = 25;
  int dim = 32;
  double within_spread = 0.2;
  double between_spread = 1.0;
  uint64_t seed = 0;

  void Validate() const;
};

// Speaker centers in generation order.
Matrix SpeakerCenters(const ClusterSpec& spec);

// Speakers "spk0000".., utterances "spk0000_u0000".., speaker-major order.
Corpus Generate(const ClusterSpec& spec);

// Pseudo-speaker pool ("neg0000"..), tagged negative. Centers come from a
// stream separate from Generate's, so a shared seed does not reuse centers.
// n_speakers = 0 gives an empty pool.
std::vector<EmbeddingRecord> GenerateNegatives(const ClusterSpec& spec);

}  // namespace srpl

#endif  // SRPL_BENCHGEN_H_
