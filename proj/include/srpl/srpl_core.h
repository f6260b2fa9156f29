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

#ifndef SRPL_SRPL_CORE_H_
#define SRPL_SRPL_CORE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srpl/numeric.h"

namespace srpl {

// Learnable geometry of the classifier. Rows [0, K) of `rps`/`cps` belong to
// the enrolled speakers; rows [K, K+M) are the synthesized points attached to
// negative pseudo-speakers.
struct SrplHead {
  int k_known = 0;
  int m_syn = 0;
  Matrix rps;     // (K+M) x D reciprocal points
  Matrix cps;     // (K+M) x D center points
  Vector radii;   // K, nonnegative

  int dim() const { return static_cast<int>(rps.cols()); }
  int n_points() const { return k_known + m_syn; }

  // Throws ConfigError unless K >= 2, M >= 0 and the shapes agree.
  void Validate() const;

  std::vector<std::span<double>> ParameterBlocks();
  std::vector<std::span<const double>> ParameterBlocks() const;
  size_t ParameterCount() const;

  bool operator==(const SrplHead&) const = default;
};

// dLoss/d(head), same shapes as the head.
using HeadGradients = SrplHead;
HeadGradients ZeroGradients(const SrplHead& head);
void Axpy(double scale, const SrplHead& src, SrplHead* dst);
bool AllFinite(const SrplHead& head);

struct Hyperparameters {
  double lambda_r = 1.0;
  double lambda_c = 1.0;
  double lambda_ns = 1.0;
  double learning_rate = 0.1;
  int epochs = 100;
  int batch_size = 10;  // 0 = full batch

  void Validate() const;
};

enum class LogitKind {
  kInnerProduct,     // logit_k = -<emb, RP_k>
  kSquaredDistance,  // logit_k = -||emb - RP_k||^2
};

struct LossOptions {
  LogitKind logits = LogitKind::kInnerProduct;
  // SynCPs join the center loss as extra classes.
  bool syn_centers = true;
  // Labeled negatives also join l_s (and l_c when syn_centers) as members of
  // class K + pseudo_label. Off by default: negatives then only drive the
  // entropy term, and SynRPs/SynCPs act as competitors for known samples.
  bool label_negatives = false;
  // All classes use radii(0).
  bool shared_radius = false;
};

struct LossBreakdown {
  double l_s = 0.0;
  double l_r = 0.0;
  double l_c = 0.0;
  double h_neg = 0.0;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

// Logits over the K known reciprocal points.
Vector RpLogits(const SrplHead& head, const Vector& emb,
                LogitKind kind = LogitKind::kInnerProduct);
Vector RpProbabilities(const SrplHead& head, const Vector& emb,
                       LogitKind kind = LogitKind::kInnerProduct);

// One sample's value of a loss term with its gradients.
struct SampleLoss {
  double value = 0.0;
  Vector d_emb;
  HeadGradients d_head;
};

// -log softmax over all K+M reciprocal-point logits at `label`.
SampleLoss LossS(const SrplHead& head, const Vector& emb, int label,
                 const LossOptions& opts = {});
// max(||emb - RP_k||^2 - R_k, 0) for a known label k.
SampleLoss LossR(const SrplHead& head, const Vector& emb, int label,
                 const LossOptions& opts = {});
// -log softmax over +<emb, CP_i> at `label`; the class set is the known
// centers, plus SynCPs when opts.syn_centers is set.
SampleLoss LossC(const SrplHead& head, const Vector& emb, int label,
                 const LossOptions& opts = {});
// Shannon entropy of the known-speaker distribution at `emb`.
SampleLoss EntropyNeg(const SrplHead& head, const Vector& emb, const LossOptions& opts = {});

struct KnownBatch {
  Matrix emb;               // n x D
  std::vector<int> labels;  // in [0, K)
};

struct NegativeBatch {
  Matrix emb;                      // n x D, possibly 0 rows
  std::vector<int> pseudo_labels;  // empty, or one label in [0, M) per row
};

struct LossResult {
  LossBreakdown breakdown;
  Matrix d_known;  // dTotal/d(known emb)
  Matrix d_neg;    // dTotal/d(negative emb)
  HeadGradients d_head;
};

// Batch means of each term; h_neg = 0.
LossResult SrplLoss(const SrplHead& head, const Hyperparameters& hyper, const LossOptions& opts,
                    const KnownBatch& known);

// total = l_s + lambda_r l_r + lambda_c l_c - lambda_ns h_neg. With
// opts.label_negatives, labeled negatives join the l_s and l_c means too.
LossResult SrplPlusLoss(const SrplHead& head, const Hyperparameters& hyper,
                        const LossOptions& opts, const KnownBatch& known,
                        const NegativeBatch& negatives);

// CPs start at class means, SynCPs at pseudo-class means, RPs and SynRPs at
// N(0, 0.01^2) draws, radii at `initial_radius`.
SrplHead InitHead(int k_known, int m_syn, int dim, const std::vector<Matrix>& known_groups,
                  const std::vector<Matrix>& negative_groups, uint64_t seed,
                  double initial_radius = 0.0);

// Seeded Lloyd k-means over rows; returns a cluster id per row in [0, k').
// k' = min(k, rows). Empty clusters keep their previous center.
std::vector<int> KMeansLabels(const Matrix& rows, int k, uint64_t seed, int iterations = 25);

// "SRPLHEAD" checkpoint: u32 K, M, D then f64 RPs, CPs (row-major), radii.
std::string SerializeHead(const SrplHead& head);
SrplHead DeserializeHead(std::string_view bytes);

}  // namespace srpl

#endif  // SRPL_SRPL_CORE_H_
