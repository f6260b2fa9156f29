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

#include "srpl/srpl_core.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srpl/binary_io.h"
#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

namespace {

constexpr std::string_view kHeadMagic = "SRPLHEAD";

// Logits of `emb` against the first `n` rows of `points`.
Vector PointLogits(const Matrix& points, int n, LogitKind kind, const Vector& emb) {
  Vector l(n);
  for (int j = 0; j < n; ++j) {
    if (kind == LogitKind::kInnerProduct) {
      l(j) = -points.row(j).dot(emb);
    } else {
      l(j) = -(points.row(j).transpose() - emb).squaredNorm();
    }
  }
  return l;
}

// Pushes dLoss/dlogit back onto the embedding and the first n points.
void PointLogitsBackward(const Matrix& points, int n, LogitKind kind, const Vector& emb,
                         const Vector& d_logits, Vector* d_emb, Matrix* d_points) {
  for (int j = 0; j < n; ++j) {
    const double g = d_logits(j);
    if (g == 0.0) continue;
    if (kind == LogitKind::kInnerProduct) {
      *d_emb -= g * points.row(j).transpose();
      d_points->row(j) -= g * emb.transpose();
    } else {
      const Vector diff = emb - points.row(j).transpose();
      *d_emb -= 2.0 * g * diff;
      d_points->row(j) += 2.0 * g * diff.transpose();
    }
  }
}

void CheckDim(const SrplHead& head, Eigen::Index d) {
  if (d != head.dim()) {
    throw DataError("embedding dimension mismatch: head has " + std::to_string(head.dim()) +
                    ", got " + std::to_string(d));
  }
}

int CenterClasses(const SrplHead& head, const LossOptions& opts) {
  return opts.syn_centers ? head.n_points() : head.k_known;
}

// The per-sample terms accumulate `scale * gradient` into the outputs and
// return the unscaled value.

double AccumS(const SrplHead& head, const LossOptions& opts, const Vector& emb, int label,
              double scale, Vector* d_emb, HeadGradients* g) {
  const int n = head.n_points();
  if (label < 0 || label >= n) throw ConfigError("label out of range: " + std::to_string(label));
  const Vector l = PointLogits(head.rps, n, opts.logits, emb);
  const double value = std::max(0.0, LogSumExp(l) - l(label));
  Vector dl = Softmax(l);
  dl(label) -= 1.0;
  PointLogitsBackward(head.rps, n, opts.logits, emb, scale * dl, d_emb, &g->rps);
  return value;
}

double AccumR(const SrplHead& head, const LossOptions& opts, const Vector& emb, int label,
              double scale, Vector* d_emb, HeadGradients* g) {
  if (label < 0 || label >= head.k_known) {
    throw ConfigError("label out of range: " + std::to_string(label));
  }
  const int r = opts.shared_radius ? 0 : label;
  const Vector diff = emb - head.rps.row(label).transpose();
  const double margin = diff.squaredNorm() - head.radii(r);
  if (!(margin > 0.0)) return 0.0;
  *d_emb += 2.0 * scale * diff;
  g->rps.row(label) -= 2.0 * scale * diff.transpose();
  g->radii(r) -= scale;
  return margin;
}

double AccumC(const SrplHead& head, const LossOptions& opts, const Vector& emb, int label,
              double scale, Vector* d_emb, HeadGradients* g) {
  const int n = CenterClasses(head, opts);
  if (label < 0 || label >= n) throw ConfigError("label out of range: " + std::to_string(label));
  Vector l(n);
  for (int j = 0; j < n; ++j) l(j) = head.cps.row(j).dot(emb);
  const double value = std::max(0.0, LogSumExp(l) - l(label));
  Vector dl = Softmax(l);
  dl(label) -= 1.0;
  dl *= scale;
  for (int j = 0; j < n; ++j) {
    *d_emb += dl(j) * head.cps.row(j).transpose();
    g->cps.row(j) += dl(j) * emb.transpose();
  }
  return value;
}

// Entropy value; accumulates scale * dH.
double AccumH(const SrplHead& head, const LossOptions& opts, const Vector& emb, double scale,
              Vector* d_emb, HeadGradients* g) {
  const int k = head.k_known;
  const Vector l = PointLogits(head.rps, k, opts.logits, emb);
  const double log_z = LogSumExp(l);
  const Vector log_p = l.array() - log_z;
  const Vector p = log_p.array().exp();
  const double h_raw = -(p.array() * log_p.array()).sum();
  // dH/dl_j = -p_j (log p_j + H)
  const Vector dl = -(p.array() * (log_p.array() + h_raw));
  PointLogitsBackward(head.rps, k, opts.logits, emb, scale * dl, d_emb, &g->rps);
  return std::clamp(h_raw, 0.0, std::log(static_cast<double>(k)));
}

SampleLoss MakeSample(const SrplHead& head) {
  SampleLoss s;
  s.d_emb = Vector::Zero(head.dim());
  s.d_head = ZeroGradients(head);
  return s;
}

}  // namespace

void SrplHead::Validate() const {
  if (k_known < 2) throw ConfigError("head needs at least 2 known classes");
  if (m_syn < 0) throw ConfigError("negative SynRP count");
  if (rps.rows() != n_points() || cps.rows() != n_points() || cps.cols() != rps.cols() ||
      radii.size() != k_known) {
    throw ConfigError("head shapes are inconsistent");
  }
}

std::vector<std::span<double>> SrplHead::ParameterBlocks() {
  return {{rps.data(), static_cast<size_t>(rps.size())},
          {cps.data(), static_cast<size_t>(cps.size())},
          {radii.data(), static_cast<size_t>(radii.size())}};
}

std::vector<std::span<const double>> SrplHead::ParameterBlocks() const {
  return {{rps.data(), static_cast<size_t>(rps.size())},
          {cps.data(), static_cast<size_t>(cps.size())},
          {radii.data(), static_cast<size_t>(radii.size())}};
}

size_t SrplHead::ParameterCount() const {
  return static_cast<size_t>(rps.size() + cps.size() + radii.size());
}

HeadGradients ZeroGradients(const SrplHead& head) {
  HeadGradients g;
  g.k_known = head.k_known;
  g.m_syn = head.m_syn;
  g.rps = Matrix::Zero(head.rps.rows(), head.rps.cols());
  g.cps = Matrix::Zero(head.cps.rows(), head.cps.cols());
  g.radii = Vector::Zero(head.radii.size());
  return g;
}

void Axpy(double scale, const SrplHead& src, SrplHead* dst) {
  dst->rps += scale * src.rps;
  dst->cps += scale * src.cps;
  dst->radii += scale * src.radii;
}

bool AllFinite(const SrplHead& head) {
  return head.rps.allFinite() && head.cps.allFinite() && head.radii.allFinite();
}

void Hyperparameters::Validate() const {
  for (double v : {lambda_r, lambda_c, lambda_ns}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("lambda weights must be finite and >= 0");
  }
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0 (0 = full batch)");
}

Vector RpLogits(const SrplHead& head, const Vector& emb, LogitKind kind) {
  head.Validate();
  CheckDim(head, emb.size());
  return PointLogits(head.rps, head.k_known, kind, emb);
}

Vector RpProbabilities(const SrplHead& head, const Vector& emb, LogitKind kind) {
  return Softmax(RpLogits(head, emb, kind));
}

SampleLoss LossS(const SrplHead& head, const Vector& emb, int label, const LossOptions& opts) {
  head.Validate();
  CheckDim(head, emb.size());
  SampleLoss s = MakeSample(head);
  s.value = AccumS(head, opts, emb, label, 1.0, &s.d_emb, &s.d_head);
  return s;
}

SampleLoss LossR(const SrplHead& head, const Vector& emb, int label, const LossOptions& opts) {
  head.Validate();
  CheckDim(head, emb.size());
  SampleLoss s = MakeSample(head);
  s.value = AccumR(head, opts, emb, label, 1.0, &s.d_emb, &s.d_head);
  return s;
}

SampleLoss LossC(const SrplHead& head, const Vector& emb, int label, const LossOptions& opts) {
  head.Validate();
  CheckDim(head, emb.size());
  SampleLoss s = MakeSample(head);
  s.value = AccumC(head, opts, emb, label, 1.0, &s.d_emb, &s.d_head);
  return s;
}

SampleLoss EntropyNeg(const SrplHead& head, const Vector& emb, const LossOptions& opts) {
  head.Validate();
  CheckDim(head, emb.size());
  SampleLoss s = MakeSample(head);
  s.value = AccumH(head, opts, emb, 1.0, &s.d_emb, &s.d_head);
  return s;
}

LossResult SrplLoss(const SrplHead& head, const Hyperparameters& hyper, const LossOptions& opts,
                    const KnownBatch& known) {
  return SrplPlusLoss(head, hyper, opts, known, NegativeBatch{Matrix(0, head.dim()), {}});
}

LossResult SrplPlusLoss(const SrplHead& head, const Hyperparameters& hyper,
                        const LossOptions& opts, const KnownBatch& known,
                        const NegativeBatch& negatives) {
  head.Validate();
  const Eigen::Index n_known = known.emb.rows();
  const Eigen::Index n_neg = negatives.emb.rows();
  if (n_known == 0) throw DataError("empty batch");
  if (static_cast<size_t>(n_known) != known.labels.size()) {
    throw DataError("known batch has mismatched label count");
  }
  CheckDim(head, known.emb.cols());
  if (n_neg > 0) CheckDim(head, negatives.emb.cols());
  const bool neg_labeled = opts.label_negatives && !negatives.pseudo_labels.empty() && n_neg > 0;
  if (neg_labeled && static_cast<size_t>(n_neg) != negatives.pseudo_labels.size()) {
    throw DataError("negative batch has mismatched pseudo-label count");
  }
  if (neg_labeled && head.m_syn == 0) {
    throw ConfigError("labeled negatives require synthesized points (m_syn > 0)");
  }
  const bool neg_in_c = neg_labeled && opts.syn_centers;

  const double n_s = static_cast<double>(n_known + (neg_labeled ? n_neg : 0));
  const double n_r = static_cast<double>(n_known);
  const double n_c = static_cast<double>(n_known + (neg_in_c ? n_neg : 0));
  const double n_h = static_cast<double>(n_neg);

  LossResult res;
  res.d_known = Matrix::Zero(n_known, head.dim());
  res.d_neg = Matrix::Zero(n_neg, head.dim());
  res.d_head = ZeroGradients(head);
  std::vector<double> vs, vr, vc, vh;

  for (Eigen::Index i = 0; i < n_known; ++i) {
    const Vector e = known.emb.row(i).transpose();
    const int y = known.labels[static_cast<size_t>(i)];
    if (y < 0 || y >= head.k_known) throw ConfigError("known label out of range");
    Vector d = Vector::Zero(head.dim());
    vs.push_back(AccumS(head, opts, e, y, 1.0 / n_s, &d, &res.d_head));
    vr.push_back(AccumR(head, opts, e, y, hyper.lambda_r / n_r, &d, &res.d_head));
    vc.push_back(AccumC(head, opts, e, y, hyper.lambda_c / n_c, &d, &res.d_head));
    res.d_known.row(i) = d.transpose();
  }
  for (Eigen::Index i = 0; i < n_neg; ++i) {
    const Vector e = negatives.emb.row(i).transpose();
    Vector d = Vector::Zero(head.dim());
    if (neg_labeled) {
      const int m = negatives.pseudo_labels[static_cast<size_t>(i)];
      if (m < 0 || m >= head.m_syn) throw ConfigError("pseudo label out of range");
      vs.push_back(AccumS(head, opts, e, head.k_known + m, 1.0 / n_s, &d, &res.d_head));
      if (neg_in_c) {
        vc.push_back(AccumC(head, opts, e, head.k_known + m, hyper.lambda_c / n_c, &d,
                            &res.d_head));
      }
    }
    vh.push_back(AccumH(head, opts, e, -hyper.lambda_ns / n_h, &d, &res.d_head));
    res.d_neg.row(i) = d.transpose();
  }

  LossBreakdown& b = res.breakdown;
  b.l_s = OrderFreeMean(std::move(vs));
  b.l_r = OrderFreeMean(std::move(vr));
  b.l_c = OrderFreeMean(std::move(vc));
  b.h_neg = OrderFreeMean(std::move(vh));
  b.total = b.l_s + hyper.lambda_r * b.l_r + hyper.lambda_c * b.l_c - hyper.lambda_ns * b.h_neg;
  return res;
}

SrplHead InitHead(int k_known, int m_syn, int dim, const std::vector<Matrix>& known_groups,
                  const std::vector<Matrix>& negative_groups, uint64_t seed,
                  double initial_radius) {
  if (k_known < 2) throw ConfigError("head needs at least 2 known classes");
  if (m_syn < 0 || dim < 1) throw ConfigError("invalid head shape");
  if (known_groups.size() != static_cast<size_t>(k_known) ||
      negative_groups.size() != static_cast<size_t>(m_syn)) {
    throw ConfigError("group count does not match class count");
  }
  if (!(initial_radius >= 0.0)) throw ConfigError("initial radius must be >= 0");
  SrplHead h;
  h.k_known = k_known;
  h.m_syn = m_syn;
  h.rps.resize(k_known + m_syn, dim);
  h.cps.resize(k_known + m_syn, dim);
  h.radii = Vector::Constant(k_known, initial_radius);

  Rng rng(seed);
  for (Eigen::Index r = 0; r < h.rps.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) h.rps(r, c) = 0.01 * rng.Normal();
  }
  auto set_mean = [&](const Matrix& group, Eigen::Index row, const char* what) {
    if (group.rows() == 0) throw DataError(std::string("empty class in ") + what);
    if (group.cols() != dim) throw DataError("group dimension mismatch");
    h.cps.row(row) = group.colwise().mean();
  };
  for (int k = 0; k < k_known; ++k) set_mean(known_groups[k], k, "known classes");
  for (int m = 0; m < m_syn; ++m) set_mean(negative_groups[m], k_known + m, "negative classes");
  return h;
}

std::vector<int> KMeansLabels(const Matrix& rows, int k, uint64_t seed, int iterations) {
  const Eigen::Index n = rows.rows();
  std::vector<int> labels(static_cast<size_t>(n), 0);
  if (n == 0) return labels;
  if (k < 1) throw ConfigError("k-means needs k >= 1");
  const int kk = static_cast<int>(std::min<Eigen::Index>(k, n));
  Rng rng(seed);
  const std::vector<size_t> perm = rng.Permutation(static_cast<size_t>(n));
  Matrix centers(kk, rows.cols());
  for (int c = 0; c < kk; ++c) centers.row(c) = rows.row(static_cast<Eigen::Index>(perm[c]));

  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < kk; ++c) {
        const double d = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      labels[static_cast<size_t>(i)] = arg;
    }
    Matrix sums = Matrix::Zero(kk, rows.cols());
    std::vector<int> counts(static_cast<size_t>(kk), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<size_t>(i)]) += rows.row(i);
      ++counts[static_cast<size_t>(labels[static_cast<size_t>(i)])];
    }
    for (int c = 0; c < kk; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
    }
  }
  // Drop ids of clusters that ended empty so labels are dense in [0, k').
  std::vector<int> remap(static_cast<size_t>(kk), -1);
  int next = 0;
  for (int& l : labels) {
    if (remap[static_cast<size_t>(l)] < 0) remap[static_cast<size_t>(l)] = next++;
    l = remap[static_cast<size_t>(l)];
  }
  return labels;
}

std::string SerializeHead(const SrplHead& head) {
  head.Validate();
  ByteWriter w;
  w.Magic(kHeadMagic);
  w.U32(static_cast<uint32_t>(head.k_known));
  w.U32(static_cast<uint32_t>(head.m_syn));
  w.U32(static_cast<uint32_t>(head.dim()));
  for (auto block : head.ParameterBlocks()) {
    for (double v : block) w.F64(v);
  }
  return w.bytes();
}

SrplHead DeserializeHead(std::string_view bytes) {
  ByteReader in(bytes);
  in.ExpectMagic(kHeadMagic);
  SrplHead h;
  h.k_known = static_cast<int>(in.U32());
  h.m_syn = static_cast<int>(in.U32());
  const int dim = static_cast<int>(in.U32());
  if (h.k_known < 2 || h.k_known > (1 << 20) || h.m_syn < 0 || h.m_syn > (1 << 20) || dim < 1 ||
      dim > (1 << 20)) {
    throw DataError("implausible head shape in checkpoint");
  }
  h.rps.resize(h.n_points(), dim);
  h.cps.resize(h.n_points(), dim);
  h.radii.resize(h.k_known);
  for (auto block : h.ParameterBlocks()) {
    for (double& v : block) v = in.F64();
  }
  if (!in.AtEnd()) throw DataError("trailing bytes in head checkpoint");
  if (!AllFinite(h)) throw DataError("non-finite parameter in head checkpoint");
  return h;
}

}  // namespace srpl
