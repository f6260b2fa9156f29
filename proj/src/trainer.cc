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

#include "srpl/trainer.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

namespace {

// Independent random streams derived from the run seed.
enum Stream : uint64_t {
  kShuffleStream = 1,
  kNegativeStream = 2,
  kAdapterStream = 3,
  kHeadStream = 4,
  kClassifierStream = 5,
};

struct Params {
  AdapterNetwork adapter;
  SrplHead head;
  LinearClassifier classifier;
};

// Adapter output plus the optional normalisation, keeping what backward needs.
struct Embedded {
  ForwardCache cache;
  Matrix emb;
};

Embedded EmbedWithCache(const AdapterNetwork& net, bool normalize, const Matrix& x) {
  Embedded e;
  e.cache = ForwardWithCache(net, x);
  e.emb = normalize ? NormalizeRows(e.cache.output) : e.cache.output;
  return e;
}

AdapterGradients BackwardThrough(const AdapterNetwork& net, bool normalize, const Embedded& e,
                                 const Matrix& d_emb) {
  return Backward(net, e.cache, normalize ? NormalizeRowsBackward(e.cache.output, d_emb) : d_emb);
}

std::vector<int> Select(const std::vector<int>& v, const std::vector<size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(v[i]);
  return out;
}

Matrix SelectRows(const Matrix& m, const std::vector<size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

// Draws `count` pool indices; without replacement when the pool is big enough.
std::vector<size_t> SampleNegatives(size_t pool, size_t count, Rng* rng) {
  std::vector<size_t> out;
  out.reserve(count);
  if (pool >= count) {
    std::vector<size_t> idx(pool);
    for (size_t i = 0; i < pool; ++i) idx[i] = i;
    for (size_t i = 0; i < count; ++i) {
      const size_t j = i + static_cast<size_t>(rng->Below(pool - i));
      std::swap(idx[i], idx[j]);
      out.push_back(idx[i]);
    }
  } else {
    for (size_t i = 0; i < count; ++i) out.push_back(static_cast<size_t>(rng->Below(pool)));
  }
  return out;
}

// Cross-entropy over logit rows; returns per-row losses and writes (P - Y) / n.
std::vector<double> CrossEntropy(const Matrix& logits, const std::vector<int>& labels,
                                 Matrix* d_logits) {
  const Eigen::Index n = logits.rows();
  std::vector<double> losses;
  *d_logits = Matrix(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector l = logits.row(i).transpose();
    const int y = labels[static_cast<size_t>(i)];
    losses.push_back(std::max(0.0, LogSumExp(l) - l(y)));
    Vector p = Softmax(l);
    p(y) -= 1.0;
    d_logits->row(i) = p.transpose() / static_cast<double>(n);
  }
  return losses;
}

Matrix PrototypeLogits(const Matrix& emb, const Matrix& protos) {
  Matrix l(emb.rows(), protos.rows());
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < protos.rows(); ++j) {
      l(i, j) = -(emb.row(i) - protos.row(j)).squaredNorm();
    }
  }
  return l;
}

void CheckData(const EnrollmentData& data) {
  if (data.inputs.rows() == 0) throw DataError("no enrollment records");
  if (static_cast<size_t>(data.inputs.rows()) != data.labels.size()) {
    throw DataError("enrollment labels do not match inputs");
  }
  const int k = static_cast<int>(data.speakers.size());
  if (k < 2) throw DataError("need at least 2 enrolled speakers");
  std::vector<int> counts(static_cast<size_t>(k), 0);
  for (int y : data.labels) {
    if (y < 0 || y >= k) throw DataError("enrollment label out of range");
    ++counts[static_cast<size_t>(y)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] == 0) throw DataError("empty class " + data.speakers[static_cast<size_t>(c)]);
  }
}

void SgdStep(double lr, const AdapterGradients& ga, AdapterNetwork* net) {
  Axpy(-lr, ga, net);
}

}  // namespace

std::string_view ModeName(Mode mode) {
  switch (mode) {
    case Mode::kSrpl:
      return "srpl";
    case Mode::kSrplPlus:
      return "srpl_plus";
    case Mode::kSoftmax:
      return "softmax";
    case Mode::kPrototype:
      return "prototype";
  }
  return "srpl";
}

std::optional<Mode> ParseMode(std::string_view name) {
  for (Mode m : {Mode::kSrpl, Mode::kSrplPlus, Mode::kSoftmax, Mode::kPrototype}) {
    if (ModeName(m) == name) return m;
  }
  return std::nullopt;
}

void TrainConfig::Validate() const {
  hyper.Validate();
  if (!adapter_dims.empty() && adapter_dims.size() != 4) {
    throw ConfigError("need 4 layer dims, got " + std::to_string(adapter_dims.size()));
  }
  for (int d : adapter_dims) {
    if (d < 1) throw ConfigError("layer dims must be positive");
  }
  if (n_syn_classes < 1) throw ConfigError("n_syn_classes must be >= 1");
  if (!(initial_radius >= 0.0) || !std::isfinite(initial_radius)) {
    throw ConfigError("initial_radius must be finite and >= 0");
  }
}

Matrix ClassMeans(const Matrix& rows, const std::vector<int>& labels, int k) {
  Matrix sums = Matrix::Zero(k, rows.cols());
  std::vector<int> counts(static_cast<size_t>(k), 0);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const int y = labels[static_cast<size_t>(i)];
    sums.row(y) += rows.row(i);
    ++counts[static_cast<size_t>(y)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] == 0) throw DataError("empty class in mean computation");
    sums.row(c) /= counts[static_cast<size_t>(c)];
  }
  return sums;
}

NegativePool MakeNegativePool(const std::vector<EmbeddingRecord>& negatives, int n_syn_classes,
                              uint64_t seed) {
  NegativePool pool;
  if (negatives.empty()) return pool;
  const int dim = static_cast<int>(negatives.front().vector.size());
  pool.inputs.resize(static_cast<Eigen::Index>(negatives.size()), dim);
  bool labeled = true;
  for (size_t i = 0; i < negatives.size(); ++i) {
    if (static_cast<int>(negatives[i].vector.size()) != dim) {
      throw DataError("dimension mismatch in negative pool at record " + std::to_string(i));
    }
    for (int c = 0; c < dim; ++c) pool.inputs(static_cast<Eigen::Index>(i), c) = negatives[i].vector[static_cast<size_t>(c)];
    labeled = labeled && !negatives[i].speaker_id.empty();
  }
  if (labeled) {
    std::map<std::string, int> ids;
    for (const auto& r : negatives) {
      auto [it, inserted] = ids.emplace(r.speaker_id, static_cast<int>(ids.size()));
      pool.pseudo_labels.push_back(it->second);
    }
    pool.num_classes = static_cast<int>(ids.size());
  } else {
    pool.pseudo_labels = KMeansLabels(pool.inputs, n_syn_classes, seed);
    pool.num_classes = *std::max_element(pool.pseudo_labels.begin(), pool.pseudo_labels.end()) + 1;
  }
  return pool;
}

EnrollmentData GatherEnrollment(const OpenSetSplit& split, const Corpus& corpus,
                                const std::vector<EmbeddingRecord>& extra) {
  EnrollmentData d;
  d.speakers = split.target_speakers;
  std::map<std::string, int> index;
  for (size_t k = 0; k < d.speakers.size(); ++k) index[d.speakers[k]] = static_cast<int>(k);
  d.inputs = corpus.Rows(split.enroll_records);
  for (size_t i : split.enroll_records) {
    auto it = index.find(corpus[i].speaker_id);
    if (it == index.end()) throw DataError("enroll record from non-target speaker");
    d.labels.push_back(it->second);
  }
  std::vector<const EmbeddingRecord*> kept;
  for (const auto& r : extra) {
    if (static_cast<int>(r.vector.size()) != corpus.dimension()) {
      throw DataError("extra enrollment record " + r.utterance_id + " has wrong dimension");
    }
    auto it = index.find(r.speaker_id);
    if (it == index.end()) continue;
    kept.push_back(&r);
    d.labels.push_back(it->second);
  }
  if (!kept.empty()) {
    const Eigen::Index base = d.inputs.rows();
    d.inputs.conservativeResize(base + static_cast<Eigen::Index>(kept.size()), Eigen::NoChange);
    for (size_t j = 0; j < kept.size(); ++j) {
      for (Eigen::Index c = 0; c < d.inputs.cols(); ++c) {
        d.inputs(base + static_cast<Eigen::Index>(j), c) = kept[j]->vector[static_cast<size_t>(c)];
      }
    }
  }
  return d;
}

TrainResult Enroll(const EnrollmentData& data, const NegativePool& negatives,
                   const TrainConfig& config) {
  config.Validate();
  CheckData(data);
  const int d_in = static_cast<int>(data.inputs.cols());
  const int k = static_cast<int>(data.speakers.size());
  const bool use_negatives = config.mode == Mode::kSrplPlus && negatives.inputs.rows() > 0;
  if (use_negatives && negatives.inputs.cols() != d_in) {
    throw DataError("dimension mismatch: negatives have dimension " +
                    std::to_string(negatives.inputs.cols()) + ", corpus has " +
                    std::to_string(d_in));
  }
  if (use_negatives && (negatives.num_classes < 1 ||
                        negatives.pseudo_labels.size() != static_cast<size_t>(negatives.inputs.rows()))) {
    throw DataError("negative pool has no pseudo-class assignment");
  }

  const uint64_t seed = config.seed;
  const Hyperparameters& hp = config.hyper;
  const bool norm = config.normalize_output;

  EnrolledModel model;
  model.mode = config.mode;
  model.speakers = data.speakers;
  model.normalize_output = norm;
  model.logits = config.loss.logits;

  if (config.initial_adapter) {
    model.adapter = *config.initial_adapter;
    if (model.adapter.input_dim() != d_in) throw DataError("initial adapter input dimension mismatch");
  } else {
    std::vector<int> dims = config.adapter_dims;
    if (dims.empty()) dims = {d_in, d_in, d_in, d_in};
    if (dims[0] != d_in) {
      throw DataError("adapter input dimension " + std::to_string(dims[0]) +
                      " does not match corpus dimension " + std::to_string(d_in));
    }
    model.adapter = InitAdapter(dims, Rng::Mix(seed, kAdapterStream));
  }
  const int d_out = model.adapter.output_dim();

  const bool srpl_mode = config.mode == Mode::kSrpl || config.mode == Mode::kSrplPlus;
  if (srpl_mode) {
    const Matrix emb = Embed(model, data.inputs);
    std::vector<Matrix> known_groups;
    for (int c = 0; c < k; ++c) {
      std::vector<size_t> idx;
      for (size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] == c) idx.push_back(i);
      }
      known_groups.push_back(SelectRows(emb, idx));
    }
    std::vector<Matrix> neg_groups;
    const int m = use_negatives ? negatives.num_classes : 0;
    if (use_negatives) {
      const Matrix nemb = Embed(model, negatives.inputs);
      for (int c = 0; c < m; ++c) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < negatives.pseudo_labels.size(); ++i) {
          if (negatives.pseudo_labels[i] == c) idx.push_back(i);
        }
        neg_groups.push_back(SelectRows(nemb, idx));
      }
    }
    model.head = InitHead(k, m, d_out, known_groups, neg_groups, Rng::Mix(seed, kHeadStream),
                          config.initial_radius);
  } else if (config.mode == Mode::kSoftmax) {
    Rng rng(Rng::Mix(seed, kClassifierStream));
    const double a = std::sqrt(1.0 / d_out);
    model.classifier.weight.resize(k, d_out);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < d_out; ++c) model.classifier.weight(r, c) = rng.Uniform(-a, a);
    }
    model.classifier.bias = Vector::Zero(k);
  }

  const size_t n = static_cast<size_t>(data.inputs.rows());
  const size_t batch = hp.batch_size > 0 ? std::min(n, static_cast<size_t>(hp.batch_size)) : n;
  Rng shuffle_rng(Rng::Mix(seed, kShuffleStream));
  Rng neg_rng(Rng::Mix(seed, kNegativeStream));
  const double lr = hp.learning_rate;

  TrainResult result;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    if (config.mode == Mode::kPrototype) {
      model.prototypes = ClassMeans(Embed(model, data.inputs), data.labels, k);
    }
    const std::vector<size_t> perm = shuffle_rng.Permutation(n);
    LossBreakdown epoch_sum;
    int steps = 0;
    for (size_t start = 0; start < n; start += batch) {
      const std::vector<size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                    perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
      const Matrix xk = SelectRows(data.inputs, idx);
      const std::vector<int> yk = Select(data.labels, idx);
      const Embedded ek = EmbedWithCache(model.adapter, norm, xk);
      LossBreakdown b;

      if (srpl_mode) {
        NegativeBatch nb{Matrix(0, d_out), {}};
        Embedded en;
        if (use_negatives) {
          const std::vector<size_t> nidx =
              SampleNegatives(static_cast<size_t>(negatives.inputs.rows()), idx.size(), &neg_rng);
          en = EmbedWithCache(model.adapter, norm, SelectRows(negatives.inputs, nidx));
          nb.emb = en.emb;
          nb.pseudo_labels = Select(negatives.pseudo_labels, nidx);
        }
        const LossResult res = SrplPlusLoss(model.head, hp, config.loss, {ek.emb, yk}, nb);
        b = res.breakdown;
        AdapterGradients ga = BackwardThrough(model.adapter, norm, ek, res.d_known);
        if (use_negatives) Axpy(1.0, BackwardThrough(model.adapter, norm, en, res.d_neg), &ga);
        SgdStep(lr, ga, &model.adapter);
        model.head.rps -= lr * res.d_head.rps;
        model.head.cps -= lr * res.d_head.cps;
        if (config.learn_radius) {
          model.head.radii -= lr * res.d_head.radii;
          model.head.radii = model.head.radii.cwiseMax(0.0);
          if (config.loss.shared_radius) model.head.radii.setConstant(model.head.radii(0));
        }
      } else if (config.mode == Mode::kSoftmax) {
        auto& clf = model.classifier;
        const Matrix logits = (ek.emb * clf.weight.transpose()).rowwise() + clf.bias.transpose();
        Matrix dl;
        b.l_s = OrderFreeMean(CrossEntropy(logits, yk, &dl));
        const Matrix d_emb = dl * clf.weight;
        const Matrix dw = dl.transpose() * ek.emb;
        const Vector db = dl.colwise().sum().transpose();
        SgdStep(lr, BackwardThrough(model.adapter, norm, ek, d_emb), &model.adapter);
        clf.weight -= lr * dw;
        clf.bias -= lr * db;
      } else {
        const Matrix logits = PrototypeLogits(ek.emb, model.prototypes);
        Matrix dl;
        b.l_s = OrderFreeMean(CrossEntropy(logits, yk, &dl));
        Matrix d_emb = Matrix::Zero(ek.emb.rows(), d_out);
        for (Eigen::Index i = 0; i < ek.emb.rows(); ++i) {
          for (Eigen::Index j = 0; j < model.prototypes.rows(); ++j) {
            d_emb.row(i) -= 2.0 * dl(i, j) * (ek.emb.row(i) - model.prototypes.row(j));
          }
        }
        SgdStep(lr, BackwardThrough(model.adapter, norm, ek, d_emb), &model.adapter);
      }
      if (!srpl_mode) b.total = b.l_s;

      const bool finite = std::isfinite(b.total) && AllFinite(model.adapter) &&
                          (!srpl_mode || AllFinite(model.head)) &&
                          model.classifier.weight.allFinite() && model.classifier.bias.allFinite();
      if (!finite) throw NumericError("non-finite loss or parameter at epoch " + std::to_string(epoch));
      epoch_sum.l_s += b.l_s;
      epoch_sum.l_r += b.l_r;
      epoch_sum.l_c += b.l_c;
      epoch_sum.h_neg += b.h_neg;
      epoch_sum.total += b.total;
      ++steps;
    }
    if (steps > 1) {
      for (double* v : {&epoch_sum.l_s, &epoch_sum.l_r, &epoch_sum.l_c, &epoch_sum.h_neg, &epoch_sum.total}) {
        *v /= steps;
      }
    }
    result.history.push_back(epoch_sum);
    if (config.log_every > 0 && (epoch + 1) % config.log_every == 0) {
      std::cerr << "[" << ModeName(config.mode) << "] epoch " << epoch + 1 << " total "
                << epoch_sum.total << " l_s " << epoch_sum.l_s << " l_r " << epoch_sum.l_r
                << " l_c " << epoch_sum.l_c << " h_neg " << epoch_sum.h_neg << "\n";
    }
  }
  if (config.mode == Mode::kPrototype) {
    model.prototypes = ClassMeans(Embed(model, data.inputs), data.labels, k);
  }
  result.model = std::move(model);
  return result;
}

TrainResult Enroll(const OpenSetSplit& split, const Corpus& corpus,
                   const std::vector<EmbeddingRecord>& negatives, const TrainConfig& config,
                   const std::vector<EmbeddingRecord>& extra_enrollment) {
  CheckCompatible(negatives, corpus.dimension());
  const NegativePool pool =
      config.mode == Mode::kSrplPlus
          ? MakeNegativePool(negatives, config.n_syn_classes, Rng::Mix(config.seed, 6))
          : NegativePool{};
  return Enroll(GatherEnrollment(split, corpus, extra_enrollment), pool, config);
}

TrainResult EnrollBaselineSoftmax(const EnrollmentData& data, TrainConfig config) {
  config.mode = Mode::kSoftmax;
  return Enroll(data, NegativePool{}, config);
}

TrainResult EnrollBaselinePrototype(const EnrollmentData& data, TrainConfig config) {
  config.mode = Mode::kPrototype;
  return Enroll(data, NegativePool{}, config);
}

Matrix Embed(const EnrolledModel& model, const Matrix& inputs) {
  const Matrix out = Forward(model.adapter, inputs);
  return model.normalize_output ? NormalizeRows(out) : out;
}

std::vector<Prediction> PredictBatch(const EnrolledModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                    ", got " + std::to_string(inputs.cols()));
  }
  const Matrix emb = Embed(model, inputs);
  std::vector<Prediction> out;
  out.reserve(static_cast<size_t>(emb.rows()));
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    const Vector e = emb.row(i).transpose();
    Vector logits;
    switch (model.mode) {
      case Mode::kSrpl:
      case Mode::kSrplPlus:
        logits = RpLogits(model.head, e, model.logits);
        break;
      case Mode::kSoftmax:
        logits = model.classifier.weight * e + model.classifier.bias;
        break;
      case Mode::kPrototype:
        logits = PrototypeLogits(e.transpose(), model.prototypes).row(0).transpose();
        break;
    }
    Prediction p;
    p.scores = Softmax(logits);
    Eigen::Index arg = 0;
    p.confidence = p.scores.maxCoeff(&arg);
    p.best_class = static_cast<int>(arg);
    out.push_back(std::move(p));
  }
  return out;
}

Prediction Predict(const EnrolledModel& model, const Vector& input) {
  if (input.size() != model.input_dim()) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                    ", got " + std::to_string(input.size()));
  }
  return PredictBatch(model, input.transpose()).front();
}

}  // namespace srpl
