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

#include "srpl/adapter.h"

#include <cmath>

#include "srpl/binary_io.h"
#include "srpl/error.h"
#include "srpl/rng.h"

namespace srpl {

namespace {

constexpr std::string_view kAdapterMagic = "SRPLNET1";

Matrix Relu(const Matrix& m) { return m.cwiseMax(0.0); }

// Zeroes the upstream gradient where the pre-activation is not strictly positive.
Matrix ReluBackward(const Matrix& pre, const Matrix& upstream) {
  return (pre.array() > 0.0).select(upstream, 0.0);
}

// Row by row so a batch reproduces single-input results bit for bit; a
// blocked GEMM would reorder the dot-product sums.
Matrix Affine(const DenseLayer& layer, const Matrix& in) {
  Matrix out(in.rows(), layer.weight.rows());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    out.row(i).noalias() = (layer.weight * in.row(i).transpose() + layer.bias).transpose();
  }
  return out;
}

void CheckInput(const AdapterNetwork& net, Eigen::Index cols) {
  if (cols != net.input_dim()) {
    throw DataError("adapter input dimension mismatch: expected " +
                    std::to_string(net.input_dim()) + ", got " + std::to_string(cols));
  }
}

}  // namespace

size_t AdapterNetwork::ParameterCount() const {
  size_t n = 0;
  for (const auto& l : layers) n += static_cast<size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<std::span<double>> AdapterNetwork::ParameterBlocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weight.data(), static_cast<size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<size_t>(l.bias.size()));
  }
  return out;
}

std::vector<std::span<const double>> AdapterNetwork::ParameterBlocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weight.data(), static_cast<size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<size_t>(l.bias.size()));
  }
  return out;
}

bool AdapterNetwork::operator==(const AdapterNetwork& o) const {
  if (dims != o.dims) return false;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight != o.layers[i].weight || layers[i].bias != o.layers[i].bias) return false;
  }
  return true;
}

AdapterGradients ZeroGradients(const AdapterNetwork& net) {
  AdapterGradients g;
  g.dims = net.dims;
  for (size_t i = 0; i < 3; ++i) {
    g.layers[i].weight = Matrix::Zero(net.layers[i].weight.rows(), net.layers[i].weight.cols());
    g.layers[i].bias = Vector::Zero(net.layers[i].bias.size());
  }
  return g;
}

AdapterNetwork InitAdapter(std::span<const int> dims, uint64_t seed) {
  if (dims.size() != 4) throw ConfigError("need 4 layer dims");
  for (int d : dims) {
    if (d < 1) throw ConfigError("layer dims must be positive");
  }
  AdapterNetwork net;
  std::copy(dims.begin(), dims.end(), net.dims.begin());
  Rng rng(seed);
  for (size_t i = 0; i < 3; ++i) {
    const int fan_in = net.dims[i];
    const int fan_out = net.dims[i + 1];
    const double a = std::sqrt(1.0 / fan_in);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.Uniform(-a, a);
    }
    net.layers[i].weight = std::move(w);
    net.layers[i].bias = Vector::Zero(fan_out);
  }
  return net;
}

ForwardCache ForwardWithCache(const AdapterNetwork& net, const Matrix& x) {
  CheckInput(net, x.cols());
  ForwardCache c;
  c.input = x;
  c.pre1 = Affine(net.layers[0], x);
  c.act1 = Relu(c.pre1);
  c.pre2 = Affine(net.layers[1], c.act1);
  c.act2 = Relu(c.pre2);
  c.output = Affine(net.layers[2], c.act2);
  return c;
}

Matrix Forward(const AdapterNetwork& net, const Matrix& x) {
  return ForwardWithCache(net, x).output;
}

Vector Forward(const AdapterNetwork& net, const Vector& x) {
  Matrix row = x.transpose();
  return Forward(net, row).row(0).transpose();
}

AdapterGradients Backward(const AdapterNetwork& net, const ForwardCache& c,
                          const Matrix& upstream) {
  if (upstream.rows() != c.output.rows() || upstream.cols() != c.output.cols()) {
    throw DataError("upstream gradient shape does not match adapter output");
  }
  AdapterGradients g;
  g.dims = net.dims;
  g.layers[2].weight = upstream.transpose() * c.act2;
  g.layers[2].bias = upstream.colwise().sum().transpose();
  const Matrix d2 = ReluBackward(c.pre2, upstream * net.layers[2].weight);
  g.layers[1].weight = d2.transpose() * c.act1;
  g.layers[1].bias = d2.colwise().sum().transpose();
  const Matrix d1 = ReluBackward(c.pre1, d2 * net.layers[1].weight);
  g.layers[0].weight = d1.transpose() * c.input;
  g.layers[0].bias = d1.colwise().sum().transpose();
  return g;
}

AdapterGradients Backward(const AdapterNetwork& net, const Matrix& x, const Matrix& upstream) {
  return Backward(net, ForwardWithCache(net, x), upstream);
}

void Axpy(double scale, const AdapterNetwork& src, AdapterNetwork* dst) {
  for (size_t i = 0; i < 3; ++i) {
    dst->layers[i].weight += scale * src.layers[i].weight;
    dst->layers[i].bias += scale * src.layers[i].bias;
  }
}

bool AllFinite(const AdapterNetwork& net) {
  for (const auto& l : net.layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

Matrix NormalizeRows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double n = m.row(r).norm();
    if (n > 0.0) out.row(r) /= n;
  }
  return out;
}

Matrix NormalizeRowsBackward(const Matrix& pre, const Matrix& upstream) {
  Matrix out = Matrix::Zero(pre.rows(), pre.cols());
  for (Eigen::Index r = 0; r < pre.rows(); ++r) {
    const double n = pre.row(r).norm();
    if (n <= 0.0) continue;
    const auto y = pre.row(r) / n;
    out.row(r) = (upstream.row(r) - y * y.dot(upstream.row(r))) / n;
  }
  return out;
}

std::string SerializeAdapter(const AdapterNetwork& net) {
  ByteWriter w;
  w.Magic(kAdapterMagic);
  w.U32(4);
  for (int d : net.dims) w.U32(static_cast<uint32_t>(d));
  for (auto block : net.ParameterBlocks()) {
    for (double v : block) w.F64(v);
  }
  return w.bytes();
}

AdapterNetwork DeserializeAdapter(std::string_view bytes) {
  ByteReader in(bytes);
  in.ExpectMagic(kAdapterMagic);
  if (in.U32() != 4) throw DataError("adapter checkpoint must have 4 layer dims");
  std::array<int, 4> dims{};
  for (int& d : dims) {
    d = static_cast<int>(in.U32());
    if (d < 1 || d > (1 << 20)) throw DataError("implausible adapter dimension in checkpoint");
  }
  AdapterNetwork net = InitAdapter(dims, 0);
  for (auto block : net.ParameterBlocks()) {
    for (double& v : block) v = in.F64();
  }
  if (!in.AtEnd()) throw DataError("trailing bytes in adapter checkpoint");
  if (!AllFinite(net)) throw DataError("non-finite parameter in adapter checkpoint");
  return net;
}

}  // namespace srpl
