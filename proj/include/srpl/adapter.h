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

#ifndef SRPL_ADAPTER_H_
#define SRPL_ADAPTER_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srpl/numeric.h"

namespace srpl {

struct DenseLayer {
  Matrix weight;  // out x in, row-major
  Vector bias;    // out
};

// Three dense layers, ReLU after the first two, linear output:
//   out = W3 relu(W2 relu(W1 x + b1) + b2) + b3
struct AdapterNetwork {
  std::array<int, 4> dims{};
  std::array<DenseLayer, 3> layers;

  int input_dim() const { return dims[0]; }
  int output_dim() const { return dims[3]; }
  size_t ParameterCount() const;

  // Views onto the parameters in checkpoint order: W1, b1, W2, b2, W3, b3.
  std::vector<std::span<double>> ParameterBlocks();
  std::vector<std::span<const double>> ParameterBlocks() const;

  bool operator==(const AdapterNetwork& o) const;
};

// Same shapes as the network; holds dLoss/dparam.
using AdapterGradients = AdapterNetwork;

AdapterGradients ZeroGradients(const AdapterNetwork& net);

// Weights ~ U(-a, a) with a = sqrt(1 / fan_in); biases zero.
AdapterNetwork InitAdapter(std::span<const int> dims, uint64_t seed);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Matrix input;
  Matrix pre1, pre2;  // pre-activations of the hidden layers
  Matrix act1, act2;
  Matrix output;
};

// Rows of `x` are independent inputs.
Matrix Forward(const AdapterNetwork& net, const Matrix& x);
Vector Forward(const AdapterNetwork& net, const Vector& x);
ForwardCache ForwardWithCache(const AdapterNetwork& net, const Matrix& x);

// Gradient of a scalar loss, given dLoss/dOutput per row, summed over rows.
// ReLU subgradient at exactly 0 is 0.
AdapterGradients Backward(const AdapterNetwork& net, const ForwardCache& cache,
                          const Matrix& upstream);
AdapterGradients Backward(const AdapterNetwork& net, const Matrix& x, const Matrix& upstream);

// dst += scale * src, blockwise.
void Axpy(double scale, const AdapterNetwork& src, AdapterNetwork* dst);
bool AllFinite(const AdapterNetwork& net);

// Row-wise L2 normalisation and its vector-Jacobian product. Rows of zero
// norm pass through unchanged with zero gradient.
Matrix NormalizeRows(const Matrix& m);
Matrix NormalizeRowsBackward(const Matrix& pre, const Matrix& upstream);

// "SRPLNET1" checkpoint: u32 layer count (4), u32 dims, f64 parameters in
// block order, each matrix row-major.
std::string SerializeAdapter(const AdapterNetwork& net);
AdapterNetwork DeserializeAdapter(std::string_view bytes);

}  // namespace srpl

#endif  // SRPL_ADAPTER_H_
