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

#include <array>

#include <gtest/gtest.h>

#include "gradcheck.h"
#include "srpl/error.h"

namespace srpl {
namespace {

using testing::AdapterBlockNames;
using testing::CheckBlocks;
using testing::RandomMatrix;

TEST(InitAdapter, DeterministicZeroBiasAndBounded) {
  const std::array<int, 4> dims = {4, 8, 8, 4};
  const AdapterNetwork a = InitAdapter(dims, 0);
  EXPECT_TRUE(a == InitAdapter(dims, 0));
  EXPECT_FALSE(a == InitAdapter(dims, 1));
  for (const auto& l : a.layers) {
    EXPECT_TRUE((l.bias.array() == 0.0).all());
    const double bound = std::sqrt(1.0 / static_cast<double>(l.weight.cols()));
    EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(a.layers[1].weight.rows(), 8);
  EXPECT_EQ(a.layers[2].weight.cols(), 8);
  EXPECT_EQ(a.ParameterCount(), 4u * 8 + 8 + 8 * 8 + 8 + 8 * 4 + 4);
}

TEST(InitAdapter, RejectsBadDims) {
  const std::array<int, 3> three = {4, 8, 8};
  try {
    InitAdapter(three, 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "need 4 layer dims");
  }
  const std::array<int, 4> zero = {4, 0, 8, 4};
  EXPECT_THROW(InitAdapter(zero, 0), ConfigError);
}

TEST(Forward, ZeroNetGivesZero) {
  const std::array<int, 4> dims = {3, 5, 5, 2};
  AdapterNetwork net = InitAdapter(dims, 4);
  for (auto block : net.ParameterBlocks()) std::fill(block.begin(), block.end(), 0.0);
  Vector x(3);
  x << 1.0, -2.0, 3.5;
  EXPECT_TRUE((Forward(net, x).array() == 0.0).all());
}

TEST(Forward, HandComputedTwoByTwo) {
  const std::array<int, 4> dims = {2, 2, 2, 2};
  AdapterNetwork net = InitAdapter(dims, 0);
  net.layers[0].weight << 1, 2, -1, 1;
  net.layers[1].weight << 1, 0, 1, 1;
  net.layers[2].weight << 2, -1, 0, 3;
  Vector x(2);
  x << 1, 1;
  // h1 = relu([3, 0]) = [3, 0]; h2 = relu([3, 3]) = [3, 3]; out = [3, 9]
  const Vector out = Forward(net, x);
  EXPECT_EQ(out(0), 3.0);
  EXPECT_EQ(out(1), 9.0);
  x << 1, -1;
  // h1 = relu([-1, -2]) = 0 -> out = b3 = 0
  EXPECT_TRUE((Forward(net, x).array() == 0.0).all());
}

TEST(Forward, BatchRowsMatchSingleInputsBitwise) {
  const std::array<int, 4> dims = {6, 7, 5, 3};
  const AdapterNetwork net = InitAdapter(dims, 9);
  Rng rng(1);
  const Matrix x = RandomMatrix(11, 6, 1.0, &rng);
  const Matrix out = Forward(net, x);
  ASSERT_EQ(out.rows(), 11);
  ASSERT_EQ(out.cols(), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector single = Forward(net, Vector(x.row(i).transpose()));
    for (Eigen::Index c = 0; c < 3; ++c) EXPECT_EQ(out(i, c), single(c));
  }
  EXPECT_THROW(Forward(net, Matrix(2, 5)), DataError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const std::array<int, 4> dims = {4, 6, 6, 4};
  const AdapterNetwork net = InitAdapter(dims, 2);
  Rng rng(3);
  const Matrix x = RandomMatrix(5, 4, 1.0, &rng);
  const AdapterGradients g = Backward(net, x, Matrix::Zero(5, 4));
  for (auto block : g.ParameterBlocks()) {
    for (double v : block) EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(Backward(net, x, Matrix::Zero(4, 4)), DataError);
}

TEST(Backward, BatchGradientIsSumOfRowGradients) {
  const std::array<int, 4> dims = {4, 6, 5, 3};
  const AdapterNetwork net = InitAdapter(dims, 5);
  Rng rng(8);
  const Matrix x = RandomMatrix(6, 4, 1.0, &rng);
  const Matrix up = RandomMatrix(6, 3, 1.0, &rng);
  const AdapterGradients batch = Backward(net, x, up);
  AdapterGradients sum = ZeroGradients(net);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Axpy(1.0, Backward(net, Matrix(x.row(i)), Matrix(up.row(i))), &sum);
  }
  const auto a = batch.ParameterBlocks();
  const auto b = sum.ParameterBlocks();
  for (size_t k = 0; k < a.size(); ++k) {
    for (size_t i = 0; i < a[k].size(); ++i) EXPECT_NEAR(a[k][i], b[k][i], 1e-12);
  }
}

// Loss = sum_ij c_ij out_ij + 0.5 sum out^2, so dL/dout = c + out.
class AdapterGradient : public ::testing::TestWithParam<int> {};

TEST_P(AdapterGradient, MatchesCentralDifferences) {
  const int seed = GetParam();
  Rng rng(static_cast<uint64_t>(seed) + 100);
  const int d = 2 + static_cast<int>(rng.Below(6));
  const std::array<int, 4> dims = {d, 3 + static_cast<int>(rng.Below(5)),
                                   3 + static_cast<int>(rng.Below(5)), 2 + static_cast<int>(rng.Below(4))};
  AdapterNetwork net = InitAdapter(dims, rng.NextU64());
  for (auto& l : net.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * rng.Normal();
  }
  Matrix x;
  for (int attempt = 0; attempt < 100; ++attempt) {
    x = RandomMatrix(4, d, 1.0, &rng);
    const ForwardCache c = ForwardWithCache(net, x);
    if (std::min(c.pre1.cwiseAbs().minCoeff(), c.pre2.cwiseAbs().minCoeff()) > 1e-3) break;
  }
  const Matrix coef = RandomMatrix(4, dims[3], 1.0, &rng);
  auto loss = [&] {
    const Matrix out = Forward(net, x);
    return (coef.array() * out.array()).sum() + 0.5 * out.squaredNorm();
  };
  const AdapterGradients g = Backward(net, x, coef + Forward(net, x));
  const AdapterGradients& cg = g;
  const auto bad = CheckBlocks(net.ParameterBlocks(), cg.ParameterBlocks(), AdapterBlockNames(), loss);
  for (const auto& m : bad) ADD_FAILURE() << m.block << "[" << m.index << "] " << m.analytic << " vs " << m.numeric;
}

INSTANTIATE_TEST_SUITE_P(Random, AdapterGradient, ::testing::Range(0, 20));

TEST(Normalize, RowsUnitAndBackwardMatchesDifferences) {
  Rng rng(4);
  Matrix pre = RandomMatrix(3, 5, 1.0, &rng);
  const Matrix coef = RandomMatrix(3, 5, 1.0, &rng);
  const Matrix n = NormalizeRows(pre);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(n.row(i).norm(), 1.0, 1e-15);
  const Matrix g = NormalizeRowsBackward(pre, coef);
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    const double numeric = testing::CentralDifference(
        &pre.data()[i], [&] { return (coef.array() * NormalizeRows(pre).array()).sum(); });
    EXPECT_TRUE(testing::GradClose(g.data()[i], numeric)) << i;
  }
  const Matrix zero = Matrix::Zero(1, 4);
  EXPECT_TRUE((NormalizeRows(zero).array() == 0.0).all());
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const std::array<int, 4> dims = {5, 7, 6, 4};
  AdapterNetwork net = InitAdapter(dims, 12);
  net.layers[1].bias(2) = -0.0;
  net.layers[2].weight(0, 0) = std::numeric_limits<double>::denorm_min();
  const std::string bytes = SerializeAdapter(net);
  EXPECT_EQ(bytes.substr(0, 8), "SRPLNET1");
  EXPECT_EQ(bytes.size(), 8 + 4 + 16 + 8 * net.ParameterCount());
  const AdapterNetwork back = DeserializeAdapter(bytes);
  EXPECT_EQ(SerializeAdapter(back), bytes);
  EXPECT_TRUE(back == net);
  EXPECT_THROW(DeserializeAdapter(bytes.substr(0, bytes.size() - 3)), DataError);
  EXPECT_THROW(DeserializeAdapter(bytes + "x"), DataError);
}

}  // namespace
}  // namespace srpl
