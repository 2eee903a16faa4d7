/*
 * Copyright 2026 The NIB Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "autodiff.hpp"
#include "error.hpp"
#include "grad_check.hpp"
#include "tensor.hpp"

namespace nib {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

TEST(Tensor, RejectsNonFiniteValues) {
  EXPECT_EQ(CodeOf([] { Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}); }),
            ErrorCode::kNonFinite);
  EXPECT_EQ(CodeOf([] { Tensor({1}, {std::numeric_limits<double>::infinity()}); }),
            ErrorCode::kNonFinite);
}

TEST(Tensor, RejectsShapeDataMismatch) {
  EXPECT_EQ(CodeOf([] { Tensor({2, 2}, {1.0, 2.0, 3.0}); }), ErrorCode::kDimension);
}

TEST(MatMul, IdentityLeavesOperandUnchanged) {
  Graph g;
  const Tensor a = Tensor::Matrix({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const Tensor eye = Tensor::Matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(MatMul(g.Constant(eye), g.Constant(a)).value(), a);
  const Tensor b = Tensor::Matrix({{1, 2}, {3, 4}});
  const Tensor eye2 = Tensor::Matrix({{1, 0}, {0, 1}});
  EXPECT_EQ(MatMul(g.Constant(b), g.Constant(eye2)).value(), b);
}

TEST(MatMul, InnerDimensionMismatchIsDimensionError) {
  Graph g;
  Var a = g.Constant(Tensor::Zeros({2, 3}));
  Var b = g.Constant(Tensor::Zeros({2, 3}));
  EXPECT_EQ(CodeOf([&] { MatMul(a, b); }), ErrorCode::kDimension);
}

TEST(Elementwise, ShapeMismatchIsDimensionError) {
  Graph g;
  Var a = g.Constant(Tensor::Zeros({2, 3}));
  Var b = g.Constant(Tensor::Zeros({3, 2}));
  EXPECT_EQ(CodeOf([&] { Add(a, b); }), ErrorCode::kDimension);
  EXPECT_EQ(CodeOf([&] { Mul(a, b); }), ErrorCode::kDimension);
}

TEST(Scale, ByOneAndZero) {
  Graph g;
  const Tensor z = Tensor::Matrix({{1.5, -2}, {0.25, 3}});
  EXPECT_EQ(Scale(g.Constant(z), 1.0).value(), z);
  EXPECT_EQ(Scale(g.Constant(z), 0.0).value(), Tensor::Zeros({2, 2}));
}

TEST(Softmax, UniformInputGivesUniformOutput) {
  Graph g;
  const Tensor s = Softmax(g.Constant(Tensor::Vector({0, 0, 0})), 0).value();
  for (double v : s.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LanesSumToOne) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g;
    const Tensor x = testing::RandomTensor(rng, {5, 7}, 10.0);
    const Tensor rows = Softmax(g.Constant(x), 1).value();
    for (std::size_t r = 0; r < 5; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) total += rows.at(r, c);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    const Tensor cols = Softmax(g.Constant(x), 0).value();
    for (std::size_t c = 0; c < 7; ++c) {
      double total = 0.0;
      for (std::size_t r = 0; r < 5; ++r) total += cols.at(r, c);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, AxisOutOfRangeIsDimensionError) {
  Graph g;
  EXPECT_EQ(CodeOf([&] { Softmax(g.Constant(Tensor::Zeros({2, 2})), 2); }),
            ErrorCode::kDimension);
}

TEST(LayerNorm, PreAffineMomentsAreStandardized) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g;
    const Tensor x = testing::RandomTensor(rng, {4, 9}, 3.0);
    const Tensor y = LayerNorm(g.Constant(x), g.Constant(Tensor::Full({9}, 1.0)),
                               g.Constant(Tensor::Zeros({9})), 0.0)
                         .value();
    for (std::size_t r = 0; r < 4; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < 9; ++c) mean += y.at(r, c);
      mean /= 9.0;
      for (std::size_t c = 0; c < 9; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
      var /= 9.0;
      EXPECT_NEAR(mean, 0.0, 1e-10);
      EXPECT_NEAR(var, 1.0, 1e-8);
    }
  }
}

TEST(LayerNorm, ConstantRowMapsToZerosBeforeAffine) {
  Graph g;
  const Tensor y = LayerNorm(g.Constant(Tensor::Full({2, 4}, 3.5)),
                             g.Constant(Tensor::Full({4}, 1.0)), g.Constant(Tensor::Zeros({4})),
                             1e-5)
                       .value();
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(EmbeddingLookup, OutOfRangeIdIsRejected) {
  Graph g;
  const std::vector<std::size_t> ids{0, 4};
  EXPECT_EQ(CodeOf([&] { EmbeddingLookup(g.Constant(Tensor::Zeros({4, 2})), ids); }),
            ErrorCode::kInvalidArgument);
}

TEST(Cosine, KnownValues) {
  Graph g;
  Var u = g.Constant(Tensor::Vector({0.3, -1.2, 2.0}));
  EXPECT_NEAR(CosineSimilarity(u, u).value().item(), 1.0, 1e-15);
  EXPECT_EQ(CosineSimilarity(g.Constant(Tensor::Vector({1, 0})), g.Constant(Tensor::Vector({0, 1})))
                .value()
                .item(),
            0.0);
}

TEST(Cosine, ZeroNormIsDegenerate) {
  Graph g;
  EXPECT_EQ(CodeOf([&] {
              CosineSimilarity(g.Constant(Tensor::Zeros({3})), g.Constant(Tensor::Vector({1, 2, 3})));
            }),
            ErrorCode::kDegenerateInput);
}

TEST(Cosine, ValueStaysInUnitInterval) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    const double c = CosineSimilarity(g.Constant(testing::RandomTensor(rng, {16})),
                                      g.Constant(testing::RandomTensor(rng, {16})))
                         .value()
                         .item();
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(Backward, ProductRuleGivesOtherFactor) {
  Graph g;
  const Tensor xv = Tensor::Vector({1.0, -2.0, 0.5});
  const Tensor yv = Tensor::Vector({4.0, 0.25, -3.0});
  Var x = g.Input(xv);
  Var y = g.Input(yv);
  g.Backward(Sum(Mul(x, y)));
  EXPECT_EQ(g.Grad(x), yv);
  EXPECT_EQ(g.Grad(y), xv);
}

TEST(Backward, ScaleByGradientIsContractionWithUpstream) {
  Graph g;
  const Tensor zv = Tensor::Matrix({{1, 2}, {3, -4}});
  const Tensor up = Tensor::Matrix({{0.5, -1}, {2, 0.25}});
  Var z = g.Constant(zv);
  Var lambda = g.Input(Tensor::Vector({0.3}));
  g.Backward(Sum(Mul(ScaleBy(z, lambda), g.Constant(up))));
  double expected = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) expected += zv[i] * up[i];
  EXPECT_DOUBLE_EQ(g.Grad(lambda).item(), expected);
}

TEST(Backward, NonScalarLossIsRejected) {
  Graph g;
  Var x = g.Input(Tensor::Vector({1, 2}));
  EXPECT_EQ(CodeOf([&] { g.Backward(x); }), ErrorCode::kDimension);
}

TEST(Backward, UnreachedInputGetsZeroGradient) {
  Graph g;
  Var x = g.Input(Tensor::Vector({1, 2}));
  Var y = g.Input(Tensor::Vector({3, 4}));
  g.Backward(Sum(x));
  EXPECT_EQ(g.Grad(y), Tensor::Zeros({2}));
}

TEST(FiniteDiff, QuadraticAndConstant) {
  const Tensor x = Tensor::Vector({1.0, 2.0});
  const Tensor sq = FiniteDiffGrad(
      [](const Tensor& t) {
        double s = 0.0;
        for (double v : t.values()) s += v * v;
        return s;
      },
      x, 1e-5);
  EXPECT_NEAR(sq[0], 2.0, 1e-8);
  EXPECT_NEAR(sq[1], 4.0, 1e-8);
  const Tensor flat = FiniteDiffGrad([](const Tensor&) { return 7.0; }, x, 1e-5);
  EXPECT_EQ(flat, Tensor::Zeros({2}));
}

TEST(FiniteDiff, CosineMatchesBackward) {
  std::mt19937_64 rng(17);
  const Tensor u = testing::RandomTensor(rng, {16});
  const Tensor v = testing::RandomTensor(rng, {16});
  Graph g;
  Var uu = g.Input(u);
  g.Backward(CosineSimilarity(uu, g.Constant(v)));
  const Tensor numeric = FiniteDiffGrad(
      [&](const Tensor& x) {
        Graph p;
        return CosineSimilarity(p.Constant(x), p.Constant(v)).value().item();
      },
      u, 1e-5);
  EXPECT_LE(RelativeError(g.Grad(uu), numeric), 1e-6);
}

TEST(Determinism, RepeatedForwardIsBitwiseIdentical) {
  std::mt19937_64 rng(23);
  const Tensor a = testing::RandomTensor(rng, {6, 8});
  const Tensor b = testing::RandomTensor(rng, {8, 5});
  auto run = [&] {
    Graph g;
    return Softmax(Gelu(MatMul(g.Constant(a), g.Constant(b))), 1).value();
  };
  EXPECT_EQ(run(), run());
}

class OpGradient : public ::testing::TestWithParam<std::size_t> {};

TEST_P(OpGradient, MatchesCentralDifferencesOverTwentySeeds) {
  const testing::OpCase op = testing::AllOpCases()[GetParam()];
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EXPECT_LE(testing::GradCheck(op, seed), 1e-6) << op.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient,
                         ::testing::Range<std::size_t>(0, testing::AllOpCases().size()),
                         [](const ::testing::TestParamInfo<std::size_t>& info) {
                           return testing::AllOpCases()[info.param].name;
                         });

}  // namespace
}  // namespace nib
