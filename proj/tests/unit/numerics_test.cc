// Copyright 2026 The tsdc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tsdc/error.h"
#include "tsdc/numerics/autodiff.h"
#include "tsdc/numerics/ops.h"
#include "tsdc/numerics/tape.h"
#include "tsdc/trajectory.h"

namespace tsdc {
namespace {

using testing::RandomTensor;

template <typename X>
using RealOf = typename std::decay_t<X>::value_type;

template <typename R>
BasicTensor<R> As(const Tensor& t) {
  return t.template Cast<R>();
}

std::vector<float> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST(Differentiate, SumGivesOnes) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({3}, {0.5f, -1.0f, 2.0f});
  x.set_requires_grad(true);
  auto g = Differentiate<float>(Sum(x), {x});
  EXPECT_EQ(Values(g[0]), (std::vector<float>{1, 1, 1}));
}

TEST(Differentiate, DotWithItself) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  auto g = Differentiate<float>(Dot(x, x), {x});
  EXPECT_EQ(Values(g[0]), (std::vector<float>{2, 4}));
  EXPECT_EQ(Values(x), (std::vector<float>{1, 2}));
}

TEST(Differentiate, NonScalarLossIsRejected) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  EXPECT_THROW(Differentiate<float>(Mul(x, x), {x}), ContractViolation);
}

TEST(Differentiate, LossOffTapeIsRejected) {
  Tensor x({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  Tensor loss = Dot(x, x);  // no tape active: nothing recorded
  Tape<float> tape;
  TapeScope<float> scope(tape);
  EXPECT_THROW(Differentiate<float>(loss, {x}), ContractViolation);
  EXPECT_THROW(Differentiate<float>(Tensor::Scalar(1.0f), {x}), ContractViolation);
}

TEST(Differentiate, NoActiveTapeIsRejected) {
  Tensor x({1}, {1.0f});
  EXPECT_THROW(Differentiate<float>(x, {x}), ContractViolation);
}

TEST(Differentiate, UnusedParamGetsZeros) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({2}, {1.0f, 2.0f});
  Tensor y({3}, {1.0f, 2.0f, 3.0f});
  x.set_requires_grad(true);
  y.set_requires_grad(true);
  auto g = Differentiate<float>(Sum(x), {x, y});
  EXPECT_EQ(Values(g[1]), (std::vector<float>{0, 0, 0}));
}

TEST(Differentiate, SharedSubexpressionAccumulates) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({1}, {3.0f});
  x.set_requires_grad(true);
  Tensor y = Mul(x, x);
  auto g = Differentiate<float>(Sum(Add(y, Mul(y, x))), {x});
  // d/dx (x^2 + x^3) = 2x + 3x^2
  EXPECT_FLOAT_EQ(g[0].item(), 6.0f + 27.0f);
}

TEST(Differentiate, SecondOrder) {
  Tape<double> tape;
  TapeScope<double> scope(tape);
  Tensor64 x({1}, {2.0});
  x.set_requires_grad(true);
  Tensor64 y = Sum(Mul(Mul(x, x), x));
  Tensor64 g = Differentiate<double>(y, {x}, {.create_graph = true})[0];
  Tensor64 h = Differentiate<double>(Sum(g), {x})[0];
  EXPECT_DOUBLE_EQ(g.item(), 12.0);
  EXPECT_DOUBLE_EQ(h.item(), 12.0);
}

TEST(Backward, AccumulatesIntoLeaves) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  Backward(Dot(x, x));
  ASSERT_TRUE(x.grad().has_value());
  EXPECT_EQ(*x.grad(), (std::vector<float>{2, 4}));
}

// Chained optimizer steps on one tape match the closed-form derivative of the
// composed update. L(theta; x) = sum(x * theta^2), two steps of size alpha
// give theta_2 = theta (1 - 2 alpha x)^2, and F = sum(theta_2).
TEST(Differentiate, TwoChainedStepsMatchClosedForm) {
  const double alpha = 0.1;
  Tape<double> tape;
  TapeScope<double> scope(tape);
  Tensor64 x({2}, {0.7, -0.4});
  x.set_requires_grad(true);
  Tensor64 theta({2}, {1.5, 2.0});
  theta.set_requires_grad(true);
  Tensor64 t = theta;
  for (int s = 0; s < 2; ++s) {
    Tensor64 inner = Sum(Mul(x, Mul(t, t)));
    Tensor64 g = Differentiate<double>(inner, {t}, {.create_graph = true})[0];
    t = Sub(t, Scale(g, alpha));
  }
  Tensor64 grad = Differentiate<double>(Sum(t), {x})[0];
  const double th[2] = {1.5, 2.0}, xv[2] = {0.7, -0.4};
  for (int i = 0; i < 2; ++i) {
    const double expected = th[i] * 2.0 * (1.0 - 2.0 * alpha * xv[i]) * (-2.0 * alpha);
    EXPECT_NEAR(grad.data()[i], expected, 1e-12);
  }
}

// L_tmm through one unrolled inner step of a 2-parameter model, against
// central differences at eps = 1e-3.
TEST(Differentiate, TrajectoryLossThroughInnerStepMatchesFiniteDifferences) {
  const std::vector<float> start{0.3f, -0.2f};
  const std::vector<float> expert_end{0.9f, 0.4f};
  auto f = [&](const auto& x) {
    using R = RealOf<decltype(x)>;
    std::optional<Tape<R>> own;
    std::optional<TapeScope<R>> scope;
    if (Tape<R>::Active() == nullptr) {
      own.emplace();
      scope.emplace(*own);
    }
    BasicTensor<R> theta({2}, {R(start[0]), R(start[1])});
    theta.set_requires_grad(true);
    BasicTensor<R> pred = Mul(theta, x);
    BasicTensor<R> err = AddScalar(pred, R(-1));
    BasicTensor<R> inner = Sum(Mul(err, err));
    BasicTensor<R> g = Differentiate<R>(inner, {theta}, {.create_graph = true})[0];
    BasicTensor<R> end = Sub(theta, Scale(g, R(0.25)));
    return *TrajectoryMatchingLoss(end, expert_end, start);
  };
  Tensor x({2}, {1.2f, 0.8f});
  GradientCheckReport r = GradientCheck(f, x, 1e-3);
  EXPECT_LT(r.max_relative_error, 1e-3);
}

TEST(FiniteDifferenceCheck, SumOfSquares) {
  auto f = [](const auto& x) { return Sum(Mul(x, x)); };
  EXPECT_LT(FiniteDifferenceCheck(f, Tensor({3}, {1, 2, 3}), 1e-3), 1e-4);
}

TEST(FiniteDifferenceCheck, ConstantFunction) {
  auto f = [](const auto& x) {
    using R = RealOf<decltype(x)>;
    return BasicTensor<R>::Scalar(R(4));
  };
  GradientCheckReport r = GradientCheck(f, Tensor({3}, {1, 2, 3}), 1e-3);
  EXPECT_EQ(r.max_relative_error, 0.0);
  for (double a : r.analytic) EXPECT_EQ(a, 0.0);
  for (double n : r.numeric) EXPECT_EQ(n, 0.0);
}

TEST(FiniteDifferenceCheck, SoftmaxCrossEntropyAgreesAcrossEpsilons) {
  auto f = [](const auto& x) { return CrossEntropy(Reshape(x, {1, 4}), {2}); };
  Tensor logits({4}, {0.3f, -1.2f, 2.0f, 0.5f});
  const double e1 = FiniteDifferenceCheck(f, logits, 1e-3);
  const double e2 = FiniteDifferenceCheck(f, logits, 1e-4);
  EXPECT_LT(e1, 1e-3);
  EXPECT_LT(e2, 1e-3);
}

TEST(FiniteDifferenceCheck, NanObjectiveIsSurfaced) {
  auto f = [](const auto& x) { return Sum(Log(x)); };
  EXPECT_THROW(FiniteDifferenceCheck(f, Tensor({2}, {-1.0f, 1.0f}), 1e-3), NumericError);
}

TEST(FiniteDifferenceCheck, NonPositiveEpsilonIsRejected) {
  auto f = [](const auto& x) { return Sum(x); };
  EXPECT_THROW(FiniteDifferenceCheck(f, Tensor({1}, {1.0f}), 0.0), ContractViolation);
}

TEST(AvgPool1d, ConstantSeriesUnchanged) {
  Tensor y = AvgPool1d(Tensor({4}, {5, 5, 5, 5}), 3);
  EXPECT_EQ(Values(y), (std::vector<float>{5, 5, 5, 5}));
}

TEST(AvgPool1d, ReplicatePaddingByHand) {
  Tensor y = AvgPool1d(Tensor({3}, {1, 2, 3}), 3);
  EXPECT_FLOAT_EQ(y.data()[0], 4.0f / 3.0f);
  EXPECT_FLOAT_EQ(y.data()[1], 2.0f);
  EXPECT_FLOAT_EQ(y.data()[2], 8.0f / 3.0f);
}

TEST(AvgPool1d, KernelOneIsIdentity) {
  std::mt19937_64 rng(3);
  Tensor x = RandomTensor({17}, rng);
  EXPECT_EQ(Values(AvgPool1d(x, 1)), Values(x));
}

TEST(AvgPool1d, EvenKernelIsRejected) {
  EXPECT_THROW(AvgPool1d(Tensor({3}, {1, 2, 3}), 2), ContractViolation);
  EXPECT_THROW(AvgPool1d(Tensor({3}, {1, 2, 3}), 0), ContractViolation);
}

TEST(AvgPool1d, PreservesLengthAndConstantsForAllKernels) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> value(-100.0f, 100.0f);
  for (std::int64_t len = 1; len <= 20; ++len) {
    for (std::int64_t k = 1; k <= 2 * len + 1; k += 2) {
      const float c = value(rng);
      Tensor y = AvgPool1d(Tensor::Full({len}, c), k);
      ASSERT_EQ(y.numel(), len);
      for (float v : y.data()) ASSERT_EQ(v, c) << "len " << len << " kernel " << k;
      Tensor z = AvgPool1d(RandomTensor({len}, rng), k);
      ASSERT_EQ(z.numel(), len);
    }
  }
}

TEST(Softmax, SymmetricPair) {
  Tensor y = Softmax(Tensor({2}, {0, 0}));
  EXPECT_FLOAT_EQ(y.data()[0], 0.5f);
  EXPECT_FLOAT_EQ(y.data()[1], 0.5f);
}

TEST(Softmax, ClosedForm) {
  Tensor y = Softmax(Tensor({3}, {0.0f, std::log(2.0f), std::log(2.0f)}));
  EXPECT_NEAR(y.data()[0], 0.2f, 1e-6);
  EXPECT_NEAR(y.data()[1], 0.4f, 1e-6);
  EXPECT_NEAR(y.data()[2], 0.4f, 1e-6);
}

TEST(Softmax, ShiftInvariantAndNormalizedOnLargeInputs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> extent(1, 16);
    const std::int64_t rows = extent(rng), k = extent(rng);
    Tensor x = RandomTensor({rows, k}, rng, -50.0, 50.0);
    Tensor y = Softmax(x);
    Tensor shifted = Softmax(AddScalar(x, 13.5f));
    for (std::int64_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::int64_t j = 0; j < k; ++j) {
        const float v = y.data()[r * k + j];
        ASSERT_GE(v, 0.0f);
        ASSERT_NEAR(v, shifted.data()[r * k + j], 1e-6);
        sum += v;
      }
      ASSERT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(CosineSimilarity, Identities) {
  Tensor u({3}, {1, -2, 0.5f});
  EXPECT_NEAR(CosineSimilarity(u, u).item(), 1.0f, 1e-6);
  EXPECT_NEAR(CosineSimilarity(Tensor({2}, {1, 0}), Tensor({2}, {0, 1})).item(), 0.0f, 1e-7);
  EXPECT_NEAR(CosineSimilarity(Tensor({2}, {1, 2}), Tensor({2}, {2, 4})).item(), 1.0f, 1e-6);
}

TEST(CosineSimilarity, ZeroNormGivesZeroWithZeroGradient) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor u({2}, {0, 0});
  Tensor v({2}, {1, 2});
  u.set_requires_grad(true);
  v.set_requires_grad(true);
  Tensor c = CosineSimilarity(u, v);
  EXPECT_EQ(c.item(), 0.0f);
  if (c.on_tape()) {
    auto g = Differentiate<float>(c, {u, v});
    for (float x : g[0].data()) EXPECT_EQ(x, 0.0f);
    for (float x : g[1].data()) EXPECT_EQ(x, 0.0f);
  }
}

TEST(CosineSimilarity, LengthMismatchIsRejected) {
  EXPECT_THROW(CosineSimilarity(Tensor({2}, {1, 2}), Tensor({3}, {1, 2, 3})), ContractViolation);
}

TEST(Ops, ShapeMismatchIsRejected) {
  EXPECT_THROW(Add(Tensor({2}, {1, 2}), Tensor({3}, {1, 2, 3})), ContractViolation);
  EXPECT_THROW(MatMul(Tensor::Zeros({2, 3}), Tensor::Zeros({2, 3})), ContractViolation);
}

TEST(Ops, MatMulTransposes) {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({3, 2}, {7, 8, 9, 10, 11, 12});
  EXPECT_EQ(Values(MatMul(a, b)), (std::vector<float>{58, 64, 139, 154}));
  Tensor at = Permute(a, {1, 0});
  Tensor bt = Permute(b, {1, 0});
  EXPECT_EQ(Values(MatMul(at, b, true, false)), (std::vector<float>{58, 64, 139, 154}));
  EXPECT_EQ(Values(MatMul(a, bt, false, true)), (std::vector<float>{58, 64, 139, 154}));
  EXPECT_EQ(Values(MatMul(at, bt, true, true)), (std::vector<float>{58, 64, 139, 154}));
}

TEST(Ops, CrossEntropyOfUniformLogits) {
  for (int k : {2, 3, 7}) {
    Tensor logits = Tensor::Zeros({4, k});
    EXPECT_NEAR(CrossEntropy(logits, {0, 1, 0, 1}).item(), std::log(double(k)), 1e-6);
  }
  EXPECT_THROW(CrossEntropy(Tensor::Zeros({1, 2}), {2}), ContractViolation);
}

TEST(Ops, EmbedManySumsOverlappingParts) {
  Tensor a({2}, {1.0f, 2.0f}), b({3}, {10.0f, 20.0f, 30.0f});
  Tensor out = EmbedMany<float>({a, b}, {1, 2}, {2, 3});
  EXPECT_EQ(out.shape(), (Shape{2, 3}));
  EXPECT_EQ(Values(out), (std::vector<float>{0, 1, 12, 20, 30, 0}));
  EXPECT_THROW(EmbedMany<float>({a}, {0, 1}, {6}), ContractViolation);
  EXPECT_THROW(EmbedMany<float>({b}, {4}, {6}), ContractViolation);
}

TEST(Differentiate, OverlappingSlicesAccumulate) {
  Tape<float> tape;
  TapeScope<float> scope(tape);
  Tensor x({6}, {1, 2, 3, 4, 5, 6});
  x.set_requires_grad(true);
  Tensor first = Narrow(x, 0, {4});
  Tensor second = Narrow(x, 2, {2, 2});
  Tensor loss = Add(Dot(first, first), Sum(Scale(second, 3.0f)));
  auto g = Differentiate<float>(loss, {x});
  // d/dx of sum(x[0:4]^2) + 3 * sum(x[2:6]).
  EXPECT_EQ(Values(g[0]), (std::vector<float>{2, 4, 9, 11, 3, 3}));
}

// Gradient of every differentiable primitive against central differences on
// randomized shapes (extents <= 16).
struct OpCase {
  const char* name;
  // Builds a scalar from x, given random shape parameters.
  std::function<Shape(std::mt19937_64&)> shape;
  std::function<Tensor(const Tensor&)> f32;
  std::function<Tensor64(const Tensor64&)> f64;
  double lo = -1.0, hi = 1.0;
};

template <typename Build>
OpCase MakeCase(const char* name, std::function<Shape(std::mt19937_64&)> shape, Build build,
                double lo = -1.0, double hi = 1.0) {
  return OpCase{name, std::move(shape), [build](const Tensor& x) { return build(x); },
                [build](const Tensor64& x) { return build(x); }, lo, hi};
}

// Weighted sum with weights fixed by the element count, so that every output
// coordinate carries a distinct, non-trivial adjoint.
template <typename R>
BasicTensor<R> Project(const BasicTensor<R>& y) {
  std::vector<R> w(static_cast<std::size_t>(y.numel()));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = R(std::sin(0.7 * double(i) + 0.3) + 0.1);
  return Sum(Mul(Reshape(y, {y.numel()}), BasicTensor<R>({y.numel()}, std::move(w))));
}

std::int64_t Extent(std::mt19937_64& rng, int max = 16) {
  return std::uniform_int_distribution<std::int64_t>(1, max)(rng);
}

std::vector<OpCase> OpCases() {
  auto vec = [](std::mt19937_64& r) { return Shape{Extent(r)}; };
  auto mat = [](std::mt19937_64& r) { return Shape{Extent(r), Extent(r)}; };
  std::vector<OpCase> cases;
  cases.push_back(MakeCase("mul_self", mat, [](const auto& x) { return Project(Mul(x, x)); }));
  cases.push_back(MakeCase("add_sub", mat, [](const auto& x) {
    return Project(Sub(Add(x, Mul(x, x)), Scale(x, RealOf<decltype(x)>(0.5))));
  }));
  cases.push_back(MakeCase("exp", mat, [](const auto& x) { return Project(Exp(x)); }));
  cases.push_back(MakeCase("log", mat, [](const auto& x) { return Project(Log(x)); }, 0.5, 2.0));
  cases.push_back(MakeCase("tanh", mat, [](const auto& x) { return Project(Tanh(x)); }));
  cases.push_back(MakeCase("sqrt", mat, [](const auto& x) { return Project(Sqrt(x)); }, 0.5, 2.0));
  cases.push_back(
      MakeCase("reciprocal", mat, [](const auto& x) { return Project(Reciprocal(x)); }, 0.5, 2.0));
  cases.push_back(MakeCase("add_scalar", mat, [](const auto& x) {
    return Project(Mul(AddScalar(x, RealOf<decltype(x)>(0.3)), x));
  }));
  cases.push_back(MakeCase("scalar_mul", mat, [](const auto& x) {
    return Project(ScalarMul(x, Sum(x)));
  }));
  cases.push_back(MakeCase("broadcast_scalar", vec, [](const auto& x) {
    return Project(Mul(BroadcastScalar(Sum(Mul(x, x)), x.shape()), x));
  }));
  cases.push_back(MakeCase("sum_rows", mat, [](const auto& x) {
    auto s = SumRows(x);
    return Project(Mul(s, s));
  }));
  cases.push_back(MakeCase("broadcast_rows", vec, [](const auto& x) {
    return Project(Mul(BroadcastRows(x, 3), BroadcastRows(x, 3)));
  }));
  cases.push_back(MakeCase("sum_cols", mat, [](const auto& x) {
    auto s = SumCols(x);
    return Project(Mul(s, s));
  }));
  cases.push_back(MakeCase("broadcast_cols", vec, [](const auto& x) {
    return Project(Mul(BroadcastCols(x, 4), BroadcastCols(x, 4)));
  }));
  cases.push_back(MakeCase(
      "permute", [](std::mt19937_64& r) { return Shape{Extent(r, 5), Extent(r, 5), Extent(r, 5)}; },
      [](const auto& x) {
        auto p = Permute(x, {2, 0, 1});
        return Project(Mul(p, p));
      }));
  cases.push_back(MakeCase("reshape_gather", vec, [](const auto& x) {
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    for (std::int64_t i = 0; i < 2 * x.numel(); ++i) idx->push_back((i * 7) % x.numel());
    auto g = Gather(x, idx, {2, x.numel()});
    return Project(Mul(g, g));
  }));
  cases.push_back(MakeCase("scatter_add", vec, [](const auto& x) {
    auto idx = std::make_shared<std::vector<std::int64_t>>();
    for (std::int64_t i = 0; i < x.numel(); ++i) idx->push_back(i % 3);
    auto s = ScatterAdd(x, idx, {3});
    return Project(Mul(s, s));
  }));
  cases.push_back(MakeCase("narrow_embed_concat", vec, [](const auto& x) {
    const std::int64_t n = x.numel();
    auto head = Narrow(x, 0, {(n + 1) / 2});
    auto e = Embed(Mul(head, head), 1, (n + 1) / 2 + 2);
    return Project(ConcatFlat<RealOf<decltype(x)>>({e, x, head}));
  }));
  cases.push_back(MakeCase(
      "matmul", [](std::mt19937_64& r) { return Shape{Extent(r, 8), Extent(r, 8)}; },
      [](const auto& x) {
        auto y = MatMul(x, x, true, false);
        auto z = MatMul(x, y, false, true);
        return Project(Add(z, MatMul(MatMul(x, x, false, true), x)));
      }));
  cases.push_back(MakeCase(
      "batched_matmul",
      [](std::mt19937_64& r) { return Shape{Extent(r, 4), Extent(r, 6), Extent(r, 6)}; },
      [](const auto& x) {
        auto y = MatMul(x, x, false, true);
        return Project(MatMul(y, x));
      }));
  cases.push_back(MakeCase("softmax", mat, [](const auto& x) { return Project(Softmax(x)); },
                           -3.0, 3.0));
  cases.push_back(MakeCase(
      "moving_average",
      [](std::mt19937_64& r) { return Shape{Extent(r, 4), Extent(r, 12), Extent(r, 4)}; },
      [](const auto& x) {
        auto m = MovingAverage(x, x.dim(0), x.dim(1), x.dim(2), 5);
        return Project(Mul(m, x));
      }));
  cases.push_back(MakeCase("mean_dot", vec, [](const auto& x) {
    return Add(Mean(Mul(x, x)), Dot(x, Exp(x)));
  }));
  cases.push_back(MakeCase("cosine", vec, [](const auto& x) {
    return CosineSimilarity(x, Exp(x));
  }));
  cases.push_back(MakeCase("gelu", mat, [](const auto& x) { return Project(Gelu(x)); }, -3.0,
                           3.0));
  cases.push_back(MakeCase("mse", mat, [](const auto& x) { return MseLoss(x, Exp(x)); }, 0.2,
                           1.5));
  cases.push_back(MakeCase(
      "cross_entropy", [](std::mt19937_64& r) { return Shape{Extent(r, 8), Extent(r, 6) + 1}; },
      [](const auto& x) {
        std::vector<int> labels;
        for (std::int64_t i = 0; i < x.dim(0); ++i) labels.push_back(int(i % x.dim(1)));
        return CrossEntropy(x, labels);
      }, -3.0, 3.0));
  return cases;
}

TEST(GradientProperty, EveryOpMatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (const OpCase& c : OpCases()) {
    for (int trial = 0; trial < 4; ++trial) {
      const Shape shape = c.shape(rng);
      Tensor x = RandomTensor(shape, rng, c.lo, c.hi);
      auto f = [&c](const auto& t) {
        if constexpr (std::is_same_v<RealOf<decltype(t)>, float>) {
          return c.f32(t);
        } else {
          return c.f64(t);
        }
      };
      GradientCheckReport r = GradientCheck(f, x, 1e-3);
      EXPECT_LT(r.max_relative_error, 1e-3) << c.name << " shape " << ShapeToString(shape);
    }
  }
}

}  // namespace
}  // namespace tsdc
