// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "gradcases.hpp"
#include "yieldgan/autodiff.hpp"
#include "yieldgan/error.hpp"

namespace ygan::ad {
namespace {

constexpr double kGradTol = 1e-4;

class PrimitiveGrad : public ::testing::TestWithParam<std::size_t> {};

TEST_P(PrimitiveGrad, MatchesCentralDifferences) {
  const auto suite = ygan::testing::primitive_suites(100).at(GetParam());
  const auto r = ygan::testing::run_suite(suite, 20240101);
  EXPECT_LT(r.max_error, kGradTol) << suite.name;
}

INSTANTIATE_TEST_SUITE_P(
    All, PrimitiveGrad,
    ::testing::Range<std::size_t>(0, ygan::testing::primitive_suites(1).size()),
    [](const ::testing::TestParamInfo<std::size_t>& info) {
      return ygan::testing::primitive_suites(1).at(info.param).name;
    });

TEST(Autodiff, EverySuiteCoversAnOp) {
  // Leaf is the only op without a gradient rule of its own.
  EXPECT_EQ(ygan::testing::primitive_suites(1).size(), static_cast<std::size_t>(Op::RowSum));
}

TEST(Autodiff, ForwardValues) {
  Tape t;
  Var x = t.input(Tensor({2, 2}, {1.0, -2.0, 3.0, 0.5}));
  EXPECT_EQ(t.value(t.relu(x)).storage(), (std::vector<double>{1.0, 0.0, 3.0, 0.5}));
  EXPECT_EQ(t.value(t.transpose(x)).storage(), (std::vector<double>{1.0, 3.0, -2.0, 0.5}));
  EXPECT_EQ(t.value(t.row_sum(x)).storage(), (std::vector<double>{-1.0, 3.5}));
  EXPECT_DOUBLE_EQ(t.value(t.mean(x)).item(), 0.625);
  const auto& sm = t.value(t.softmax(x));
  EXPECT_NEAR(sm.at(0, 0) + sm.at(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(sm.at(0, 0), 1.0 / (1.0 + std::exp(-3.0)), 1e-15);
  Var b = t.constant(Tensor({2}, {10.0, 20.0}));
  EXPECT_EQ(t.value(t.add(x, b)).storage(), (std::vector<double>{11.0, 18.0, 13.0, 20.5}));
}

TEST(Autodiff, SquareGradientIsTwoX) {
  Tape t;
  Var x = t.input(Tensor({3}, {1.0, 2.0, 3.0}));
  const auto g = t.backward(t.sum(t.square(x)));
  EXPECT_EQ(g[x].storage(), (std::vector<double>{2.0, 4.0, 6.0}));
}

TEST(Autodiff, ReusedNodeAccumulates) {
  Tape t;
  Var x = t.input(Tensor::scalar(3.0));
  Var y = t.mul(x, x);
  const auto g = t.backward(t.add(y, x));
  EXPECT_DOUBLE_EQ(g[x].item(), 7.0);
}

TEST(Autodiff, ParamBindsOnceAndConstantsGetZero) {
  Parameter p{"w", Tensor({2}, {1.0, 2.0})};
  Tape t;
  Var a = t.param(p);
  Var b = t.param(p);
  EXPECT_EQ(a.id, b.id);
  Var c = t.constant(Tensor({2}, {5.0, 5.0}));
  const auto g = t.backward(t.sum(t.mul(a, c)));
  EXPECT_EQ(g[a].storage(), (std::vector<double>{5.0, 5.0}));
  EXPECT_EQ(g[c].storage(), (std::vector<double>{0.0, 0.0}));
  Parameter unused{"u", Tensor({3})};
  std::vector<Parameter*> ps{&p, &unused};
  const auto pg = t.param_grads(g, ps);
  EXPECT_EQ(pg[1].storage(), (std::vector<double>(3, 0.0)));
}

TEST(Autodiff, ShapeErrors) {
  Tape t;
  Var a = t.input(Tensor({2, 3}));
  Var b = t.input(Tensor({2, 2}));
  EXPECT_THROW(t.matmul(a, b), ConfigError);
  EXPECT_THROW(t.add(a, b), ConfigError);
  EXPECT_THROW(t.slice(a, 2, 4), ConfigError);
  EXPECT_THROW(t.backward(a), ConfigError);
  EXPECT_THROW(t.log(t.constant(Tensor::scalar(-1.0))), NumericalError);
  EXPECT_THROW(t.sqrt(t.constant(Tensor::scalar(-1.0))), NumericalError);
}

TEST(Autodiff, GradCheckDetectsAWrongGradient) {
  // A function whose tape value and gradient disagree: the check must flag it.
  const Tensor x({2}, {0.3, -0.7});
  const double err = grad_check(
      [](Tape& t, Var v) {
        // value uses sum(v^2) through a constant copy so no gradient flows.
        Var frozen = t.constant(t.value(v));
        return t.add(t.sum(t.square(frozen)), t.scale(t.sum(v), 0.0));
      },
      x);
  EXPECT_GT(err, 0.1);
}

TEST(Autodiff, ClosedFormValues) {
  Tape t;
  Var z = t.constant(Tensor({1, 3}, 0.0));
  EXPECT_EQ(t.value(t.tanh(z)).storage(), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(t.value(t.sigmoid(z)).storage(), (std::vector<double>{0.5, 0.5, 0.5}));
  const auto& u = t.value(t.softmax(t.constant(Tensor({2, 4}, 1.7))));
  for (double v : u.values()) EXPECT_NEAR(v, 0.25, 1e-15);

  Tape a;
  Var x = a.input(Tensor({1}, {-3.0}));
  EXPECT_EQ(a.backward(a.sum(x))[x].item(), 1.0);
}

TEST(Autodiff, GradCheckOnExactCases) {
  Rng rng(11);
  Tensor x({4, 3});
  for (auto& v : x.values()) v = rng.normal();
  EXPECT_LE(grad_check([](Tape& t, Var v) { return t.sum(v); }, x), 1e-10);
  EXPECT_LE(grad_check([](Tape& t, Var v) { return t.sum(t.square(v)); }, Tensor({5}, 0.0)), 1e-8);
  Tensor w({3, 2});
  for (auto& v : w.values()) v = rng.normal();
  EXPECT_LT(grad_check([&](Tape& t, Var v) { return t.sum(t.tanh(t.matmul(v, t.constant(w)))); },
                       x),
            1e-4);
}

TEST(Autodiff, ReplayIsBitIdentical) {
  Rng rng(12);
  Tensor x({3, 3});
  for (auto& v : x.values()) v = rng.normal();
  auto run = [&] {
    Tape t;
    Var v = t.input(x);
    Var y = t.sum(t.softplus(t.matmul(v, t.transpose(v))));
    return std::pair{t.value(y).item(), t.backward(y)[v].storage()};
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace ygan::ad
