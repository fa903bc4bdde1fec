// SPDX-License-Identifier: Apache-2.0
#include "gradcases.hpp"

#include <algorithm>
#include <cmath>

#include "yieldgan/autodiff.hpp"
#include "yieldgan/dgan.hpp"
#include "yieldgan/downstream.hpp"
#include "yieldgan/nets.hpp"

namespace ygan::testing {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, for kinks and singularities at the origin.
Tensor signed_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (auto& v : t.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo, hi);
  return t;
}

Shape random_shape(Rng& rng) {
  if (rng.uniform() < 0.25) return {pick(rng, 1, 6)};
  return {pick(rng, 1, 4), pick(rng, 1, 5)};
}

// Scalar readout with random weights so every output coordinate matters.
Var project(Tape& tape, Var y, const Tensor& w) { return tape.sum(tape.mul(y, tape.constant(w))); }

using UnaryOp = Var (Tape::*)(Var);

GradSuite unary(const std::string& name, UnaryOp op, double lo, double hi, bool away_from_zero,
                std::size_t cases) {
  return {name, cases, [=](Rng& rng) {
            const auto shape = random_shape(rng);
            const auto x = away_from_zero ? signed_tensor(shape, rng, lo, hi)
                                          : random_tensor(shape, rng, lo, hi);
            const auto w = random_tensor(shape, rng);
            return ad::grad_check(
                [&](Tape& t, Var v) { return project(t, (t.*op)(v), w); }, x);
          }};
}

using BinaryOp = Var (Tape::*)(Var, Var);

// Right operand is full-shape, a trailing-axis suffix or a single element.
GradSuite binary(const std::string& name, BinaryOp op, std::size_t cases) {
  return {name, cases, [=](Rng& rng) {
            const Shape a_shape{pick(rng, 1, 4), pick(rng, 1, 5)};
            Shape b_shape = a_shape;
            const double u = rng.uniform();
            if (u < 0.3) b_shape = {a_shape[1]};
            else if (u < 0.45) b_shape = {1};
            const auto a = random_tensor(a_shape, rng);
            const auto b = random_tensor(b_shape, rng);
            const auto w = random_tensor(a_shape, rng);
            const double ea = ad::grad_check(
                [&](Tape& t, Var v) { return project(t, (t.*op)(v, t.constant(b)), w); }, a);
            const double eb = ad::grad_check(
                [&](Tape& t, Var v) { return project(t, (t.*op)(t.constant(a), v), w); }, b);
            return std::max(ea, eb);
          }};
}

}  // namespace

std::vector<GradSuite> primitive_suites(std::size_t cases) {
  std::vector<GradSuite> s;
  s.push_back({"matmul", cases, [](Rng& rng) {
                 const auto n = pick(rng, 1, 4), k = pick(rng, 1, 5), m = pick(rng, 1, 4);
                 const auto a = random_tensor({n, k}, rng);
                 const auto b = random_tensor({k, m}, rng);
                 const auto w = random_tensor({n, m}, rng);
                 const double ea = ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.matmul(v, t.constant(b)), w); }, a);
                 const double eb = ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.matmul(t.constant(a), v), w); }, b);
                 return std::max(ea, eb);
               }});
  s.push_back(binary("add", &Tape::add, cases));
  s.push_back(binary("sub", &Tape::sub, cases));
  s.push_back(binary("mul", &Tape::mul, cases));
  s.push_back({"scale", cases, [](Rng& rng) {
                 const auto shape = random_shape(rng);
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor(shape, rng);
                 const double f = rng.uniform(-3.0, 3.0);
                 return ad::grad_check([&](Tape& t, Var v) { return project(t, t.scale(v, f), w); },
                                       x);
               }});
  s.push_back({"shift", cases, [](Rng& rng) {
                 const auto shape = random_shape(rng);
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor(shape, rng);
                 const double c = rng.uniform(-3.0, 3.0);
                 // Squared so the shift reaches the gradient.
                 return ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.square(t.shift(v, c)), w); }, x);
               }});
  s.push_back(unary("tanh", &Tape::tanh, -3.0, 3.0, false, cases));
  s.push_back(unary("sigmoid", &Tape::sigmoid, -4.0, 4.0, false, cases));
  s.push_back(unary("softplus", &Tape::softplus, -4.0, 4.0, false, cases));
  s.push_back(unary("relu", &Tape::relu, 0.01, 2.0, true, cases));
  s.push_back(unary("softmax", &Tape::softmax, -2.0, 2.0, false, cases));
  s.push_back(unary("log", &Tape::log, 0.3, 3.0, false, cases));
  s.push_back(unary("square", &Tape::square, -2.0, 2.0, false, cases));
  s.push_back(unary("sqrt", &Tape::sqrt, 0.3, 3.0, false, cases));
  s.push_back({"concat", cases, [](Rng& rng) {
                 const auto rows = pick(rng, 1, 4);
                 const auto parts = pick(rng, 2, 3);
                 std::vector<Tensor> xs;
                 std::size_t cols = 0;
                 for (std::size_t p = 0; p < parts; ++p) {
                   xs.push_back(random_tensor({rows, pick(rng, 1, 3)}, rng));
                   cols += xs.back().last_dim();
                 }
                 const auto w = random_tensor({rows, cols}, rng);
                 double err = 0.0;
                 for (std::size_t which = 0; which < parts; ++which) {
                   err = std::max(err, ad::grad_check(
                                           [&](Tape& t, Var v) {
                                             std::vector<Var> vs;
                                             for (std::size_t p = 0; p < parts; ++p) {
                                               vs.push_back(p == which ? v : t.constant(xs[p]));
                                             }
                                             return project(t, t.concat(vs), w);
                                           },
                                           xs[which]));
                 }
                 return err;
               }});
  s.push_back({"slice", cases, [](Rng& rng) {
                 const Shape shape{pick(rng, 1, 4), pick(rng, 1, 6)};
                 const auto b = static_cast<std::size_t>(rng.below(shape[1]));
                 const auto e = b + 1 + static_cast<std::size_t>(rng.below(shape[1] - b));
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor({shape[0], e - b}, rng);
                 return ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.slice(v, b, e), w); }, x);
               }});
  s.push_back({"reshape", cases, [](Rng& rng) {
                 const Shape shape{pick(rng, 1, 4), pick(rng, 1, 5)};
                 const Shape to = rng.uniform() < 0.5 ? Shape{shape[0] * shape[1]}
                                                      : Shape{shape[1], shape[0]};
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor(to, rng);
                 return ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.reshape(v, to), w); }, x);
               }});
  s.push_back({"transpose", cases, [](Rng& rng) {
                 const Shape shape{pick(rng, 1, 4), pick(rng, 1, 5)};
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor({shape[1], shape[0]}, rng);
                 return ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.transpose(v), w); }, x);
               }});
  s.push_back({"sum", cases, [](Rng& rng) {
                 const auto x = random_tensor(random_shape(rng), rng);
                 const double c = rng.uniform(-2.0, 2.0);
                 return ad::grad_check([&](Tape& t, Var v) { return t.scale(t.sum(v), c); }, x);
               }});
  s.push_back({"mean", cases, [](Rng& rng) {
                 const auto x = random_tensor(random_shape(rng), rng);
                 const double c = rng.uniform(-2.0, 2.0);
                 return ad::grad_check([&](Tape& t, Var v) { return t.scale(t.mean(v), c); }, x);
               }});
  s.push_back({"row_sum", cases, [](Rng& rng) {
                 const Shape shape{pick(rng, 1, 4), pick(rng, 1, 5)};
                 const auto x = random_tensor(shape, rng);
                 const auto w = random_tensor({shape[0], 1}, rng);
                 return ad::grad_check(
                     [&](Tape& t, Var v) { return project(t, t.row_sum(v), w); }, x);
               }});
  return s;
}

namespace {

double lstm_case(Rng& rng) {
  const auto in = pick(rng, 1, 3), hidden = pick(rng, 1, 4), batch = pick(rng, 1, 3);
  const auto steps = pick(rng, 1, 4);
  nets::LstmCell cell("cell", in, hidden, rng);
  std::vector<Tensor> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_tensor({batch, in}, rng));
  const auto wh = random_tensor({batch, hidden}, rng);
  const auto wc = random_tensor({batch, hidden}, rng);
  auto run = [&](Tape& t, Var first) {
    auto state = cell.zero_state(t, batch);
    for (std::size_t s = 0; s < steps; ++s) {
      state = cell.step(t, s == 0 ? first : t.constant(xs[s]), state);
    }
    return t.add(project(t, state.h, wh), project(t, state.c, wc));
  };
  auto params = cell.parameters();
  const double ep = ad::grad_check([&](Tape& t) { return run(t, t.constant(xs[0])); }, params);
  const double ex = ad::grad_check(run, xs[0]);
  return std::max(ep, ex);
}

double forecaster_case(Rng& rng) {
  const std::size_t W = pick(rng, 2, 4), H = pick(rng, 1, 2), F = 2, B = pick(rng, 1, 3);
  downstream::ForecasterConfig cfg;
  cfg.hidden = {pick(rng, 2, 3), pick(rng, 2, 3)};
  cfg.dropout = 0.2;
  const auto data = random_tensor({8, F}, rng, 0.0, 5.0);
  const auto scaler = downstream::MinMaxScaler::fit(data.values(), F);
  downstream::ForecastModel model(cfg, W, H, F, scaler, rng);
  const auto x = random_tensor({B, W * F}, rng, -1.0, 1.0);
  const auto y = random_tensor({B, H * F}, rng, -1.0, 1.0);
  const auto mask_seed = rng.next_u64();
  auto params = model.parameters();
  return ad::grad_check(
      [&](Tape& t) {
        Rng masks(mask_seed);
        return nets::mse_loss(t, model.forward(t, x, nets::Mode::Train, &masks), t.constant(y));
      },
      params);
}

double classifier_case(Rng& rng) {
  const std::size_t W = pick(rng, 2, 4), F = 2, B = pick(rng, 1, 3);
  downstream::ClassifierConfig cfg;
  cfg.hidden = pick(rng, 2, 4);
  cfg.dense = pick(rng, 2, 4);
  cfg.dropout = 0.2;
  const auto data = random_tensor({8, F}, rng, 0.0, 5.0);
  const auto scaler = downstream::MinMaxScaler::fit(data.values(), F);
  downstream::ClassifierModel model(cfg, W, F, scaler, rng);
  const auto x = random_tensor({B, W * F}, rng, -1.0, 1.0);
  Tensor onehot({B, 2});
  for (std::size_t b = 0; b < B; ++b) onehot.at(b, rng.below(2)) = 1.0;
  const auto mask_seed = rng.next_u64();
  auto params = model.parameters();
  return ad::grad_check(
      [&](Tape& t) {
        Rng masks(mask_seed);
        return nets::cross_entropy(t, model.forward(t, x, nets::Mode::Train, &masks),
                                   t.constant(onehot));
      },
      params);
}

dgan::DGanConfig tiny_gan() {
  dgan::DGanConfig c;
  c.T = 4;
  c.S = 2;
  c.attr_latent = 2;
  c.meta_latent = 2;
  c.seq_latent = 2;
  c.attr_hidden = {3};
  c.meta_hidden = {3};
  c.lstm_hidden = {3};
  c.critic_hidden = {4, 3};
  c.aux_hidden = {3};
  return c;
}

dgan::MetaScale unit_scale(std::size_t F) {
  return {std::vector<double>(F, 0.0), std::vector<double>(F, 1.0), std::vector<double>(F, 1.0)};
}

double generator_critic_case(Rng& rng) {
  const auto cfg = tiny_gan();
  const std::size_t F = 2, B = pick(rng, 1, 3);
  dgan::GeneratorBundle gen(cfg, {"recession"}, {"y1", "y10"}, unit_scale(F), rng);
  dgan::Critics critics(cfg, 1, F, rng);
  const auto noise = dgan::sample_noise(gen, B, rng);
  const auto mask_seed = rng.next_u64();
  auto params = gen.parameters();
  return ad::grad_check(
      [&](Tape& t) {
        Rng masks(mask_seed);
        const auto fake = dgan::generator_forward(t, gen, noise);
        const dgan::CriticBatch batch{dgan::primary_input(t, fake.attrs, fake.meta, fake.series),
                                      dgan::aux_input(t, fake.attrs)};
        return dgan::generator_loss(t, critics, batch, nets::Mode::Train, masks);
      },
      params);
}

double critic_penalty_case(Rng& rng, bool one_sided) {
  const auto cfg = tiny_gan();
  const std::size_t F = 2, B = pick(rng, 1, 3);
  const std::size_t width = 1 + 2 * F + cfg.T * F;
  dgan::Critics critics(cfg, 1, F, rng);
  const auto real_p = random_tensor({B, width}, rng, -1.0, 1.0);
  const auto fake_p = random_tensor({B, width}, rng, -1.0, 1.0);
  Tensor real_a({B, 1}), fake_a({B, 1});
  for (std::size_t b = 0; b < B; ++b) {
    real_a[b] = static_cast<double>(rng.below(2));
    fake_a[b] = rng.uniform();
  }
  const auto noise_seed = rng.next_u64();
  auto params = critics.parameters();
  return ad::grad_check(
      [&](Tape& t) {
        Rng r(noise_seed);
        const dgan::CriticBatch real{t.constant(real_p), t.constant(real_a)};
        const dgan::CriticBatch fake{t.constant(fake_p), t.constant(fake_a)};
        return dgan::critic_losses(t, critics, real, fake, {true, 10.0, one_sided},
                                   nets::Mode::Train, r)
            .combined;
      },
      params);
}

}  // namespace

std::vector<GradSuite> composite_suites(std::size_t cases) {
  return {
      {"lstm_cell", cases, lstm_case},
      {"forecaster", cases, forecaster_case},
      {"lstm_classifier", cases, classifier_case},
      {"generator_critic", cases, generator_critic_case},
      {"critic_gradient_penalty", cases, [](Rng& r) { return critic_penalty_case(r, false); }},
      {"critic_gradient_penalty_one_sided", cases,
       [](Rng& r) { return critic_penalty_case(r, true); }},
  };
}

SuiteResult run_suite(const GradSuite& suite, std::uint64_t seed) {
  SuiteResult r{suite.name, suite.cases, 0.0};
  for (std::size_t i = 0; i < suite.cases; ++i) {
    Rng rng(derive_seed(derive_seed(seed, suite.name), i));
    const double e = suite.run(rng);
    r.max_error = std::isnan(e) ? e : std::max(r.max_error, e);
    if (std::isnan(e)) break;
  }
  return r;
}

}  // namespace ygan::testing
