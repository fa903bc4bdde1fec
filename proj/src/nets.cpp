// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/nets.hpp"

#include <algorithm>
#include <cmath>

#include "yieldgan/error.hpp"

namespace ygan::nets {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  for (auto a : {Activation::Identity, Activation::Tanh, Activation::Sigmoid,
                 Activation::Softmax, Activation::Softplus}) {
    if (name == activation_name(a)) return a;
  }
  throw ConfigError("unknown activation '" + name + "'");
}

Var apply_activation(Tape& tape, Var x, Activation a) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return tape.tanh(x);
    case Activation::Sigmoid: return tape.sigmoid(x);
    case Activation::Softmax: return tape.softmax(x);
    case Activation::Softplus: return tape.softplus(x);
  }
  return x;
}

Tensor dropout_mask(const ad::Shape& shape, double rate, Rng& rng) {
  Tensor mask(shape, 0.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Var dropout(Tape& tape, Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::Eval || rate == 0.0) return x;
  return tape.mul(x, tape.constant(dropout_mask(tape.shape(x), rate, rng)));
}

Tensor uniform_init(const ad::Shape& shape, std::size_t fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(shape, 0.0);
  for (auto& v : t.values()) v = rng.uniform(-s, s);
  return t;
}

// Dense ----------------------------------------------------------------------

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng)
    : weight{name + ".weight", uniform_init({in, out}, in, rng)},
      bias{name + ".bias", Tensor({out}, 0.0)},
      act_(act) {}

Var Dense::affine(Tape& tape, Var x) const {
  const auto& s = tape.shape(x);
  if (s.size() != 2 || s[1] != in_features()) {
    throw ConfigError(weight.name + ": expected input (batch x " + std::to_string(in_features()) +
                      "), got " + ad::shape_string(s));
  }
  return tape.add(tape.matmul(x, tape.param(weight)), tape.param(bias));
}

Var Dense::forward(Tape& tape, Var x) const {
  return apply_activation(tape, affine(tape, x), act_);
}

// Mlp ------------------------------------------------------------------------

Mlp::Mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
         std::size_t out, Activation output_act, double dropout_rate, Rng& rng)
    : dropout_(dropout_rate) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError(name + ": dropout rate must be in [0, 1)");
  }
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".hidden" + std::to_string(i), width, hidden[i],
                         Activation::Tanh, rng);
    width = hidden[i];
  }
  layers_.emplace_back(name + ".out", width, out, output_act, rng);
}

Mlp::Trace Mlp::trace(Tape& tape, Var x, Mode mode, Rng* rng) const {
  Trace tr;
  Var a = x;
  const bool drop = mode == Mode::Train && dropout_ > 0.0;
  if (drop && rng == nullptr) throw ConfigError("Mlp: train-mode dropout needs an rng");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Var t = layers_[l].forward(tape, a);
    tr.hidden.push_back(t);
    if (drop) {
      Var mask = tape.constant(dropout_mask(tape.shape(t), dropout_, *rng));
      tr.masks.push_back(mask);
      a = tape.mul(t, mask);
    } else {
      tr.masks.push_back(Var{});
      a = t;
    }
  }
  tr.output = layers_.back().forward(tape, a);
  return tr;
}

Var Mlp::forward(Tape& tape, Var x, Mode mode, Rng* rng) const {
  return trace(tape, x, mode, rng).output;
}

Var Mlp::input_gradient(Tape& tape, const Trace& tr) const {
  const Dense& head = layers_.back();
  if (head.out_features() != 1 || head.activation() != Activation::Identity) {
    throw ConfigError("input_gradient requires a single identity output unit");
  }
  const std::size_t batch = tape.shape(tr.output)[0];
  Var ones = tape.constant(Tensor({batch, 1}, 1.0));
  Var g = tape.matmul(ones, tape.transpose(tape.param(head.weight)));
  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    if (tr.masks[l].valid()) g = tape.mul(g, tr.masks[l]);
    Var dtanh = tape.shift(tape.scale(tape.square(tr.hidden[l]), -1.0), 1.0);
    g = tape.mul(g, dtanh);
    g = tape.matmul(g, tape.transpose(tape.param(layers_[l].weight)));
  }
  return g;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

// LSTM -----------------------------------------------------------------------

LstmCell::LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden,
                   Rng& rng)
    : weight{name + ".weight",
             uniform_init({input_size + hidden, 4 * hidden}, input_size + hidden, rng)},
      bias{name + ".bias", Tensor({4 * hidden}, 0.0)},
      hidden_(hidden) {
  for (std::size_t j = 0; j < hidden; ++j) bias.value[j] = 1.0;
}

LstmCell::State LstmCell::zero_state(Tape& tape, std::size_t batch) const {
  return {tape.constant(Tensor({batch, hidden_}, 0.0)),
          tape.constant(Tensor({batch, hidden_}, 0.0))};
}

LstmCell::State LstmCell::step(Tape& tape, Var x, State prev) const {
  const auto& xs = tape.shape(x);
  const auto& hs = tape.shape(prev.h);
  if (xs.size() != 2 || xs[1] != input_size() || hs.size() != 2 || hs[1] != hidden_ ||
      xs[0] != hs[0] || tape.shape(prev.c) != hs) {
    throw ConfigError(weight.name + ": step dimension mismatch, x " + ad::shape_string(xs) +
                      " h " + ad::shape_string(hs));
  }
  Var z = tape.add(tape.matmul(tape.concat({x, prev.h}), tape.param(weight)), tape.param(bias));
  const std::size_t H = hidden_;
  Var f = tape.sigmoid(tape.slice(z, 0, H));
  Var i = tape.sigmoid(tape.slice(z, H, 2 * H));
  Var o = tape.sigmoid(tape.slice(z, 2 * H, 3 * H));
  Var g = tape.tanh(tape.slice(z, 3 * H, 4 * H));
  Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

LstmStack::LstmStack(const std::string& name, std::size_t input_size,
                     const std::vector<std::size_t>& hidden, Rng& rng) {
  if (hidden.empty()) throw ConfigError(name + ": at least one LSTM layer required");
  std::size_t width = input_size;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    cells_.emplace_back(name + ".layer" + std::to_string(l), width, hidden[l], rng);
    width = hidden[l];
  }
}

std::vector<Var> LstmStack::forward(Tape& tape, std::span<const Var> seq) const {
  if (seq.empty()) throw ConfigError("lstm_forward: empty sequence");
  std::vector<Var> layer_in(seq.begin(), seq.end());
  const std::size_t batch = tape.shape(seq[0])[0];
  for (const auto& cell : cells_) {
    std::vector<Var> layer_out;
    layer_out.reserve(layer_in.size());
    auto state = cell.zero_state(tape, batch);
    for (Var x : layer_in) {
      state = cell.step(tape, x, state);
      layer_out.push_back(state.h);
    }
    layer_in = std::move(layer_out);
  }
  return layer_in;
}

Var LstmStack::forward_last(Tape& tape, std::span<const Var> seq) const {
  return forward(tape, seq).back();
}

std::vector<Parameter*> LstmStack::parameters() {
  std::vector<Parameter*> out;
  for (auto& c : cells_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

// Losses ---------------------------------------------------------------------

Var mse_loss(Tape& tape, Var pred, Var target) {
  if (tape.shape(pred) != tape.shape(target)) {
    throw ConfigError("mse_loss: shape mismatch " + ad::shape_string(tape.shape(pred)) + " vs " +
                      ad::shape_string(tape.shape(target)));
  }
  return tape.mean(tape.square(tape.sub(pred, target)));
}

Var cross_entropy(Tape& tape, Var probs, Var onehot) {
  const auto& ps = tape.shape(probs);
  if (ps != tape.shape(onehot) || ps.size() != 2) {
    throw ConfigError("cross_entropy: probs and labels must both be (n x k)");
  }
  const Tensor& p = tape.value(probs);
  const std::size_t k = ps[1];
  for (std::size_t r = 0; r < ps[0]; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (p[r * k + j] < 0.0) throw ConfigError("cross_entropy: negative probability");
      s += p[r * k + j];
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw ConfigError("cross_entropy: row " + std::to_string(r) + " sums to " +
                        std::to_string(s));
    }
  }
  Var p_true = tape.row_sum(tape.mul(probs, onehot));
  return tape.scale(tape.mean(tape.log(p_true)), -1.0);
}

// Optimiser ------------------------------------------------------------------

void adam_step(std::span<Parameter* const> params, std::span<const Tensor> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].shape() != params[p]->value.shape()) {
      throw ConfigError("adam_step: gradient shape mismatch for " + params[p]->name);
    }
    if (!grads[p].all_finite()) {
      throw NumericalError("adam_step: non-finite gradient for " + params[p]->name);
    }
  }
  if (state.first_moment.empty()) {
    for (auto* p : params) {
      state.first_moment.emplace_back(p->value.shape(), 0.0);
      state.second_moment.emplace_back(p->value.shape(), 0.0);
    }
  } else if (state.first_moment.size() != params.size()) {
    throw ConfigError("adam_step: state was built for a different parameter list");
  }

  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p]->value;
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    const auto& g = grads[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

void clip_parameters(std::span<Parameter* const> params, double limit) {
  for (auto* p : params) {
    for (auto& v : p->value.values()) v = std::clamp(v, -limit, limit);
  }
}

}  // namespace ygan::nets
