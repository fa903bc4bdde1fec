// SPDX-License-Identifier: Apache-2.0
//
// Network building blocks on top of the tape: dense layers, MLPs, the LSTM
// cell and stacks of cells, dropout, losses and Adam.
//
// All layers take batched inputs with the batch on the leading axis.  Weights
// are stored input-major (in x out) so a layer is y = x W + b without a
// transpose on the hot path.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "yieldgan/autodiff.hpp"
#include "yieldgan/rng.hpp"

namespace ygan::nets {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class Activation { Identity, Tanh, Sigmoid, Softmax, Softplus };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);
Var apply_activation(Tape& tape, Var x, Activation a);

enum class Mode { Train, Eval };

/// Inverted dropout: in Train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate).  Eval mode and rate 0 are
/// the identity.  Throws ConfigError for rate outside [0, 1).
Var dropout(Tape& tape, Var x, double rate, Mode mode, Rng& rng);

/// The dropout mask used above as a constant tensor (0 or 1/(1-rate)).
Tensor dropout_mask(const ad::Shape& shape, double rate, Rng& rng);

/// Uniform(-s, s) fill with s = 1/sqrt(fan_in).
Tensor uniform_init(const ad::Shape& shape, std::size_t fan_in, Rng& rng);

class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng);

  Var forward(Tape& tape, Var x) const;
  /// x W + b, before the activation.
  Var affine(Tape& tape, Var x) const;

  std::size_t in_features() const { return weight.value.dim(0); }
  std::size_t out_features() const { return weight.value.dim(1); }
  Activation activation() const { return act_; }
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  Parameter weight;  // in x out
  Parameter bias;    // out

 private:
  Activation act_ = Activation::Identity;
};

/// Multilayer perceptron: tanh hidden layers, each optionally followed by
/// dropout, then an output layer with its own activation.
class Mlp {
 public:
  /// Intermediate values of one forward pass, kept for input_gradient().
  struct Trace {
    Var output;
    std::vector<Var> hidden;  // post-tanh, pre-dropout activations
    std::vector<Var> masks;   // dropout masks (invalid Var when inactive)
  };

  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
      std::size_t out, Activation output_act, double dropout_rate, Rng& rng);

  Var forward(Tape& tape, Var x, Mode mode, Rng* rng) const;
  Trace trace(Tape& tape, Var x, Mode mode, Rng* rng) const;

  /// d(output)/d(input) expressed as ordinary tape operations, so that a
  /// loss built on it (a gradient penalty) is differentiable with respect to
  /// the weights by a normal backward pass.  Requires a single identity
  /// output unit.  Returns a tensor shaped like the input.
  Var input_gradient(Tape& tape, const Trace& trace) const;

  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }
  double dropout_rate() const { return dropout_; }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Parameter*> parameters();

 private:
  std::vector<Dense> layers_;
  double dropout_ = 0.0;
};

/// LSTM cell without peepholes.  The four gate blocks share one weight matrix
/// over [x_t ; h_{t-1}], laid out column-wise as [forget | input | output |
/// candidate]:
///
///   f = sigmoid(.)  i = sigmoid(.)  o = sigmoid(.)  g = tanh(.)
///   c = f * c_prev + i * g
///   h = o * tanh(c)
class LstmCell {
 public:
  struct State {
    Var h;
    Var c;
  };

  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden, Rng& rng);

  State step(Tape& tape, Var x, State prev) const;
  State zero_state(Tape& tape, std::size_t batch) const;

  std::size_t input_size() const { return weight.value.dim(0) - hidden_; }
  std::size_t hidden_size() const { return hidden_; }
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }

  Parameter weight;  // (input + hidden) x 4*hidden
  Parameter bias;    // 4*hidden, forget block initialised to 1

 private:
  std::size_t hidden_ = 0;
};

/// Stacked LSTM layers.  Layer l consumes the hidden sequence of layer l-1;
/// initial states are zero.
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(const std::string& name, std::size_t input_size,
            const std::vector<std::size_t>& hidden, Rng& rng);

  /// Hidden sequence of the top layer, one (batch x width) Var per step.
  std::vector<Var> forward(Tape& tape, std::span<const Var> seq) const;
  /// Top-layer hidden state after the last step.
  Var forward_last(Tape& tape, std::span<const Var> seq) const;

  std::size_t output_size() const { return cells_.back().hidden_size(); }
  const std::vector<LstmCell>& cells() const { return cells_; }
  std::vector<Parameter*> parameters();

 private:
  std::vector<LstmCell> cells_;
};

/// Mean of squared differences over all entries.
Var mse_loss(Tape& tape, Var pred, Var target);

/// Mean over rows of -log p[true class].  `probs` rows must sum to 1 within
/// 1e-6; `onehot` rows are one-hot labels.
Var cross_entropy(Tape& tape, Var probs, Var onehot);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update applied in place.  Throws NumericalError
/// without touching parameters or state if any gradient is non-finite.
void adam_step(std::span<Parameter* const> params, std::span<const Tensor> grads,
               AdamState& state);

/// Clamp every parameter value to [-limit, limit].
void clip_parameters(std::span<Parameter* const> params, double limit);

/// Gather a parameter list from several models.
template <typename... Models>
std::vector<Parameter*> collect_parameters(Models&... models) {
  std::vector<Parameter*> out;
  (
      [&] {
        auto ps = models.parameters();
        out.insert(out.end(), ps.begin(), ps.end());
      }(),
      ...);
  return out;
}

}  // namespace ygan::nets
