// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense double tensors.
//
// A Tape records every primitive evaluated through it as a node holding the
// forward value, the input node ids and any auxiliary values the backward rule
// needs.  Nodes are appended in evaluation order, so the tape is a topological
// order by construction and backward() is a single reverse sweep.
//
//   Tape tape;
//   Var x = tape.input(Tensor({3}, {1.0, 2.0, 3.0}));
//   Var y = tape.sum(tape.square(x));
//   Gradients g = tape.backward(y);
//   g[x];  // 2x
//
// Broadcasting is limited to the leading axes: in add/sub/mul the right-hand
// operand may have a shape equal to a trailing suffix of the left-hand shape
// (a bias vector over a batch, for instance) or be a single element.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "yieldgan/tensor.hpp"

namespace ygan::ad {

/// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Shift,
  Tanh,
  Sigmoid,
  Softplus,
  Relu,
  Softmax,
  Log,
  Square,
  Sqrt,
  Concat,
  Slice,
  Reshape,
  Transpose,
  Sum,
  Mean,
  RowSum,
};

const char* op_name(Op op);

class Tape;

/// Gradient of a scalar output with respect to recorded nodes.  Leaves the
/// output does not depend on report an all-zero tensor of their shape.
class Gradients {
 public:
  const Tensor& operator[](Var v) const;

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<Tensor> zeros_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Leaf that never receives gradient.
  Var constant(Tensor value);
  /// Differentiable leaf.
  Var input(Tensor value);
  /// Binds a model parameter as a differentiable leaf; repeated calls with
  /// the same parameter return the same node.
  Var param(const Parameter& p);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const;

  // Primitives.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var shift(Var a, double offset);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var relu(Var a);
  /// Softmax over the last axis.
  Var softmax(Var a);
  Var log(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  /// Concatenation along the last axis; leading shapes must agree.
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }
  /// Columns [begin, end) of the last axis.
  Var slice(Var a, std::size_t begin, std::size_t end);
  Var reshape(Var a, Shape shape);
  /// Transpose of a rank-2 tensor.
  Var transpose(Var a);
  Var sum(Var a);
  Var mean(Var a);
  /// Sum over the last axis, keeping it with extent 1.
  Var row_sum(Var a);

  /// Reverse sweep from a single-element output.
  Gradients backward(Var output) const;

  /// Gradients for a list of parameters in order; unbound parameters get
  /// zeros.
  std::vector<Tensor> param_grads(const Gradients& g,
                                  std::span<Parameter* const> params) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Tensor value;
    std::size_t aux0 = 0;  // slice begin
    std::size_t aux1 = 0;  // slice end
    double scalar = 0.0;   // scale factor
  };

  const Node& node(Var v) const;
  Var push(Op op, std::vector<std::size_t> inputs, Tensor value);
  void backward_node(std::size_t id, std::vector<Tensor>& grads) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

/// Central-difference gradient check of a scalar function of one input.
/// Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|, |numeric_i|).
using InputFn = std::function<Var(Tape&, Var)>;
double grad_check(const InputFn& f, const Tensor& x, double eps = 1e-5);

/// Same check over every coordinate of a set of parameters.  Parameters are
/// perturbed in place and restored.
using ParamFn = std::function<Var(Tape&)>;
double grad_check(const ParamFn& f, std::span<Parameter* const> params, double eps = 1e-5);

}  // namespace ygan::ad
