// SPDX-License-Identifier: Apache-2.0
#include "yieldgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "yieldgan/error.hpp"
#include "yieldgan/kernels.hpp"

namespace ygan::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Relu: return "relu";
    case Op::Softmax: return "softmax";
    case Op::Log: return "log";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Reshape: return "reshape";
    case Op::Transpose: return "transpose";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::RowSum: return "row_sum";
  }
  return "?";
}

const Tensor& Gradients::operator[](Var v) const {
  if (v.id >= grads_.size()) throw ConfigError("gradient requested for a node not on this tape");
  if (!grads_[v.id].empty()) return grads_[v.id];
  if (zeros_[v.id].empty()) {
    throw ConfigError("no gradient reached interior node " + std::to_string(v.id));
  }
  return zeros_[v.id];
}

namespace {

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

bool is_suffix(const Shape& inner, const Shape& outer) {
  if (inner.size() > outer.size()) return false;
  return std::equal(inner.rbegin(), inner.rend(), outer.rbegin());
}

// Right operand b broadcasts over the leading axes of a.
void check_broadcast(const char* what, const Tensor& a, const Tensor& b) {
  if (b.size() == 1 || is_suffix(b.shape(), a.shape())) return;
  throw ConfigError(std::string(what) + ": cannot broadcast " + shape_string(b.shape()) +
                    " over " + shape_string(a.shape()));
}

Tensor& accumulate_into(std::vector<Tensor>& grads, std::size_t id, const Shape& shape) {
  if (grads[id].empty()) grads[id] = Tensor(shape, 0.0);
  return grads[id];
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ConfigError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Op Tape::op(Var v) const { return node(v).op; }

Var Tape::push(Op op, std::vector<std::size_t> inputs, Tensor value) {
  Node n;
  n.op = op;
  for (auto i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::input(Tensor value) {
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::param(const Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var{it->second};
  Var v = input(p.value);
  bound_.emplace(&p, v.id);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw ConfigError("matmul: incompatible shapes " + shape_string(A.shape()) + " and " +
                      shape_string(B.shape()));
  }
  const kernels::GemmShape s{A.dim(0), B.dim(1), A.dim(1)};
  Tensor out({s.n, s.m});
  kernels::gemm(kernels::Trans::No, kernels::Trans::No, s, A.values(), B.values(),
                out.values(), false);
  return push(Op::MatMul, {a.id, b.id}, std::move(out));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_broadcast("add", A, B);
  Tensor out = A;
  const std::size_t bs = B.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i % bs];
  return push(Op::Add, {a.id, b.id}, std::move(out));
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_broadcast("sub", A, B);
  Tensor out = A;
  const std::size_t bs = B.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i % bs];
  return push(Op::Sub, {a.id, b.id}, std::move(out));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check_broadcast("mul", A, B);
  Tensor out = A;
  const std::size_t bs = B.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i % bs];
  return push(Op::Mul, {a.id, b.id}, std::move(out));
}

Var Tape::scale(Var a, double factor) {
  Tensor out = value(a);
  for (auto& v : out.values()) v *= factor;
  Var r = push(Op::Scale, {a.id}, std::move(out));
  nodes_[r.id].scalar = factor;
  return r;
}

Var Tape::shift(Var a, double offset) {
  Tensor out = value(a);
  for (auto& v : out.values()) v += offset;
  return push(Op::Shift, {a.id}, std::move(out));
}

Var Tape::tanh(Var a) {
  const Tensor& A = value(a);
  Tensor out(A.shape());
  kernels::tanh(A.values(), out.values());
  return push(Op::Tanh, {a.id}, std::move(out));
}

Var Tape::sigmoid(Var a) {
  const Tensor& A = value(a);
  Tensor out(A.shape());
  kernels::sigmoid(A.values(), out.values());
  return push(Op::Sigmoid, {a.id}, std::move(out));
}

Var Tape::softplus(Var a) {
  Tensor out = value(a);
  for (auto& v : out.values()) v = softplus_scalar(v);
  return push(Op::Softplus, {a.id}, std::move(out));
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push(Op::Relu, {a.id}, std::move(out));
}

Var Tape::softmax(Var a) {
  Tensor out = value(a);
  const std::size_t k = out.last_dim();
  const std::size_t rows = out.size() / k;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.values().data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= z;
  }
  return push(Op::Softmax, {a.id}, std::move(out));
}

Var Tape::log(Var a) {
  Tensor out = value(a);
  for (auto& v : out.values()) {
    if (!(v > 0.0)) throw NumericalError("log of non-positive value " + std::to_string(v));
    v = std::log(v);
  }
  return push(Op::Log, {a.id}, std::move(out));
}

Var Tape::square(Var a) {
  Tensor out = value(a);
  for (auto& v : out.values()) v *= v;
  return push(Op::Square, {a.id}, std::move(out));
}

Var Tape::sqrt(Var a) {
  Tensor out = value(a);
  for (auto& v : out.values()) {
    if (v < 0.0) throw NumericalError("sqrt of negative value " + std::to_string(v));
    v = std::sqrt(v);
  }
  return push(Op::Sqrt, {a.id}, std::move(out));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat: no inputs");
  const Shape& first = shape(parts[0]);
  Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  for (Var p : parts) {
    const Shape& s = shape(p);
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw ConfigError("concat: leading shapes differ: " + shape_string(first) + " vs " +
                        shape_string(s));
    }
    total += s.back();
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  const std::size_t rows = out.size() / total;
  std::size_t offset = 0;
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (Var p : parts) {
    const Tensor& v = value(p);
    const std::size_t w = v.last_dim();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.values().data() + r * w, w, out.values().data() + r * total + offset);
    }
    offset += w;
    ids.push_back(p.id);
  }
  return push(Op::Concat, std::move(ids), std::move(out));
}

Var Tape::slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor& A = value(a);
  const std::size_t k = A.last_dim();
  if (begin >= end || end > k) {
    throw ConfigError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                      ") invalid for last axis of " + shape_string(A.shape()));
  }
  Shape s = A.shape();
  s.back() = end - begin;
  Tensor out(s);
  const std::size_t rows = A.size() / k;
  const std::size_t w = end - begin;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(A.values().data() + r * k + begin, w, out.values().data() + r * w);
  }
  Var v = push(Op::Slice, {a.id}, std::move(out));
  nodes_[v.id].aux0 = begin;
  nodes_[v.id].aux1 = end;
  return v;
}

Var Tape::reshape(Var a, Shape shape) {
  return push(Op::Reshape, {a.id}, value(a).reshaped(std::move(shape)));
}

Var Tape::transpose(Var a) {
  const Tensor& A = value(a);
  if (A.rank() != 2) throw ConfigError("transpose: rank-2 tensor required");
  const std::size_t r = A.dim(0), c = A.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  }
  return push(Op::Transpose, {a.id}, std::move(out));
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).values()) s += v;
  return push(Op::Sum, {a.id}, Tensor::scalar(s));
}

Var Tape::mean(Var a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (double v : A.values()) s += v;
  return push(Op::Mean, {a.id}, Tensor::scalar(s / static_cast<double>(A.size())));
}

Var Tape::row_sum(Var a) {
  const Tensor& A = value(a);
  const std::size_t k = A.last_dim();
  Shape s = A.shape();
  s.back() = 1;
  Tensor out(s);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += A[r * k + j];
    out[r] = acc;
  }
  return push(Op::RowSum, {a.id}, std::move(out));
}

Gradients Tape::backward(Var output) const {
  const Tensor& out = value(output);
  if (out.size() != 1) {
    throw ConfigError("backward: output must be scalar, got " + shape_string(out.shape()));
  }
  Gradients g;
  g.grads_.resize(nodes_.size());
  g.zeros_.resize(nodes_.size());
  g.grads_[output.id] = Tensor(out.shape(), 1.0);
  for (std::size_t id = output.id + 1; id-- > 0;) {
    if (g.grads_[id].empty() || !nodes_[id].requires_grad) continue;
    backward_node(id, g.grads_);
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (g.grads_[id].empty() && nodes_[id].op == Op::Leaf) {
      g.zeros_[id] = Tensor(nodes_[id].value.shape(), 0.0);
    }
  }
  return g;
}

void Tape::backward_node(std::size_t id, std::vector<Tensor>& grads) const {
  const Node& n = nodes_[id];
  const Tensor& g = grads[id];
  const Tensor& y = n.value;
  auto needs = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
  auto grad_of = [&](std::size_t k) -> Tensor& {
    return accumulate_into(grads, n.inputs[k], nodes_[n.inputs[k]].value.shape());
  };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::MatMul: {
      const Tensor& A = in_value(0);
      const Tensor& B = in_value(1);
      const std::size_t rows = A.dim(0), inner = A.dim(1), cols = B.dim(1);
      if (needs(0)) {
        kernels::gemm(kernels::Trans::No, kernels::Trans::Yes, {rows, inner, cols}, g.values(),
                      B.values(), grad_of(0).values(), true);
      }
      if (needs(1)) {
        kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, {inner, cols, rows}, A.values(),
                      g.values(), grad_of(1).values(), true);
      }
      break;
    }
    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      if (needs(0)) {
        Tensor& ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (needs(1)) {
        Tensor& gb = grad_of(1);
        const std::size_t bs = gb.size();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % bs] += sign * g[i];
      }
      break;
    }
    case Op::Mul: {
      const Tensor& A = in_value(0);
      const Tensor& B = in_value(1);
      const std::size_t bs = B.size();
      if (needs(0)) {
        Tensor& ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i % bs];
      }
      if (needs(1)) {
        Tensor& gb = grad_of(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % bs] += g[i] * A[i];
      }
      break;
    }
    case Op::Scale: {
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.scalar * g[i];
      break;
    }
    case Op::Shift:
    case Op::Reshape: {
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      break;
    }
    case Op::Tanh: {
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case Op::Sigmoid: {
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case Op::Softplus: {
      const Tensor& A = in_value(0);
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid_scalar(A[i]);
      break;
    }
    case Op::Relu: {
      const Tensor& A = in_value(0);
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (A[i] > 0.0) ga[i] += g[i];
      }
      break;
    }
    case Op::Softmax: {
      Tensor& ga = grad_of(0);
      const std::size_t k = y.last_dim();
      const std::size_t rows = y.size() / k;
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
        for (std::size_t j = 0; j < k; ++j) {
          ga[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
        }
      }
      break;
    }
    case Op::Log: {
      const Tensor& A = in_value(0);
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / A[i];
      break;
    }
    case Op::Square: {
      const Tensor& A = in_value(0);
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * A[i] * g[i];
      break;
    }
    case Op::Sqrt: {
      Tensor& ga = grad_of(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 0.5 * g[i] / y[i];
      break;
    }
    case Op::Concat: {
      const std::size_t total = y.last_dim();
      const std::size_t rows = y.size() / total;
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t w = in_value(k).last_dim();
        if (needs(k)) {
          Tensor& gk = grad_of(k);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < w; ++j) gk[r * w + j] += g[r * total + offset + j];
          }
        }
        offset += w;
      }
      break;
    }
    case Op::Slice: {
      Tensor& ga = grad_of(0);
      const std::size_t k = ga.last_dim();
      const std::size_t w = n.aux1 - n.aux0;
      const std::size_t rows = ga.size() / k;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < w; ++j) ga[r * k + n.aux0 + j] += g[r * w + j];
      }
      break;
    }
    case Op::Transpose: {
      Tensor& ga = grad_of(0);
      const std::size_t r = ga.dim(0), c = ga.dim(1);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
      }
      break;
    }
    case Op::Sum: {
      Tensor& ga = grad_of(0);
      const double gv = g[0];
      for (auto& v : ga.values()) v += gv;
      break;
    }
    case Op::Mean: {
      Tensor& ga = grad_of(0);
      const double gv = g[0] / static_cast<double>(ga.size());
      for (auto& v : ga.values()) v += gv;
      break;
    }
    case Op::RowSum: {
      Tensor& ga = grad_of(0);
      const std::size_t k = ga.last_dim();
      for (std::size_t r = 0; r < g.size(); ++r) {
        for (std::size_t j = 0; j < k; ++j) ga[r * k + j] += g[r];
      }
      break;
    }
  }
}

std::vector<Tensor> Tape::param_grads(const Gradients& g,
                                      std::span<Parameter* const> params) const {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) {
    if (auto it = bound_.find(p); it != bound_.end()) {
      out.push_back(g[Var{it->second}]);
    } else {
      out.emplace_back(p->value.shape(), 0.0);
    }
  }
  return out;
}

namespace {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

double scalar_output(const Tape& tape, Var out) {
  const Tensor& v = tape.value(out);
  if (v.size() != 1) throw ConfigError("grad_check: function must return a scalar");
  return v[0];
}

}  // namespace

double grad_check(const InputFn& f, const Tensor& x, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.input(x);
    Var out = f(tape, xv);
    scalar_output(tape, out);
    analytic = tape.backward(out)[xv];
  }
  auto eval = [&](const Tensor& at) {
    Tape tape;
    return scalar_output(tape, f(tape, tape.input(at)));
  };
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = eval(probe);
    probe[i] = orig - eps;
    const double fm = eval(probe);
    probe[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (fp - fm) / (2.0 * eps)));
  }
  return worst;
}

double grad_check(const ParamFn& f, std::span<Parameter* const> params, double eps) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var out = f(tape);
    scalar_output(tape, out);
    analytic = tape.param_grads(tape.backward(out), params);
  }
  auto eval = [&] {
    Tape tape;
    return scalar_output(tape, f(tape));
  };
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& v = params[p]->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + eps;
      const double fp = eval();
      v[i] = orig - eps;
      const double fm = eval();
      v[i] = orig;
      worst = std::max(worst, relative_error(analytic[p][i], (fp - fm) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace ygan::ad
