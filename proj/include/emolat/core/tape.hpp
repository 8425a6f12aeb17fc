#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"

namespace emolat {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
};

/// Primitive operations the tape can replay backwards.
enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kAddRow,   // matrix + broadcast 1xC row
  kAffine,   // alpha * a + beta
  kRelu,
  kTanh,
  kExp,
  kSquare,
  kClamp,    // elementwise clamp to [lo, hi]
  kRowNorm,  // Nx C -> Nx1 Euclidean norm of each row
  kSum,      // -> 1x1
  kDiv,      // 1x1 / 1x1
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order, so the
/// creation order is a topological order and the backward pass walks it in
/// reverse. Gradients accumulate additively where a node fans out.
class Tape {
 public:
  struct Node {
    OpKind op;
    Matrix value;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double alpha = 0.0;
    double beta = 0.0;
    bool needs_grad = false;
  };

  Var constant(Matrix value) { return push({OpKind::kConstant, std::move(value)}); }

  /// Registers a trainable leaf. backward() returns gradients in the order
  /// parameters were registered.
  Var parameter(Matrix value) {
    Node n{OpKind::kParameter, std::move(value)};
    n.needs_grad = true;
    Var v = push(std::move(n));
    parameters_.push_back(v.id);
    return v;
  }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t parameter_count() const noexcept { return parameters_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  Var record(OpKind op, Matrix value, std::size_t lhs, std::size_t rhs = 0, double alpha = 0.0,
             double beta = 0.0) {
    Node n{op, std::move(value), lhs, rhs, alpha, beta};
    n.needs_grad = nodes_[lhs].needs_grad || (is_binary(op) && nodes_[rhs].needs_grad);
    return push(std::move(n));
  }

  /// d(loss)/d(parameter) for every registered parameter. Parameters that do
  /// not influence the loss receive an all-zero gradient.
  std::vector<Matrix> backward(Var loss) const;

  static bool is_binary(OpKind op) noexcept {
    switch (op) {
      case OpKind::kMatMul:
      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul:
      case OpKind::kAddRow:
      case OpKind::kDiv:
        return true;
      default:
        return false;
    }
  }

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> parameters_;
};

inline const Matrix& Var::value() const { return tape->value(*this); }

namespace ad {

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ContractError("operands recorded on different tapes");
  return *a.tape;
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  return t.record(OpKind::kMatMul, emolat::matmul(a.value(), b.value()), a.id, b.id);
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record(OpKind::kAdd, detail::zip(a.value(), b.value(), [](double x, double y) { return x + y; }),
                  a.id, b.id);
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(OpKind::kSub, detail::zip(a.value(), b.value(), [](double x, double y) { return x - y; }),
                  a.id, b.id);
}

inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  return t.record(OpKind::kMul, detail::zip(a.value(), b.value(), [](double x, double y) { return x * y; }),
                  a.id, b.id);
}

/// a + 1xC row broadcast over every row of a.
inline Var add_row(Var a, Var row) {
  Tape& t = detail::same_tape(a, row);
  const Matrix& m = a.value();
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != m.cols()) {
    throw ShapeError("add_row: shape mismatch " + m.shape() + " + " + r.shape());
  }
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += r(0, j);
  }
  return t.record(OpKind::kAddRow, std::move(out), a.id, row.id);
}

inline Var affine(Var a, double alpha, double beta = 0.0) {
  return a.tape->record(OpKind::kAffine, detail::map(a.value(), [=](double x) { return alpha * x + beta; }),
                        a.id, 0, alpha, beta);
}

inline Var scale(Var a, double alpha) { return affine(a, alpha, 0.0); }

inline Var relu(Var a) {
  return a.tape->record(OpKind::kRelu, detail::map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), a.id);
}

inline Var tanh(Var a) {
  return a.tape->record(OpKind::kTanh, detail::map(a.value(), [](double x) { return std::tanh(x); }), a.id);
}

inline Var exp(Var a) {
  return a.tape->record(OpKind::kExp, detail::map(a.value(), [](double x) { return std::exp(x); }), a.id);
}

inline Var square(Var a) {
  return a.tape->record(OpKind::kSquare, detail::map(a.value(), [](double x) { return x * x; }), a.id);
}

inline Var clamp(Var a, double lo, double hi) {
  return a.tape->record(OpKind::kClamp, detail::map(a.value(), [=](double x) { return std::clamp(x, lo, hi); }),
                        a.id, 0, lo, hi);
}

/// Euclidean norm of each row. The gradient at a zero row is taken as zero.
inline Var row_norm(Var a) {
  const Matrix& m = a.value();
  Matrix out(m.rows(), 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (double v : m.row(i)) acc += v * v;
    out(i, 0) = std::sqrt(acc);
  }
  return a.tape->record(OpKind::kRowNorm, std::move(out), a.id);
}

inline Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return a.tape->record(OpKind::kSum, Matrix(1, 1, acc), a.id);
}

inline Var div(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  if (a.value().size() != 1 || b.value().size() != 1) {
    throw ShapeError("div: scalar operands required, got " + a.value().shape() + " / " + b.value().shape());
  }
  const double den = b.value()(0, 0);
  if (den == 0.0) throw NumericError("div: division by zero");
  return t.record(OpKind::kDiv, Matrix(1, 1, a.value()(0, 0) / den), a.id, b.id);
}

}  // namespace ad

inline std::vector<Matrix> Tape::backward(Var loss) const {
  if (loss.tape != this) throw ContractError("backward: loss was recorded on another tape");
  const Matrix& lv = nodes_.at(loss.id).value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be a 1x1 scalar, got " + lv.shape());
  }

  std::vector<Matrix> grads(loss.id + 1);
  auto grad_of = [&](std::size_t id) -> Matrix& {
    if (grads[id].empty()) grads[id] = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
    return grads[id];
  };
  grad_of(loss.id)(0, 0) = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || grads[id].empty()) continue;
    const Matrix& g = grads[id];
    const auto gd = g.data();

    auto accumulate = [&](std::size_t target, auto&& f) {
      if (!nodes_[target].needs_grad) return;
      auto dst = grad_of(target).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += f(i);
    };

    switch (n.op) {
      case OpKind::kConstant:
      case OpKind::kParameter:
        break;
      case OpKind::kMatMul: {
        const Matrix& a = nodes_[n.lhs].value;
        const Matrix& b = nodes_[n.rhs].value;
        if (nodes_[n.lhs].needs_grad) {
          const Matrix ga = matmul_nt(g, b);
          accumulate(n.lhs, [&](std::size_t i) { return ga.data()[i]; });
        }
        if (nodes_[n.rhs].needs_grad) {
          const Matrix gb = matmul_tn(a, g);
          accumulate(n.rhs, [&](std::size_t i) { return gb.data()[i]; });
        }
        break;
      }
      case OpKind::kAdd:
        accumulate(n.lhs, [&](std::size_t i) { return gd[i]; });
        accumulate(n.rhs, [&](std::size_t i) { return gd[i]; });
        break;
      case OpKind::kSub:
        accumulate(n.lhs, [&](std::size_t i) { return gd[i]; });
        accumulate(n.rhs, [&](std::size_t i) { return -gd[i]; });
        break;
      case OpKind::kMul: {
        const auto a = nodes_[n.lhs].value.data();
        const auto b = nodes_[n.rhs].value.data();
        accumulate(n.lhs, [&](std::size_t i) { return gd[i] * b[i]; });
        accumulate(n.rhs, [&](std::size_t i) { return gd[i] * a[i]; });
        break;
      }
      case OpKind::kAddRow: {
        accumulate(n.lhs, [&](std::size_t i) { return gd[i]; });
        if (nodes_[n.rhs].needs_grad) {
          Matrix& gr = grad_of(n.rhs);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
        }
        break;
      }
      case OpKind::kAffine:
        accumulate(n.lhs, [&](std::size_t i) { return n.alpha * gd[i]; });
        break;
      case OpKind::kRelu: {
        const auto a = nodes_[n.lhs].value.data();
        accumulate(n.lhs, [&](std::size_t i) { return a[i] > 0.0 ? gd[i] : 0.0; });
        break;
      }
      case OpKind::kTanh: {
        const auto y = n.value.data();
        accumulate(n.lhs, [&](std::size_t i) { return gd[i] * (1.0 - y[i] * y[i]); });
        break;
      }
      case OpKind::kExp: {
        const auto y = n.value.data();
        accumulate(n.lhs, [&](std::size_t i) { return gd[i] * y[i]; });
        break;
      }
      case OpKind::kSquare: {
        const auto a = nodes_[n.lhs].value.data();
        accumulate(n.lhs, [&](std::size_t i) { return 2.0 * a[i] * gd[i]; });
        break;
      }
      case OpKind::kClamp: {
        const auto a = nodes_[n.lhs].value.data();
        accumulate(n.lhs, [&](std::size_t i) { return (a[i] >= n.alpha && a[i] <= n.beta) ? gd[i] : 0.0; });
        break;
      }
      case OpKind::kRowNorm: {
        const Matrix& a = nodes_[n.lhs].value;
        if (!nodes_[n.lhs].needs_grad) break;
        Matrix& ga = grad_of(n.lhs);
        for (std::size_t r = 0; r < a.rows(); ++r) {
          const double norm = n.value(r, 0);
          if (norm == 0.0) continue;
          const double s = g(r, 0) / norm;
          for (std::size_t c = 0; c < a.cols(); ++c) ga(r, c) += s * a(r, c);
        }
        break;
      }
      case OpKind::kSum:
        accumulate(n.lhs, [&](std::size_t) { return gd[0]; });
        break;
      case OpKind::kDiv: {
        const double a = nodes_[n.lhs].value(0, 0);
        const double b = nodes_[n.rhs].value(0, 0);
        accumulate(n.lhs, [&](std::size_t) { return gd[0] / b; });
        accumulate(n.rhs, [&](std::size_t) { return -gd[0] * a / (b * b); });
        break;
      }
    }
  }

  std::vector<Matrix> out;
  out.reserve(parameters_.size());
  for (std::size_t id : parameters_) {
    if (id <= loss.id && !grads[id].empty()) {
      out.push_back(grads[id]);
    } else {
      out.emplace_back(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
  }
  return out;
}

}  // namespace emolat
