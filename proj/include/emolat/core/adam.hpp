#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"

namespace emolat {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for a fixed list of parameter tensors.
class AdamState {
 public:
  AdamState() = default;

  AdamState(std::span<const Matrix* const> params, AdamOptions options) : options_(options) {
    first_.reserve(params.size());
    second_.reserve(params.size());
    for (const Matrix* p : params) {
      first_.emplace_back(p->rows(), p->cols());
      second_.emplace_back(p->rows(), p->cols());
    }
  }

  const AdamOptions& options() const noexcept { return options_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<Matrix>& first_moment() const noexcept { return first_; }
  const std::vector<Matrix>& second_moment() const noexcept { return second_; }

  friend void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads);

 private:
  AdamOptions options_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::uint64_t step_ = 0;
};

/// One bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size() || params.size() != state.first_.size()) {
    throw ShapeError("adam_step: expected " + std::to_string(state.first_.size()) + " tensors, got " +
                     std::to_string(params.size()) + " params and " + std::to_string(grads.size()) + " grads");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "adam_step");
    require_same_shape(*params[i], state.first_[i], "adam_step");
  }

  const AdamOptions& o = state.options_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.first_[i].data();
    auto v = state.second_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace emolat
