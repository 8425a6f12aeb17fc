#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

struct SvmOptions {
  double c = 1.0;
  double tolerance = 1e-6;  // stop when a pass improves the dual objective by less than this
  std::size_t max_passes = 10000;
  std::uint64_t seed = 0;
};

/// Binary linear SVM w.x + b. The bias is learned as the weight of a constant
/// feature, so it is regularized together with w.
struct BinarySvm {
  std::vector<double> weight;
  double bias = 0.0;
  std::size_t passes = 0;

  double score(std::span<const double> x) const {
    double s = bias;
    for (std::size_t d = 0; d < weight.size(); ++d) s += weight[d] * x[d];
    return s;
  }
};

/// Primal objective 0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b)).
inline double svm_primal_objective(std::span<const double> weight, double bias, const Matrix& x,
                                   std::span<const int> y, double c) {
  double reg = bias * bias;
  for (double w : weight) reg += w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = bias;
    for (std::size_t d = 0; d < weight.size(); ++d) s += weight[d] * x(i, d);
    hinge += std::max(0.0, 1.0 - y[i] * s);
  }
  return 0.5 * reg + c * hinge;
}

/// Dual coordinate descent for the L1-loss (hinge) SVM, visiting samples in
/// a seeded random order each pass.
inline BinarySvm fit_binary_svm(const Matrix& x, std::span<const int> y, const SvmOptions& opt) {
  const std::size_t n = x.rows(), dim = x.cols();
  if (y.size() != n) throw ShapeError("svm: label count differs from sample count");
  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(dim + 1, 0.0);  // last entry is the bias weight
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 1.0;
    for (double v : x.row(i)) s += v * v;
    qii[i] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opt.seed);

  auto dual = [&] {
    double norm = 0.0;
    for (double v : w) norm += v * v;
    return 0.5 * norm - std::accumulate(alpha.begin(), alpha.end(), 0.0);
  };

  BinarySvm model;
  double previous = dual();
  for (std::size_t pass = 1; pass <= opt.max_passes; ++pass) {
    rng.shuffle(std::span(order));
    for (std::size_t i : order) {
      const auto xi = x.row(i);
      double margin = w[dim];
      for (std::size_t d = 0; d < dim; ++d) margin += w[d] * xi[d];
      const double g = y[i] * margin - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] == opt.c) pg = std::max(g, 0.0);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, opt.c);
      const double delta = (alpha[i] - old) * y[i];
      for (std::size_t d = 0; d < dim; ++d) w[d] += delta * xi[d];
      w[dim] += delta;
    }
    model.passes = pass;
    const double current = dual();
    if (previous - current < opt.tolerance) break;
    previous = current;
  }
  model.weight.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(dim));
  model.bias = w[dim];
  return model;
}

/// One-vs-rest linear SVM; prediction is the argmax of the class scores.
struct LinearSvmModel {
  std::vector<Emotion> classes;
  std::vector<BinarySvm> machines;  // parallel to classes
  double c = 1.0;

  std::vector<double> scores(std::span<const double> x) const {
    std::vector<double> s;
    s.reserve(machines.size());
    for (const auto& m : machines) s.push_back(m.score(x));
    return s;
  }

  Emotion predict(std::span<const double> x) const {
    const auto s = scores(x);
    return classes[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())];
  }

  std::vector<Emotion> predict(const Matrix& x) const {
    std::vector<Emotion> out;
    out.reserve(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(predict(x.row(i)));
    return out;
  }
};

inline LinearSvmModel svm_fit(const Matrix& z, std::span<const Emotion> labels, const SvmOptions& opt = {}) {
  if (z.rows() != labels.size()) throw ShapeError("svm_fit: label count differs from sample count");
  std::vector<Emotion> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw ContractError("svm_fit: need at least two classes, got " + std::to_string(classes.size()));

  LinearSvmModel model;
  model.classes = classes;
  model.c = opt.c;
  std::vector<int> y(labels.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == classes[k] ? 1 : -1;
    SvmOptions sub = opt;
    sub.seed = derive_seed(opt.seed, k);
    model.machines.push_back(fit_binary_svm(z, y, sub));
  }
  return model;
}

}  // namespace emolat
