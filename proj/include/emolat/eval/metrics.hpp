#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "emolat/core/error.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

/// Macro-averaged recall over `classes`. Classes with no true samples are
/// left out of the average.
inline double balanced_accuracy(std::span<const Emotion> truth, std::span<const Emotion> predicted,
                                const ClassSet& classes) {
  if (truth.size() != predicted.size()) throw ContractError("balanced_accuracy: label vectors differ in length");
  if (truth.empty()) throw ContractError("balanced_accuracy: empty input");
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (Emotion e : classes.classes()) {
    std::size_t total = 0, hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != e) continue;
      ++total;
      if (predicted[i] == e) ++hit;
    }
    if (total == 0) continue;
    recall_sum += static_cast<double>(hit) / static_cast<double>(total);
    ++present;
  }
  if (present == 0) throw ContractError("balanced_accuracy: no true label belongs to the class set");
  return recall_sum / static_cast<double>(present);
}

/// Across-fold mean with a 95% confidence half-width, either
/// 1.96 * s / sqrt(K) or t_{0.975, K-1} * s / sqrt(K), s the sample std.
struct MeanCi {
  double mean = 0.0;
  double stddev = 0.0;
  double half_width = 0.0;
};

inline MeanCi mean_ci(std::span<const double> values, bool student_t = false) {
  if (values.empty()) throw ContractError("mean_ci: no values");
  const double k = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= k;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  MeanCi out;
  out.mean = mean;
  if (values.size() < 2) return out;
  out.stddev = std::sqrt(var / (k - 1.0));
  double z = 1.96;
  if (student_t) {
    boost::math::students_t dist(k - 1.0);
    z = boost::math::quantile(dist, 0.975);
  }
  out.half_width = z * out.stddev / std::sqrt(k);
  return out;
}

}  // namespace emolat
