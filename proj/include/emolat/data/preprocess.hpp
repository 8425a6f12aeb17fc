#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

/// Per-column mean and population standard deviation.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline ColumnStats column_stats(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  ColumnStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = x(i, j) - s.mean[j];
      s.stddev[j] += dev * dev;
    }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(n));
  return s;
}

struct OutlierResult {
  FeatureMatrix kept;
  std::vector<std::size_t> removed;  // row indices into the input
};

/// Drops every sample that has at least one feature with |z| > threshold,
/// where z is computed from this matrix's own column statistics. Constant
/// columns contribute z = 0.
inline OutlierResult remove_outliers(const FeatureMatrix& fm, double threshold = 10.0) {
  fm.validate();
  if (fm.size() < 2) throw ContractError("remove_outliers: need at least 2 samples, got " + std::to_string(fm.size()));
  const ColumnStats stats = column_stats(fm.features);
  std::vector<std::size_t> keep;
  OutlierResult result;
  for (std::size_t i = 0; i < fm.size(); ++i) {
    bool outlier = false;
    for (std::size_t j = 0; j < fm.dim() && !outlier; ++j) {
      if (stats.stddev[j] == 0.0) continue;
      const double z = (fm.features(i, j) - stats.mean[j]) / stats.stddev[j];
      outlier = z < -threshold || z > threshold;
    }
    (outlier ? result.removed : keep).push_back(i);
  }
  if (keep.empty()) throw EmptyDatasetError("remove_outliers: every sample exceeded the z-score threshold");
  result.kept = fm.subset(keep);
  return result;
}

/// Frozen per-feature affine normalization.
struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::size_t> floored;  // columns whose std was raised to kStdFloor

  Matrix apply(const Matrix& x) const {
    check(x);
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / stddev[j];
    return out;
  }

  FeatureMatrix apply(const FeatureMatrix& fm) const {
    FeatureMatrix out = fm;
    out.features = apply(fm.features);
    return out;
  }

  Matrix inverse(const Matrix& z) const {
    check(z);
    Matrix out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) * stddev[j] + mean[j];
    return out;
  }

 private:
  void check(const Matrix& x) const {
    if (x.cols() != mean.size()) {
      throw ShapeError("standardizer fitted on " + std::to_string(mean.size()) + " features, input has " +
                       std::to_string(x.cols()));
    }
  }
};

inline Standardizer fit_standardizer(const Matrix& x) {
  if (x.rows() < 2) throw ContractError("fit_standardizer: need at least 2 samples, got " + std::to_string(x.rows()));
  ColumnStats s = column_stats(x);
  Standardizer out{std::move(s.mean), std::move(s.stddev), {}};
  for (std::size_t j = 0; j < out.stddev.size(); ++j) {
    if (out.stddev[j] < Standardizer::kStdFloor) {
      out.stddev[j] = Standardizer::kStdFloor;
      out.floored.push_back(j);
    }
  }
  return out;
}

inline Standardizer fit_standardizer(const FeatureMatrix& fm) { return fit_standardizer(fm.features); }

}  // namespace emolat
