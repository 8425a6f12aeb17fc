#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "emolat/core/error.hpp"
#include "emolat/eval/kde.hpp"

namespace emolat {

struct BdResult {
  std::string reference;
  std::string transfer;
  double bd = 0.0;
  std::optional<double> log_bd;  // empty when bd == 0
};

/// Bhattacharyya coefficient of two discrete mass functions on the same grid.
inline double bhattacharyya_coefficient(const Matrix& p, const Matrix& q) {
  require_same_shape(p, q, "bhattacharyya");
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p.data()[i] * q.data()[i]);
  return bc;
}

/// BD = -log(sum over grid cells of sqrt(p_ref * p_i)), with both densities
/// discretized to cell masses that sum to one.
inline BdResult bhattacharyya(const Kde2D& reference, const Kde2D& transfer, std::string reference_name = "reference",
                              std::string transfer_name = "transfer") {
  if (!(reference.grid == transfer.grid)) throw ContractError("bhattacharyya: densities are on different grids");
  const double bc = bhattacharyya_coefficient(reference.masses(), transfer.masses());
  BdResult r;
  r.reference = std::move(reference_name);
  r.transfer = std::move(transfer_name);
  r.bd = bc >= 1.0 ? 0.0 : -std::log(bc);
  if (r.bd > 0.0) r.log_bd = std::log(r.bd);
  return r;
}

/// KDEs of both point sets on their shared grid, then BD.
inline BdResult bhattacharyya(const Matrix& reference_points, const Matrix& transfer_points,
                              std::size_t grid_size = 100, std::string reference_name = "reference",
                              std::string transfer_name = "transfer") {
  const GridSpec grid = shared_grid(reference_points, transfer_points, grid_size);
  return bhattacharyya(kde_fit(reference_points, grid), kde_fit(transfer_points, grid), std::move(reference_name),
                       std::move(transfer_name));
}

}  // namespace emolat
