#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"

namespace emolat {

/// Regular G x G lattice of evaluation points, bounds inclusive.
struct GridSpec {
  double x_lo = 0.0, x_hi = 1.0;
  double y_lo = 0.0, y_hi = 1.0;
  std::size_t size = 100;

  double dx() const { return (x_hi - x_lo) / static_cast<double>(size - 1); }
  double dy() const { return (y_hi - y_lo) / static_cast<double>(size - 1); }
  double x(std::size_t i) const { return x_lo + dx() * static_cast<double>(i); }
  double y(std::size_t j) const { return y_lo + dy() * static_cast<double>(j); }
  double cell_area() const { return dx() * dy(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline constexpr double kMinBandwidth = 1e-6;

struct Bandwidth {
  std::array<double, 2> h{};
  bool floored = false;
};

/// Scott's rule per dimension: h_d = s_d * N^(-1/6), s_d the sample std.
inline Bandwidth scott_bandwidth(const Matrix& z) {
  if (z.cols() != 2) throw ShapeError("kde: expected 2-D points, got " + z.shape());
  if (z.rows() < 2) throw ContractError("kde: need at least 2 points");
  const double n = static_cast<double>(z.rows());
  const double factor = std::pow(n, -1.0 / 6.0);
  Bandwidth out;
  for (std::size_t d = 0; d < 2; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, d);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) var += (z(i, d) - mean) * (z(i, d) - mean);
    out.h[d] = std::sqrt(var / (n - 1.0)) * factor;
    if (!(out.h[d] >= kMinBandwidth)) {
      out.h[d] = kMinBandwidth;
      out.floored = true;
    }
  }
  return out;
}

/// Grid covering both point sets, padded by three times the largest bandwidth.
inline GridSpec shared_grid(const Matrix& a, const Matrix& b, std::size_t size = 100) {
  if (size < 2) throw ContractError("kde: grid size must be at least 2");
  const Bandwidth ha = scott_bandwidth(a), hb = scott_bandwidth(b);
  const double pad = 3.0 * std::max({ha.h[0], ha.h[1], hb.h[0], hb.h[1]});
  GridSpec g;
  g.size = size;
  g.x_lo = g.y_lo = std::numeric_limits<double>::infinity();
  g.x_hi = g.y_hi = -std::numeric_limits<double>::infinity();
  for (const Matrix* m : {&a, &b}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      g.x_lo = std::min(g.x_lo, (*m)(i, 0));
      g.x_hi = std::max(g.x_hi, (*m)(i, 0));
      g.y_lo = std::min(g.y_lo, (*m)(i, 1));
      g.y_hi = std::max(g.y_hi, (*m)(i, 1));
    }
  }
  g.x_lo -= pad;
  g.x_hi += pad;
  g.y_lo -= pad;
  g.y_hi += pad;
  return g;
}

/// Gaussian product-kernel density of 2-D points evaluated on a grid.
struct Kde2D {
  Bandwidth bandwidth;
  GridSpec grid;
  Matrix density;  // density(i, j) at (grid.x(i), grid.y(j))
  std::size_t points = 0;

  /// Riemann sum of the density over the grid.
  double integral() const {
    double s = 0.0;
    for (double v : density.data()) s += v;
    return s * grid.cell_area();
  }

  /// Cell probability masses, normalized to sum to 1.
  Matrix masses() const {
    double s = 0.0;
    for (double v : density.data()) s += v;
    if (!(s > 0.0)) throw NumericError("kde: density vanishes on the whole grid");
    Matrix out = density;
    for (double& v : out.data()) v /= s;
    return out;
  }

  double at_cell(std::size_t i, std::size_t j) const { return density(i, j); }
};

inline Kde2D kde_fit(const Matrix& z, const GridSpec& grid) {
  Kde2D k;
  k.bandwidth = scott_bandwidth(z);
  k.grid = grid;
  k.points = z.rows();
  const std::size_t n = z.rows(), g = grid.size;
  const double hx = k.bandwidth.h[0], hy = k.bandwidth.h[1];
  // The product kernel factorizes, so density = Kx^T Ky / (N 2 pi hx hy).
  Matrix kx(n, g), ky(n, g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < g; ++c) {
      const double u = (grid.x(c) - z(i, 0)) / hx;
      const double v = (grid.y(c) - z(i, 1)) / hy;
      kx(i, c) = std::exp(-0.5 * u * u);
      ky(i, c) = std::exp(-0.5 * v * v);
    }
  }
  k.density = matmul_tn(kx, ky);
  const double norm = 1.0 / (static_cast<double>(n) * 2.0 * std::numbers::pi * hx * hy);
  for (double& v : k.density.data()) v *= norm;
  return k;
}

/// KDE on a grid fitted to this point set alone.
inline Kde2D kde_fit(const Matrix& z, std::size_t grid_size = 100) { return kde_fit(z, shared_grid(z, z, grid_size)); }

}  // namespace emolat
