#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/models/config.hpp"

namespace emolat {

/// Cyclical KL weight for 1-based epoch e of T:
///   tau  = ((e - 1) mod (T / M)) / (T / M)
///   beta = (beta_max / R) * tau   if tau <= R
///          beta_max               otherwise
inline double beta_schedule(std::size_t epoch, std::size_t total_epochs = 50, std::size_t cycles = 2, double ratio = 0.5,
                            double beta_max = 0.25) {
  if (total_epochs == 0 || cycles == 0) throw ContractError("beta_schedule: T and M must be positive");
  if (epoch < 1 || epoch > total_epochs) {
    throw ContractError("beta_schedule: epoch " + std::to_string(epoch) + " outside [1, " +
                        std::to_string(total_epochs) + "]");
  }
  const double period = static_cast<double>(total_epochs) / static_cast<double>(cycles);
  const double tau = std::fmod(static_cast<double>(epoch - 1), period) / period;
  return tau <= ratio ? (beta_max / ratio) * tau : beta_max;
}

/// Beta values for epochs 1..T.
struct AnnealingSchedule {
  std::size_t total_epochs = 50;
  AnnealingOptions options;

  double at(std::size_t epoch) const {
    return beta_schedule(epoch, total_epochs, options.cycles, options.ratio, options.beta_max);
  }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(total_epochs);
    for (std::size_t e = 1; e <= total_epochs; ++e) out.push_back(at(e));
    return out;
  }
};

/// KL weight used by each variant at a given epoch. The DAE has no KL term.
inline double beta_for(Variant v, std::size_t epoch, std::size_t total_epochs, const AnnealingOptions& a) {
  switch (v) {
    case Variant::kDae: return 0.0;
    case Variant::kVae: return 1.0;
    case Variant::kVaeAnneal:
    case Variant::kVaeSs: return beta_schedule(epoch, total_epochs, a.cycles, a.ratio, a.beta_max);
  }
  return 0.0;
}

}  // namespace emolat
