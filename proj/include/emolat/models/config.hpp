#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emolat/core/adam.hpp"
#include "emolat/core/error.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

enum class Variant { kDae, kVae, kVaeAnneal, kVaeSs };
enum class Activation { kRelu, kTanh };

/// How the VAE reconstruction term reduces the squared error of a batch.
enum class Reduction {
  kSumFeatures,   // mean over samples of the squared L2 norm
  kMeanFeatures,  // mean over samples and features
};

inline constexpr std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kDae: return "dae";
    case Variant::kVae: return "vae";
    case Variant::kVaeAnneal: return "vae_anneal";
    case Variant::kVaeSs: return "vae_ss";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "dae") return Variant::kDae;
  if (s == "vae") return Variant::kVae;
  if (s == "vae_anneal" || s == "vae-anneal") return Variant::kVaeAnneal;
  if (s == "vae_ss" || s == "vae-ss") return Variant::kVaeSs;
  throw ParameterError("unknown model variant '" + std::string(s) + "'");
}

inline constexpr bool is_variational(Variant v) { return v != Variant::kDae; }
inline constexpr bool is_annealed(Variant v) { return v == Variant::kVaeAnneal || v == Variant::kVaeSs; }

inline constexpr std::string_view activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ParameterError("unknown activation '" + std::string(s) + "'");
}

inline constexpr std::string_view reduction_name(Reduction r) {
  return r == Reduction::kSumFeatures ? "sum" : "mean";
}

inline Reduction parse_reduction(std::string_view s) {
  if (s == "sum") return Reduction::kSumFeatures;
  if (s == "mean") return Reduction::kMeanFeatures;
  throw ParameterError("unknown reconstruction reduction '" + std::string(s) + "'");
}

struct AnnealingOptions {
  std::size_t cycles = 2;
  double ratio = 0.5;     // fraction of each cycle spent increasing
  double beta_max = 0.25;

  friend bool operator==(const AnnealingOptions&, const AnnealingOptions&) = default;
};

/// Fully connected encoder/decoder. The decoder mirrors `hidden` in reverse
/// and ends in a linear layer back to `input_dim`.
struct EncoderDecoderConfig {
  std::size_t input_dim = kFeatureDim;
  std::vector<std::size_t> hidden{32, 8};
  std::size_t latent_dim = 2;
  Activation activation = Activation::kRelu;
  Variant variant = Variant::kDae;
  double dae_noise = 1.0;
  double gamma = 0.5;
  double logvar_clamp = 50.0;
  Reduction vae_reconstruction = Reduction::kMeanFeatures;
  AnnealingOptions annealing;

  void validate() const {
    if (input_dim == 0 || latent_dim == 0) throw ParameterError("input and latent dimensions must be positive");
    for (std::size_t w : hidden)
      if (w == 0) throw ParameterError("hidden layer widths must be positive");
    if (dae_noise < 0.0) throw ParameterError("DAE noise std must be non-negative");
    if (gamma < 0.0) throw ParameterError("cluster weight gamma must be non-negative");
    if (annealing.cycles == 0 || !(annealing.ratio > 0.0 && annealing.ratio <= 1.0) || annealing.beta_max < 0.0) {
      throw ParameterError("invalid annealing options");
    }
  }

  friend bool operator==(const EncoderDecoderConfig&, const EncoderDecoderConfig&) = default;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  AdamOptions adam;
};

}  // namespace emolat
