#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/core/tape.hpp"
#include "emolat/models/config.hpp"

namespace emolat {

/// y = x W + b with W stored (in x out) and b as a 1 x out row.
struct DenseLayer {
  Matrix weight;
  Matrix bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ModelParams {
  EncoderDecoderConfig config;
  std::vector<DenseLayer> encoder;         // hidden layers
  DenseLayer mean_head;                    // z for the DAE, posterior mean for VAEs
  std::optional<DenseLayer> logvar_head;   // VAEs only
  std::vector<DenseLayer> decoder;         // hidden layers then the linear output layer

  /// Every trainable tensor in a fixed order (weight before bias, encoder,
  /// heads, decoder).
  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    auto push = [&](DenseLayer& l) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    };
    for (auto& l : encoder) push(l);
    push(mean_head);
    if (logvar_head) push(*logvar_head);
    for (auto& l : decoder) push(l);
    return out;
  }

  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    for (Matrix* m : const_cast<ModelParams*>(this)->tensors()) out.push_back(m);
    return out;
  }

  bool all_finite() const {
    for (const Matrix* m : tensors())
      if (!m->all_finite()) return false;
    return true;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

namespace detail {

inline DenseLayer glorot_layer(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l{Matrix(in, out), Matrix(1, out)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : l.weight.data()) w = rng.uniform(-limit, limit);
  return l;
}

}  // namespace detail

/// Glorot-uniform weights, zero biases.
inline ModelParams init_params(const EncoderDecoderConfig& config, Rng& rng) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::size_t width = config.input_dim;
  for (std::size_t h : config.hidden) {
    p.encoder.push_back(detail::glorot_layer(width, h, rng));
    width = h;
  }
  p.mean_head = detail::glorot_layer(width, config.latent_dim, rng);
  if (is_variational(config.variant)) p.logvar_head = detail::glorot_layer(width, config.latent_dim, rng);
  width = config.latent_dim;
  for (auto it = config.hidden.rbegin(); it != config.hidden.rend(); ++it) {
    p.decoder.push_back(detail::glorot_layer(width, *it, rng));
    width = *it;
  }
  p.decoder.push_back(detail::glorot_layer(width, config.input_dim, rng));
  return p;
}

/// Latent output of the encoder on plain matrices.
struct LatentOutput {
  Matrix mean;                   // z (DAE) or posterior mean (VAE)
  std::optional<Matrix> logvar;  // clamped log-variance (VAE)
};

namespace detail {

inline Matrix dense_forward(const DenseLayer& l, const Matrix& x) {
  Matrix y = matmul(x, l.weight);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto row = y.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += l.bias(0, j);
  }
  return y;
}

inline void activate(Matrix& m, Activation a) {
  for (double& v : m.data()) v = a == Activation::kRelu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
}

inline void require_finite(const Matrix& m, const std::string& layer) {
  if (!m.all_finite()) throw NumericError("non-finite activation in layer " + layer);
}

}  // namespace detail

/// Encoder forward pass. Reentrant: reads params only.
inline LatentOutput encode(const ModelParams& params, const Matrix& x) {
  const auto& cfg = params.config;
  if (x.cols() != cfg.input_dim) {
    throw ShapeError("encode: expected " + std::to_string(cfg.input_dim) + " input columns, got " +
                     std::to_string(x.cols()));
  }
  Matrix h = x;
  for (std::size_t i = 0; i < params.encoder.size(); ++i) {
    h = detail::dense_forward(params.encoder[i], h);
    detail::activate(h, cfg.activation);
    detail::require_finite(h, "encoder." + std::to_string(i));
  }
  LatentOutput out{detail::dense_forward(params.mean_head, h), std::nullopt};
  detail::require_finite(out.mean, "mean_head");
  if (params.logvar_head) {
    Matrix lv = detail::dense_forward(*params.logvar_head, h);
    for (double& v : lv.data()) v = std::clamp(v, -cfg.logvar_clamp, cfg.logvar_clamp);
    detail::require_finite(lv, "logvar_head");
    out.logvar = std::move(lv);
  }
  return out;
}

inline Matrix decode(const ModelParams& params, const Matrix& z) {
  Matrix h = z;
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    h = detail::dense_forward(params.decoder[i], h);
    if (i + 1 < params.decoder.size()) detail::activate(h, params.config.activation);
    detail::require_finite(h, "decoder." + std::to_string(i));
  }
  return h;
}

/// Latent embedding used downstream: clean-input z for the DAE, posterior
/// means for the VAEs.
inline Matrix embed(const ModelParams& params, const Matrix& x) { return encode(params, x).mean; }

/// Model parameters registered on a tape, mirroring ModelParams.
struct ParamVars {
  struct Layer {
    Var weight;
    Var bias;
  };
  std::vector<Layer> encoder;
  Layer mean_head;
  std::optional<Layer> logvar_head;
  std::vector<Layer> decoder;
};

/// Registers every tensor as a tape parameter, in ModelParams::tensors() order.
inline ParamVars bind(Tape& tape, const ModelParams& params) {
  auto reg = [&](const DenseLayer& l) { return ParamVars::Layer{tape.parameter(l.weight), tape.parameter(l.bias)}; };
  ParamVars v;
  for (const auto& l : params.encoder) v.encoder.push_back(reg(l));
  v.mean_head = reg(params.mean_head);
  if (params.logvar_head) v.logvar_head = reg(*params.logvar_head);
  for (const auto& l : params.decoder) v.decoder.push_back(reg(l));
  return v;
}

namespace detail {

inline Var dense(const ParamVars::Layer& l, Var x) { return ad::add_row(ad::matmul(x, l.weight), l.bias); }

inline Var activate(Var v, Activation a) { return a == Activation::kRelu ? ad::relu(v) : ad::tanh(v); }

}  // namespace detail

struct EncodedVars {
  Var mean;
  std::optional<Var> logvar;
};

inline EncodedVars encode(const ParamVars& pv, Var x, const EncoderDecoderConfig& cfg) {
  Var h = x;
  for (const auto& l : pv.encoder) h = detail::activate(detail::dense(l, h), cfg.activation);
  EncodedVars out{detail::dense(pv.mean_head, h), std::nullopt};
  if (pv.logvar_head) out.logvar = ad::clamp(detail::dense(*pv.logvar_head, h), -cfg.logvar_clamp, cfg.logvar_clamp);
  return out;
}

inline Var decode(const ParamVars& pv, Var z, const EncoderDecoderConfig& cfg) {
  Var h = z;
  for (std::size_t i = 0; i < pv.decoder.size(); ++i) {
    h = detail::dense(pv.decoder[i], h);
    if (i + 1 < pv.decoder.size()) h = detail::activate(h, cfg.activation);
  }
  return h;
}

}  // namespace emolat
