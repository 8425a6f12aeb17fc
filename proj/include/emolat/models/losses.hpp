#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/core/tape.hpp"
#include "emolat/data/feature_matrix.hpp"
#include "emolat/models/network.hpp"

namespace emolat {

/// Loss terms of one batch. Terms a variant does not use are 0.
/// total = reconstruction + beta * kl + gamma * cluster.
struct LossBreakdown {
  double reconstruction = 0.0;
  double kl = 0.0;
  double cluster = 0.0;
  double total = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<double> kl_per_dim;  // batch-mean KL of each latent coordinate
  bool cluster_skipped = false;    // batch held fewer than two classes
};

/// Closed-form KL(N(mu, diag(exp(logvar))) || N(0, I)) per latent
/// dimension, averaged over rows.
inline std::vector<double> kl_per_dimension(const Matrix& mu, const Matrix& logvar) {
  require_same_shape(mu, logvar, "kl_gaussian");
  std::vector<double> out(mu.cols(), 0.0);
  for (std::size_t i = 0; i < mu.rows(); ++i)
    for (std::size_t j = 0; j < mu.cols(); ++j) {
      const double lv = logvar(i, j);
      const double m = mu(i, j);
      out[j] += -0.5 * (1.0 + lv - m * m - std::exp(lv));
    }
  for (double& v : out) v /= static_cast<double>(mu.rows());
  return out;
}

inline double kl_gaussian(const Matrix& mu, const Matrix& logvar) {
  double total = 0.0;
  for (double v : kl_per_dimension(mu, logvar)) total += v;
  return total;
}

/// Distinct labels in first-appearance order.
inline std::vector<Emotion> distinct_classes(std::span<const Emotion> labels) {
  std::vector<Emotion> out;
  for (Emotion e : labels)
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  std::sort(out.begin(), out.end());
  return out;
}

/// Ratio of summed sample-to-class-centroid distances to summed pairwise
/// centroid distances (Euclidean). Returns 0 when fewer than two classes are
/// present.
inline double cluster_loss(const Matrix& z, std::span<const Emotion> labels) {
  if (z.rows() != labels.size()) throw ShapeError("cluster_loss: latent rows and label count differ");
  const auto classes = distinct_classes(labels);
  if (classes.size() < 2) return 0.0;
  const std::size_t dim = z.cols();
  Matrix centroids(classes.size(), dim);
  std::vector<double> counts(classes.size(), 0.0);
  auto class_index = [&](Emotion e) {
    return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), e) - classes.begin());
  };
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const std::size_t k = class_index(labels[i]);
    counts[k] += 1.0;
    for (std::size_t d = 0; d < dim; ++d) centroids(k, d) += z(i, d);
  }
  for (std::size_t k = 0; k < classes.size(); ++k)
    for (std::size_t d = 0; d < dim; ++d) centroids(k, d) /= counts[k];

  auto distance = [&](std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(acc);
  };
  double intra = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) intra += distance(z.row(i), centroids.row(class_index(labels[i])));
  double inter = 0.0;
  for (std::size_t k = 0; k + 1 < classes.size(); ++k)
    for (std::size_t j = k + 1; j < classes.size(); ++j) inter += distance(centroids.row(k), centroids.row(j));
  if (inter == 0.0) throw NumericError("cluster_loss: all class centroids coincide");
  return intra / inter;
}

/// A loss recorded on a tape together with its scalar breakdown.
struct LossGraph {
  Var total;
  LossBreakdown breakdown;
};

namespace detail {

inline Var squared_error(Var x, Var xhat, Reduction reduction) {
  const Matrix& xv = x.value();
  const double denom = static_cast<double>(xv.rows()) *
                       (reduction == Reduction::kMeanFeatures ? static_cast<double>(xv.cols()) : 1.0);
  return ad::scale(ad::sum(ad::square(ad::sub(x, xhat))), 1.0 / denom);
}

/// Builds the tape graph of the cluster ratio from constant assignment
/// matrices: centroids = A z, residuals = z - P centroids, pair gaps = Q centroids.
inline std::optional<Var> cluster_graph(Tape& tape, Var z, std::span<const Emotion> labels) {
  const auto classes = distinct_classes(labels);
  if (classes.size() < 2) return std::nullopt;
  const std::size_t n = labels.size(), k = classes.size();
  Matrix average(k, n), assign(n, k);
  std::vector<double> counts(k, 0.0);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = static_cast<std::size_t>(std::find(classes.begin(), classes.end(), labels[i]) - classes.begin());
    counts[idx[i]] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    average(idx[i], i) = 1.0 / counts[idx[i]];
    assign(i, idx[i]) = 1.0;
  }
  Matrix pairs(k * (k - 1) / 2, k);
  std::size_t row = 0;
  for (std::size_t a = 0; a + 1 < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b, ++row) {
      pairs(row, a) = 1.0;
      pairs(row, b) = -1.0;
    }
  Var centroids = ad::matmul(tape.constant(std::move(average)), z);
  Var residual = ad::sub(z, ad::matmul(tape.constant(std::move(assign)), centroids));
  Var intra = ad::sum(ad::row_norm(residual));
  Var inter = ad::sum(ad::row_norm(ad::matmul(tape.constant(std::move(pairs)), centroids)));
  if (inter.value()(0, 0) == 0.0) throw NumericError("cluster_loss: all class centroids coincide");
  return ad::div(intra, inter);
}

}  // namespace detail

/// Denoising reconstruction loss with caller-supplied noise:
/// mean over rows of ||x - decode(encode(x + noise))||^2.
inline LossGraph dae_loss_graph(Tape& tape, const ParamVars& pv, const EncoderDecoderConfig& cfg, const Matrix& x,
                                const Matrix& noise) {
  require_same_shape(x, noise, "dae_loss");
  Matrix noisy = x;
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] += noise.data()[i];
  Var clean = tape.constant(x);
  Var z = encode(pv, tape.constant(std::move(noisy)), cfg).mean;
  Var rec = detail::squared_error(clean, decode(pv, z, cfg), Reduction::kSumFeatures);
  LossGraph g{rec, {}};
  g.breakdown.reconstruction = rec.value()(0, 0);
  g.breakdown.total = g.breakdown.reconstruction;
  return g;
}

/// VAE objective with caller-supplied standard-normal noise `eps` for the
/// reparameterized sample z = mu + exp(logvar / 2) * eps. The cluster term
/// is included when gamma > 0 and labels are given.
inline LossGraph vae_loss_graph(Tape& tape, const ParamVars& pv, const EncoderDecoderConfig& cfg, const Matrix& x,
                                const Matrix& eps, double beta, double gamma, std::span<const Emotion> labels = {}) {
  if (!pv.logvar_head) throw ContractError("vae loss requires a variational model");
  Var input = tape.constant(x);
  EncodedVars enc = encode(pv, input, cfg);
  Var mu = enc.mean;
  Var logvar = *enc.logvar;
  require_same_shape(mu.value(), eps, "reparameterize");
  Var sigma = ad::exp(ad::scale(logvar, 0.5));
  Var z = ad::add(mu, ad::mul(sigma, tape.constant(eps)));
  Var rec = detail::squared_error(input, decode(pv, z, cfg), cfg.vae_reconstruction);

  const double rows = static_cast<double>(x.rows());
  const double dims = static_cast<double>(mu.value().cols());
  Var kl_inner = ad::sum(ad::sub(ad::sub(logvar, ad::square(mu)), ad::exp(logvar)));
  Var kl = ad::affine(kl_inner, -0.5 / rows, -0.5 * dims);

  LossGraph g{ad::add(rec, ad::scale(kl, beta)), {}};
  auto& b = g.breakdown;
  b.reconstruction = rec.value()(0, 0);
  b.kl = kl.value()(0, 0);
  b.kl_per_dim = kl_per_dimension(mu.value(), logvar.value());
  b.beta = beta;

  if (!labels.empty() && labels.size() != x.rows()) throw ShapeError("vae loss: label count differs from batch rows");
  if (gamma != 0.0 && !labels.empty()) {
    b.gamma = gamma;
    if (auto clus = detail::cluster_graph(tape, z, labels)) {
      b.cluster = clus->value()(0, 0);
      g.total = ad::add(g.total, ad::scale(*clus, gamma));
    } else {
      b.cluster_skipped = true;
    }
  }
  b.total = g.total.value()(0, 0);
  return g;
}

/// Variant-dispatching loss used by the trainer and the gradient checks.
/// `noise` is the DAE input noise (already scaled) or the VAE eps.
inline LossGraph model_loss_graph(Tape& tape, const ParamVars& pv, const EncoderDecoderConfig& cfg, const Matrix& x,
                                  const Matrix& noise, double beta, std::span<const Emotion> labels) {
  switch (cfg.variant) {
    case Variant::kDae: return dae_loss_graph(tape, pv, cfg, x, noise);
    case Variant::kVae:
    case Variant::kVaeAnneal: return vae_loss_graph(tape, pv, cfg, x, noise, beta, 0.0);
    case Variant::kVaeSs: return vae_loss_graph(tape, pv, cfg, x, noise, beta, cfg.gamma, labels);
  }
  throw ContractError("unknown variant");
}

/// Noise a variant consumes per batch: N(0, sigma^2) input noise for the
/// DAE, N(0, I) reparameterization noise for the VAEs.
inline Matrix draw_noise(const EncoderDecoderConfig& cfg, std::size_t rows, Rng& rng) {
  if (cfg.variant == Variant::kDae) {
    Matrix n = gaussian_sample(rng, rows, cfg.input_dim);
    for (double& v : n.data()) v *= cfg.dae_noise;
    return n;
  }
  return gaussian_sample(rng, rows, cfg.latent_dim);
}

/// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I).
inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng) {
  require_same_shape(mu, logvar, "reparameterize");
  Matrix z = mu;
  for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += std::exp(0.5 * logvar.data()[i]) * rng.gaussian();
  return z;
}

inline LossBreakdown dae_loss(const ModelParams& params, const Matrix& x, Rng& rng, double noise_std = 1.0) {
  Tape tape;
  ParamVars pv = bind(tape, params);
  Matrix noise = gaussian_sample(rng, x.rows(), x.cols());
  for (double& v : noise.data()) v *= noise_std;
  return dae_loss_graph(tape, pv, params.config, x, noise).breakdown;
}

inline LossBreakdown vae_loss(const ModelParams& params, const Matrix& x, Rng& rng, double beta) {
  Tape tape;
  ParamVars pv = bind(tape, params);
  Matrix eps = gaussian_sample(rng, x.rows(), params.config.latent_dim);
  return vae_loss_graph(tape, pv, params.config, x, eps, beta, 0.0).breakdown;
}

inline LossBreakdown vae_ss_loss(const ModelParams& params, const Matrix& x, std::span<const Emotion> labels, Rng& rng,
                                 double beta, double gamma = 0.5) {
  if (labels.size() != x.rows()) throw ShapeError("vae_ss_loss: label count differs from batch rows");
  Tape tape;
  ParamVars pv = bind(tape, params);
  Matrix eps = gaussian_sample(rng, x.rows(), params.config.latent_dim);
  return vae_loss_graph(tape, pv, params.config, x, eps, beta, gamma, labels).breakdown;
}

}  // namespace emolat
