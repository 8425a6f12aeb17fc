#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emolat/core/adam.hpp"
#include "emolat/core/error.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/core/tape.hpp"
#include "emolat/models/losses.hpp"
#include "emolat/models/network.hpp"
#include "emolat/models/schedule.hpp"

namespace emolat {

/// Sample-weighted epoch means of the batch loss terms.
struct EpochRecord {
  std::size_t epoch = 0;
  double beta = 0.0;
  double gamma = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double cluster = 0.0;
  double total = 0.0;
  std::vector<double> kl_per_dim;
  std::size_t batches = 0;
  std::size_t single_class_batches = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> trace;
};

/// Mini-batch Adam training. Streams for initialization, shuffling and noise
/// are derived from `seed`, so a (config, options, data, seed) tuple always
/// produces bit-identical parameters.
inline TrainResult train(const EncoderDecoderConfig& config, const TrainOptions& options, const Matrix& x,
                         std::span<const Emotion> labels, std::uint64_t seed) {
  config.validate();
  if (x.cols() != config.input_dim) {
    throw ShapeError("train: expected " + std::to_string(config.input_dim) + " feature columns, got " +
                     std::to_string(x.cols()));
  }
  if (x.rows() == 0) throw EmptyDatasetError("train: no training samples");
  if (config.variant == Variant::kVaeSs && labels.size() != x.rows()) {
    throw ContractError("train: semi-supervised variant needs one label per sample");
  }
  if (options.batch_size == 0 || options.epochs == 0) throw ParameterError("train: epochs and batch size must be positive");

  Rng init_rng(derive_seed(seed, 1));
  Rng order_rng(derive_seed(seed, 2));
  Rng noise_rng(derive_seed(seed, 3));

  TrainResult result{init_params(config, init_rng), {}};
  auto tensors = result.params.tensors();
  std::vector<const Matrix*> const_tensors(tensors.begin(), tensors.end());
  AdamState adam(const_tensors, options.adam);

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const double beta = beta_for(config.variant, epoch, options.epochs, config.annealing);
    order_rng.shuffle(std::span(order));
    EpochRecord rec;
    rec.epoch = epoch;
    rec.beta = beta;
    rec.gamma = config.variant == Variant::kVaeSs ? config.gamma : 0.0;
    rec.kl_per_dim.assign(is_variational(config.variant) ? config.latent_dim : 0, 0.0);

    for (std::size_t start = 0, step = 0; start < order.size(); start += options.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix batch = x.select_rows(idx);
      std::vector<Emotion> batch_labels;
      if (!labels.empty()) {
        batch_labels.reserve(idx.size());
        for (std::size_t i : idx) batch_labels.push_back(labels[i]);
      }
      const Matrix noise = draw_noise(config, batch.rows(), noise_rng);

      Tape tape;
      const ParamVars pv = bind(tape, result.params);
      const LossGraph loss = model_loss_graph(tape, pv, config, batch, noise, beta, batch_labels);
      const auto& b = loss.breakdown;
      if (!std::isfinite(b.total)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + " (rec=" + std::to_string(b.reconstruction) +
                           ", kl=" + std::to_string(b.kl) + ", cluster=" + std::to_string(b.cluster) + ")");
      }
      const std::vector<Matrix> grads = tape.backward(loss.total);
      adam_step(adam, tensors, grads);
      if (!result.params.all_finite()) {
        throw NumericError("train: non-finite parameters after epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step));
      }

      const double w = static_cast<double>(idx.size());
      rec.reconstruction += w * b.reconstruction;
      rec.kl += w * b.kl;
      rec.cluster += w * b.cluster;
      rec.total += w * b.total;
      for (std::size_t d = 0; d < b.kl_per_dim.size(); ++d) rec.kl_per_dim[d] += w * b.kl_per_dim[d];
      ++rec.batches;
      if (b.cluster_skipped) ++rec.single_class_batches;
    }
    const double n = static_cast<double>(order.size());
    rec.reconstruction /= n;
    rec.kl /= n;
    rec.cluster /= n;
    rec.total /= n;
    for (double& v : rec.kl_per_dim) v /= n;
    result.trace.push_back(std::move(rec));
  }
  return result;
}

}  // namespace emolat
