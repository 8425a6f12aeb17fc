#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/data/corpus_io.hpp"
#include "emolat/data/folds.hpp"
#include "emolat/data/preprocess.hpp"
#include "emolat/eval/bhattacharyya.hpp"
#include "emolat/eval/metrics.hpp"
#include "emolat/eval/svm.hpp"
#include "emolat/harness/experiment_config.hpp"
#include "emolat/models/checkpoint.hpp"
#include "emolat/models/trainer.hpp"

namespace emolat {

/// Preprocessed corpora of one experiment (raw feature scale, outliers removed).
struct CorpusSet {
  std::string training_name;
  FeatureMatrix training;
  std::vector<std::string> transfer_names;
  std::vector<FeatureMatrix> transfers;
};

/// How one transfer corpus is standardized and which of its rows are scored.
struct StandardizationContext {
  Standardizer standardizer;
  std::vector<std::size_t> normalization_indices;  // condition 2 subsample
  std::vector<std::size_t> scoring_indices;
};

/// Condition 1 reuses the training standardizer and scores every row.
/// Condition 2 fits a fresh standardizer on a seeded random subsample
/// (labels ignored) and, unless `score_subset`, scores only the remainder.
inline StandardizationContext apply_condition(int condition, const FeatureMatrix& transfer, double fraction,
                                              std::uint64_t seed, const Standardizer& training,
                                              bool score_subset = false) {
  StandardizationContext ctx;
  const std::size_t n = transfer.size();
  if (condition == 1) {
    ctx.standardizer = training;
    ctx.scoring_indices.resize(n);
    std::iota(ctx.scoring_indices.begin(), ctx.scoring_indices.end(), std::size_t{0});
    return ctx;
  }
  if (condition != 2) throw ContractError("apply_condition: condition must be 1 or 2");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ContractError("apply_condition: fraction must lie in (0, 1)");
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (m < 2) {
    throw ContractError("apply_condition: fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                        " samples leaves fewer than 2 for normalization");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  ctx.normalization_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(ctx.normalization_indices.begin(), ctx.normalization_indices.end());
  ctx.standardizer = fit_standardizer(transfer.features.select_rows(ctx.normalization_indices));
  if (score_subset) {
    ctx.scoring_indices.resize(n);
    std::iota(ctx.scoring_indices.begin(), ctx.scoring_indices.end(), std::size_t{0});
  } else {
    ctx.scoring_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
    std::sort(ctx.scoring_indices.begin(), ctx.scoring_indices.end());
  }
  return ctx;
}

struct TransferCell {
  std::string corpus;
  double balanced_accuracy = 0.0;
  double bd = 0.0;
  std::size_t scored = 0;
};

/// Result of one (variant, fold) pipeline run.
struct FoldCell {
  Variant variant = Variant::kDae;
  std::size_t fold = 0;
  bool ok = false;
  std::string error;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  double validation_accuracy = 0.0;
  std::vector<TransferCell> transfer;
  std::vector<EpochRecord> trace;
};

struct TransferSummary {
  std::string corpus;
  std::vector<double> fold_accuracies;
  MeanCi accuracy;
  std::vector<double> fold_bd;
  BdResult bd;  // mean BD over folds
};

struct VariantSummary {
  Variant variant = Variant::kDae;
  std::size_t folds_ok = 0;
  std::vector<double> fold_validation;
  MeanCi validation;
  std::vector<TransferSummary> transfer;
};

struct LatentSet {
  std::string corpus;
  Matrix z;
  std::vector<Emotion> labels;
};

struct EvalReport {
  nlohmann::json config;
  std::vector<std::string> warnings;
  std::vector<FoldCell> cells;  // variant-major, fold-minor
  std::vector<VariantSummary> summaries;
  // Per variant, the latents of the first successful fold: the fold's
  // training split followed by every transfer corpus.
  std::vector<std::vector<LatentSet>> scatter;

  bool any_failed() const {
    for (const auto& c : cells)
      if (!c.ok) return true;
    return false;
  }
};

/// Loads the manifest corpora, restricts them to the configured classes and
/// removes outliers from each corpus independently.
inline CorpusSet prepare_corpora(const CorpusManifest& manifest, const ExperimentConfig& cfg,
                                 std::vector<std::string>& warnings) {
  manifest.validate();
  CorpusSet set;
  auto prepare = [&](const CorpusManifestEntry& entry) {
    LoadedCorpus loaded = load_corpus(entry);
    if (loaded.dropped > 0) {
      warnings.push_back(entry.name + ": dropped " + std::to_string(loaded.dropped) + " rows outside the class set");
    }
    FeatureMatrix fm = loaded.data.restrict_to(cfg.classes);
    if (fm.size() < loaded.data.size()) {
      warnings.push_back(entry.name + ": dropped " + std::to_string(loaded.data.size() - fm.size()) +
                         " rows outside the experiment class set");
    }
    OutlierResult o = remove_outliers(fm, cfg.outlier_threshold);
    if (!o.removed.empty()) {
      warnings.push_back(entry.name + ": removed " + std::to_string(o.removed.size()) + " outlier rows");
    }
    return std::move(o.kept);
  };
  const auto& training = manifest.training();
  set.training_name = training.name;
  set.training = prepare(training);
  for (const auto& t : manifest.transfers()) {
    set.transfer_names.push_back(t.name);
    set.transfers.push_back(prepare(t));
  }
  return set;
}

namespace detail {

struct CellOutput {
  FoldCell cell;
  std::vector<LatentSet> latents;
};

inline CellOutput run_cell(const ExperimentConfig& cfg, const CorpusSet& data, const FoldSplit& folds,
                           const std::vector<StandardizationContext>& condition2, Variant variant,
                           std::size_t fold) {
  CellOutput out;
  FoldCell& cell = out.cell;
  cell.variant = variant;
  cell.fold = fold;
  try {
    const auto train_idx = folds.train(fold);
    const auto& val_idx = folds.validation[fold];
    const FeatureMatrix train_raw = data.training.subset(train_idx);
    const FeatureMatrix val_raw = data.training.subset(val_idx);
    cell.train_size = train_raw.size();
    cell.validation_size = val_raw.size();

    const Standardizer standardizer = fit_standardizer(train_raw);
    const Matrix x_train = standardizer.apply(train_raw.features);
    const Matrix x_val = standardizer.apply(val_raw.features);

    const std::uint64_t cell_seed = derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(variant), fold);
    TrainResult trained = train(cfg.model_for(variant), cfg.train_options(), x_train, train_raw.labels, cell_seed);
    cell.trace = std::move(trained.trace);

    if (cfg.save_checkpoints) {
      const auto dir = cfg.output_dir / "checkpoints";
      std::filesystem::create_directories(dir);
      save_checkpoint(Checkpoint{trained.params, cell_seed, standardizer},
                      dir / (std::string(variant_name(variant)) + "_fold" + std::to_string(fold + 1) + ".ckpt"));
    }

    const Matrix z_train = embed(trained.params, x_train);
    const Matrix z_val = embed(trained.params, x_val);
    SvmOptions svm_opt;
    svm_opt.c = cfg.svm_c;
    svm_opt.seed = derive_seed(cell_seed, 7);
    const LinearSvmModel svm = svm_fit(z_train, train_raw.labels, svm_opt);
    cell.validation_accuracy = balanced_accuracy(val_raw.labels, svm.predict(z_val), cfg.classes);

    out.latents.push_back({data.training_name, z_train, train_raw.labels});
    for (std::size_t t = 0; t < data.transfers.size(); ++t) {
      const FeatureMatrix& corpus = data.transfers[t];
      const StandardizationContext ctx =
          cfg.condition == 1 ? apply_condition(1, corpus, cfg.transfer_fraction, 0, standardizer) : condition2[t];
      const Matrix z_all = embed(trained.params, ctx.standardizer.apply(corpus.features));
      const Matrix z_scored = z_all.select_rows(ctx.scoring_indices);
      std::vector<Emotion> scored_labels;
      for (std::size_t i : ctx.scoring_indices) scored_labels.push_back(corpus.labels[i]);

      TransferCell tc;
      tc.corpus = data.transfer_names[t];
      tc.scored = scored_labels.size();
      tc.balanced_accuracy = balanced_accuracy(scored_labels, svm.predict(z_scored), cfg.classes);
      tc.bd = bhattacharyya(z_train, z_all, cfg.kde_grid).bd;
      cell.transfer.push_back(std::move(tc));
      out.latents.push_back({data.transfer_names[t], z_all, corpus.labels});
    }
    cell.ok = true;
  } catch (const std::exception& ex) {
    cell.ok = false;
    cell.error = ex.what();
    out.latents.clear();
  }
  return out;
}

}  // namespace detail

/// Full cross-validated pipeline over every configured variant. A failing
/// (variant, fold) cell is recorded with its error; the others still run.
inline EvalReport run_experiment(const ExperimentConfig& cfg, const CorpusSet& data,
                                 std::vector<std::string> warnings = {}) {
  cfg.validate();
  EvalReport report;
  report.config = to_json(cfg);

  const FoldSplit folds = make_folds(data.training, cfg.folds, derive_seed(cfg.seed, 11));
  for (const auto& w : folds.warnings) warnings.push_back("folds: " + w);

  std::vector<StandardizationContext> condition2;
  if (cfg.condition == 2) {
    for (std::size_t t = 0; t < data.transfers.size(); ++t) {
      condition2.push_back(apply_condition(2, data.transfers[t], cfg.transfer_fraction, derive_seed(cfg.seed, 13, t),
                                           Standardizer{}, cfg.score_normalization_subset));
    }
  }

  const std::size_t n_cells = cfg.variants.size() * cfg.folds;
  std::vector<detail::CellOutput> outputs(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_cells; i = next++) {
      const std::size_t v = i / cfg.folds, f = i % cfg.folds;
      outputs[i] = detail::run_cell(cfg, data, folds, condition2, cfg.variants[v], f);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n_cells));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  report.warnings = std::move(warnings);
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    VariantSummary summary;
    summary.variant = cfg.variants[v];
    summary.transfer.resize(data.transfers.size());
    for (std::size_t t = 0; t < data.transfers.size(); ++t) summary.transfer[t].corpus = data.transfer_names[t];
    std::vector<LatentSet> scatter;
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      auto& out = outputs[v * cfg.folds + f];
      const FoldCell& cell = out.cell;
      if (cell.ok) {
        ++summary.folds_ok;
        summary.fold_validation.push_back(cell.validation_accuracy);
        for (std::size_t t = 0; t < cell.transfer.size(); ++t) {
          summary.transfer[t].fold_accuracies.push_back(cell.transfer[t].balanced_accuracy);
          summary.transfer[t].fold_bd.push_back(cell.transfer[t].bd);
        }
        if (scatter.empty()) scatter = std::move(out.latents);
      }
      report.cells.push_back(cell);
    }
    if (summary.folds_ok > 0) {
      summary.validation = mean_ci(summary.fold_validation, cfg.student_t_ci);
      for (auto& ts : summary.transfer) {
        ts.accuracy = mean_ci(ts.fold_accuracies, cfg.student_t_ci);
        ts.bd.reference = data.training_name;
        ts.bd.transfer = ts.corpus;
        ts.bd.bd = std::accumulate(ts.fold_bd.begin(), ts.fold_bd.end(), 0.0) / static_cast<double>(ts.fold_bd.size());
        if (ts.bd.bd > 0.0) ts.bd.log_bd = std::log(ts.bd.bd);
      }
    }
    report.summaries.push_back(std::move(summary));
    report.scatter.push_back(std::move(scatter));
  }
  return report;
}

inline EvalReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::string> warnings;
  const CorpusManifest manifest = load_manifest(cfg.manifest);
  const CorpusSet data = prepare_corpora(manifest, cfg, warnings);
  return run_experiment(cfg, data, std::move(warnings));
}

}  // namespace emolat
