#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emolat/core/error.hpp"
#include "emolat/data/feature_matrix.hpp"
#include "emolat/models/config.hpp"

namespace emolat {

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::vector<Variant> variants{Variant::kDae, Variant::kVae, Variant::kVaeAnneal, Variant::kVaeSs};
  ClassSet classes = ClassSet::four();
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int condition = 1;
  double transfer_fraction = 0.2;
  bool score_normalization_subset = false;  // condition 2: also score the subsample used for normalization
  std::size_t folds = 5;
  std::filesystem::path output_dir = "results";
  double outlier_threshold = 10.0;
  double svm_c = 1.0;
  std::size_t kde_grid = 100;
  bool student_t_ci = false;
  bool save_checkpoints = false;
  std::size_t jobs = 1;
  EncoderDecoderConfig model;  // variant field is overridden per run

  void validate() const {
    if (variants.empty()) throw ParameterError("config: no model variants selected");
    if (classes.size() < 2) throw ParameterError("config: class set needs at least two emotions");
    if (condition != 1 && condition != 2) throw ParameterError("config: condition must be 1 or 2");
    if (condition == 2 && !(transfer_fraction > 0.0 && transfer_fraction < 1.0)) {
      throw ParameterError("config: condition 2 needs 0 < transfer fraction < 1");
    }
    if (folds < 2) throw ParameterError("config: need at least 2 folds");
    if (epochs == 0 || batch_size == 0 || !(lr > 0.0)) throw ParameterError("config: epochs, batch and lr must be positive");
    if (kde_grid < 2) throw ParameterError("config: KDE grid must have at least 2 points per axis");
    if (!(svm_c > 0.0)) throw ParameterError("config: SVM C must be positive");
    model.validate();
  }

  TrainOptions train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.adam.lr = lr;
    return t;
  }

  EncoderDecoderConfig model_for(Variant v) const {
    EncoderDecoderConfig c = model;
    c.variant = v;
    return c;
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json variants = nlohmann::json::array();
  for (Variant v : c.variants) variants.push_back(std::string(variant_name(v)));
  return {
      {"manifest", c.manifest.generic_string()},
      {"variants", variants},
      {"classes", c.classes.code()},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"seed", c.seed},
      {"condition", c.condition},
      {"transfer_fraction", c.transfer_fraction},
      {"score_normalization_subset", c.score_normalization_subset},
      {"folds", c.folds},
      {"output_dir", c.output_dir.generic_string()},
      {"outlier_threshold", c.outlier_threshold},
      {"svm_c", c.svm_c},
      {"kde_grid", c.kde_grid},
      {"student_t_ci", c.student_t_ci},
      {"save_checkpoints", c.save_checkpoints},
      {"hidden", c.model.hidden},
      {"activation", std::string(activation_name(c.model.activation))},
      {"dae_noise", c.model.dae_noise},
      {"gamma", c.model.gamma},
      {"vae_reconstruction", std::string(reduction_name(c.model.vae_reconstruction))},
      {"annealing_cycles", c.model.annealing.cycles},
      {"annealing_ratio", c.model.annealing.ratio},
      {"beta_max", c.model.annealing.beta_max},
  };
}

/// Applies the keys present in `j` on top of `c`. Unknown keys are rejected.
inline void apply_json(ExperimentConfig& c, const nlohmann::json& j) {
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "manifest") c.manifest = value.get<std::string>();
      else if (key == "variants") {
        c.variants.clear();
        for (const auto& v : value) c.variants.push_back(parse_variant(v.get<std::string>()));
      } else if (key == "classes") c.classes = ClassSet::parse(value.get<std::string>());
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "condition") c.condition = value.get<int>();
      else if (key == "transfer_fraction") c.transfer_fraction = value.get<double>();
      else if (key == "score_normalization_subset") c.score_normalization_subset = value.get<bool>();
      else if (key == "folds") c.folds = value.get<std::size_t>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "outlier_threshold") c.outlier_threshold = value.get<double>();
      else if (key == "svm_c") c.svm_c = value.get<double>();
      else if (key == "kde_grid") c.kde_grid = value.get<std::size_t>();
      else if (key == "student_t_ci") c.student_t_ci = value.get<bool>();
      else if (key == "save_checkpoints") c.save_checkpoints = value.get<bool>();
      else if (key == "jobs") c.jobs = value.get<std::size_t>();
      else if (key == "hidden") c.model.hidden = value.get<std::vector<std::size_t>>();
      else if (key == "activation") c.model.activation = parse_activation(value.get<std::string>());
      else if (key == "dae_noise") c.model.dae_noise = value.get<double>();
      else if (key == "gamma") c.model.gamma = value.get<double>();
      else if (key == "vae_reconstruction") c.model.vae_reconstruction = parse_reduction(value.get<std::string>());
      else if (key == "annealing_cycles") c.model.annealing.cycles = value.get<std::size_t>();
      else if (key == "annealing_ratio") c.model.annealing.ratio = value.get<double>();
      else if (key == "beta_max") c.model.annealing.beta_max = value.get<double>();
      else throw ParameterError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("config: ") + ex.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("config " + path.string() + ": " + ex.what());
  }
  ExperimentConfig c;
  apply_json(c, j);
  return c;
}

}  // namespace emolat
