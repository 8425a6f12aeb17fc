#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/data/corpus_io.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

struct ClassCloud {
  std::size_t count = 0;
  std::vector<double> mean = std::vector<double>(kFeatureDim, 0.0);
  double scale = 1.0;  // isotropic standard deviation
};

/// One synthetic corpus: Gaussian class clouds followed by a corpus-level
/// affine map x -> gain * x + shift that stands in for language and recording
/// mismatch.
struct CorpusGeneratorSpec {
  std::string name = "synthetic";
  std::array<ClassCloud, 4> classes;  // indexed by Emotion
  double gain = 1.0;
  std::vector<double> shift = std::vector<double>(kFeatureDim, 0.0);
};

inline FeatureMatrix generate_synthetic_corpus(const CorpusGeneratorSpec& spec, std::uint64_t seed) {
  if (!(spec.gain > 0.0)) throw ParameterError("synthetic corpus '" + spec.name + "': gain must be positive");
  if (spec.shift.size() != kFeatureDim) throw ParameterError("synthetic corpus: shift must have 88 entries");
  std::size_t total = 0;
  for (const auto& c : spec.classes) {
    if (!(c.scale > 0.0)) throw ParameterError("synthetic corpus '" + spec.name + "': covariance scale must be positive");
    if (c.mean.size() != kFeatureDim) throw ParameterError("synthetic corpus: class mean must have 88 entries");
    total += c.count;
  }

  Rng rng(seed);
  FeatureMatrix fm;
  fm.features = Matrix(total, kFeatureDim);
  fm.labels.reserve(total);
  fm.corpus.assign(total, spec.name);
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.classes.size(); ++k) {
    const ClassCloud& cloud = spec.classes[k];
    for (std::size_t n = 0; n < cloud.count; ++n, ++row) {
      auto dst = fm.features.row(row);
      for (std::size_t j = 0; j < kFeatureDim; ++j) {
        dst[j] = spec.gain * (cloud.mean[j] + cloud.scale * rng.gaussian()) + spec.shift[j];
      }
      fm.labels.push_back(static_cast<Emotion>(k));
    }
  }
  return fm;
}

/// Parameters for a family of corpora sharing one class geometry.
struct SyntheticSuiteOptions {
  std::array<std::size_t, 4> training_counts{150, 150, 150, 150};
  std::array<std::size_t, 4> transfer_counts{100, 100, 100, 100};
  std::size_t transfer_corpora = 3;
  double separation = 10.0;     // pairwise distance between class means, in units of the class std
  double class_scale = 1.0;
  double shift_magnitude = 2.0;  // Euclidean norm of each transfer corpus shift
  double gain_jitter = 0.3;      // transfer gain drawn from [1 - j, 1 + j]
  bool last_without_neutral = false;
  std::uint64_t seed = 1;
};

/// Orthonormal class directions scaled so every pair of class means is
/// `separation` apart.
inline std::array<std::vector<double>, 4> make_class_means(double separation, Rng& rng) {
  std::array<std::vector<double>, 4> dirs;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    std::vector<double> v(kFeatureDim);
    for (double& x : v) x = rng.gaussian();
    for (std::size_t p = 0; p < k; ++p) {
      double dot = 0.0;
      for (std::size_t j = 0; j < kFeatureDim; ++j) dot += v[j] * dirs[p][j];
      for (std::size_t j = 0; j < kFeatureDim; ++j) v[j] -= dot * dirs[p][j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    dirs[k] = std::move(v);
  }
  const double radius = separation / std::sqrt(2.0);
  for (auto& d : dirs)
    for (double& x : d) x *= radius;
  return dirs;
}

/// Training corpus first, then the transfer corpora "transfer1", ...
inline std::vector<CorpusGeneratorSpec> make_synthetic_suite(const SyntheticSuiteOptions& opt) {
  Rng rng(derive_seed(opt.seed, 0x5eed));
  const auto means = make_class_means(opt.separation, rng);
  std::vector<CorpusGeneratorSpec> suite;
  auto make = [&](const std::string& name, const std::array<std::size_t, 4>& counts) {
    CorpusGeneratorSpec s;
    s.name = name;
    for (std::size_t k = 0; k < 4; ++k) s.classes[k] = ClassCloud{counts[k], means[k], opt.class_scale};
    return s;
  };
  suite.push_back(make("train", opt.training_counts));
  for (std::size_t t = 0; t < opt.transfer_corpora; ++t) {
    CorpusGeneratorSpec s = make("transfer" + std::to_string(t + 1), opt.transfer_counts);
    s.gain = 1.0 + opt.gain_jitter * (2.0 * rng.uniform() - 1.0);
    double norm = 0.0;
    for (double& x : s.shift) {
      x = rng.gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : s.shift) x *= opt.shift_magnitude / norm;
    suite.push_back(std::move(s));
  }
  if (opt.last_without_neutral && opt.transfer_corpora > 0) {
    suite.back().classes[static_cast<std::size_t>(Emotion::kNeutral)].count = 0;
  }
  return suite;
}

/// Writes every corpus of the suite as <name>.csv under `dir` plus a
/// manifest.json referencing them, and returns the manifest.
inline CorpusManifest write_synthetic_suite(const SyntheticSuiteOptions& opt, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto suite = make_synthetic_suite(opt);
  CorpusManifest manifest;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto fm = generate_synthetic_corpus(suite[i], derive_seed(opt.seed, 21, i));
    CorpusManifestEntry e;
    e.name = suite[i].name;
    e.role = i == 0 ? CorpusRole::kTraining : CorpusRole::kTransfer;
    e.path = suite[i].name + ".csv";
    std::vector<Emotion> present;
    for (Emotion c : kAllEmotions)
      if (suite[i].classes[static_cast<std::size_t>(c)].count > 0) present.push_back(c);
    e.classes = ClassSet(std::move(present));
    write_corpus_csv(fm, dir / e.path);
    manifest.corpora.push_back(std::move(e));
  }
  save_manifest(manifest, dir / "manifest.json");
  for (auto& e : manifest.corpora) e.path = dir / e.path;
  return manifest;
}

}  // namespace emolat
