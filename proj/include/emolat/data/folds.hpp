#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/rng.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

struct FoldSplit {
  std::size_t k = 5;
  std::vector<std::vector<std::size_t>> validation;  // sorted indices per fold
  std::vector<std::string> warnings;

  std::vector<std::size_t> train(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < validation.size(); ++f) {
      if (f == fold) continue;
      out.insert(out.end(), validation[f].begin(), validation[f].end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Stratified shuffled k-fold partition. Each class is shuffled and dealt
/// round-robin; the dealing position carries over between classes so fold
/// sizes differ by at most one.
inline FoldSplit make_folds(std::span<const Emotion> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ContractError("make_folds: k must be at least 2");
  if (labels.size() < k) {
    throw ContractError("make_folds: " + std::to_string(labels.size()) + " samples cannot fill " + std::to_string(k) +
                        " folds");
  }
  Rng rng(seed);
  FoldSplit split;
  split.k = k;
  split.validation.assign(k, {});
  std::size_t next = 0;
  for (Emotion e : kAllEmotions) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == e) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < k) {
      split.warnings.push_back("class " + std::string(emotion_name(e)) + " has " + std::to_string(members.size()) +
                               " samples, fewer than " + std::to_string(k) + " folds");
    }
    rng.shuffle(std::span(members));
    for (std::size_t idx : members) {
      split.validation[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& fold : split.validation) std::sort(fold.begin(), fold.end());
  return split;
}

inline FoldSplit make_folds(const FeatureMatrix& fm, std::size_t k, std::uint64_t seed) {
  return make_folds(std::span<const Emotion>(fm.labels), k, seed);
}

}  // namespace emolat
