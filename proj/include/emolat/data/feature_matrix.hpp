#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/core/matrix.hpp"

namespace emolat {

/// Number of acoustic functionals per utterance.
inline constexpr std::size_t kFeatureDim = 88;

enum class Emotion : int { kNeutral = 0, kSad = 1, kHappy = 2, kAngry = 3 };

inline constexpr std::array<Emotion, 4> kAllEmotions{Emotion::kNeutral, Emotion::kSad, Emotion::kHappy,
                                                      Emotion::kAngry};

inline constexpr std::string_view emotion_name(Emotion e) {
  switch (e) {
    case Emotion::kNeutral: return "neutral";
    case Emotion::kSad: return "sad";
    case Emotion::kHappy: return "happy";
    case Emotion::kAngry: return "angry";
  }
  return "unknown";
}

inline constexpr char emotion_code(Emotion e) { return "NSHA"[static_cast<int>(e)]; }

/// Accepts full names ("angry") and one-letter codes ("A"), case-insensitive.
inline std::optional<Emotion> parse_emotion(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "n" || s == "neutral" || s == "neu") return Emotion::kNeutral;
  if (s == "s" || s == "sad" || s == "sadness") return Emotion::kSad;
  if (s == "h" || s == "happy" || s == "happiness" || s == "hap") return Emotion::kHappy;
  if (s == "a" || s == "angry" || s == "anger" || s == "ang") return Emotion::kAngry;
  return std::nullopt;
}

/// Ordered subset of the four emotions.
class ClassSet {
 public:
  ClassSet() = default;
  explicit ClassSet(std::vector<Emotion> classes) : classes_(std::move(classes)) {
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  }

  static ClassSet four() { return ClassSet({kAllEmotions.begin(), kAllEmotions.end()}); }
  static ClassSet three() { return ClassSet({Emotion::kSad, Emotion::kHappy, Emotion::kAngry}); }

  /// "NSHA"-style code string, or comma separated names.
  static ClassSet parse(std::string_view text) {
    std::vector<Emotion> out;
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      auto e = parse_emotion(token);
      if (!e) throw ParameterError("unknown emotion class '" + token + "'");
      out.push_back(*e);
      token.clear();
    };
    const bool compact = text.find(',') == std::string_view::npos && text.size() <= 4 &&
                         std::all_of(text.begin(), text.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }) &&
                         !parse_emotion(text).has_value();
    for (char c : text) {
      if (compact) {
        token = std::string(1, c);
        flush();
      } else if (c == ',') {
        flush();
      } else {
        token.push_back(c);
      }
    }
    flush();
    return ClassSet(std::move(out));
  }

  bool contains(Emotion e) const { return std::find(classes_.begin(), classes_.end(), e) != classes_.end(); }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }
  const std::vector<Emotion>& classes() const noexcept { return classes_; }

  std::string code() const {
    std::string s;
    for (Emotion e : classes_) s.push_back(emotion_code(e));
    return s;
  }

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  std::vector<Emotion> classes_;
};

/// Utterance-level features with labels and corpus tags, one row per sample.
struct FeatureMatrix {
  Matrix features;
  std::vector<Emotion> labels;
  std::vector<std::string> corpus;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() != labels.size() || labels.size() != corpus.size()) {
      throw ShapeError("feature matrix: " + std::to_string(features.rows()) + " rows, " +
                       std::to_string(labels.size()) + " labels, " + std::to_string(corpus.size()) + " corpus tags");
    }
  }

  FeatureMatrix subset(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.features = features.select_rows(indices);
    out.labels.reserve(indices.size());
    out.corpus.reserve(indices.size());
    for (std::size_t i : indices) {
      out.labels.push_back(labels[i]);
      out.corpus.push_back(corpus[i]);
    }
    return out;
  }

  /// Keeps only rows whose label is in `classes`.
  FeatureMatrix restrict_to(const ClassSet& classes) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (classes.contains(labels[i])) keep.push_back(i);
    return subset(keep);
  }

  std::size_t count(Emotion e) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), e));
  }
};

}  // namespace emolat
