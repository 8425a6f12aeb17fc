#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "emolat/core/error.hpp"
#include "emolat/data/feature_matrix.hpp"

namespace emolat {

enum class CorpusRole { kTraining, kTransfer };

struct CorpusManifestEntry {
  std::string name;
  CorpusRole role = CorpusRole::kTransfer;
  std::filesystem::path path;
  ClassSet classes = ClassSet::four();
};

/// The corpora of one experiment. Exactly one entry has the training role.
struct CorpusManifest {
  std::vector<CorpusManifestEntry> corpora;

  const CorpusManifestEntry& training() const {
    for (const auto& c : corpora)
      if (c.role == CorpusRole::kTraining) return c;
    throw ContractError("manifest has no training corpus");
  }

  std::vector<CorpusManifestEntry> transfers() const {
    std::vector<CorpusManifestEntry> out;
    for (const auto& c : corpora)
      if (c.role == CorpusRole::kTransfer) out.push_back(c);
    return out;
  }

  void validate() const {
    std::size_t training_count = 0;
    for (const auto& c : corpora) {
      if (c.role == CorpusRole::kTraining) ++training_count;
      if (c.classes.empty()) throw ParameterError("corpus '" + c.name + "' has an empty class set");
      if (c.name.empty()) throw ParameterError("corpus with empty name in manifest");
    }
    if (training_count != 1) {
      throw ParameterError("manifest must name exactly one training corpus, found " + std::to_string(training_count));
    }
  }
};

// Manifest file layout (JSON):
//   {"corpora": [{"name": "train", "role": "training", "path": "train.csv",
//                 "classes": ["neutral", "sad", "happy", "angry"]}, ...]}
// Relative paths resolve against the manifest's directory.

inline nlohmann::json manifest_to_json(const CorpusManifest& m) {
  nlohmann::json corpora = nlohmann::json::array();
  for (const auto& c : m.corpora) {
    nlohmann::json classes = nlohmann::json::array();
    for (Emotion e : c.classes.classes()) classes.push_back(std::string(emotion_name(e)));
    corpora.push_back({{"name", c.name},
                       {"role", c.role == CorpusRole::kTraining ? "training" : "transfer"},
                       {"path", c.path.generic_string()},
                       {"classes", classes}});
  }
  return {{"corpora", corpora}};
}

inline CorpusManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  CorpusManifest m;
  try {
    for (const auto& c : j.at("corpora")) {
      CorpusManifestEntry e;
      e.name = c.at("name").get<std::string>();
      const auto role = c.at("role").get<std::string>();
      if (role == "training") {
        e.role = CorpusRole::kTraining;
      } else if (role == "transfer") {
        e.role = CorpusRole::kTransfer;
      } else {
        throw FormatError("corpus '" + e.name + "': unknown role '" + role + "'");
      }
      std::filesystem::path p = c.at("path").get<std::string>();
      e.path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
      if (c.contains("classes")) {
        std::vector<Emotion> classes;
        for (const auto& name : c.at("classes")) {
          auto parsed = parse_emotion(name.get<std::string>());
          if (!parsed) throw FormatError("corpus '" + e.name + "': unknown class '" + name.get<std::string>() + "'");
          classes.push_back(*parsed);
        }
        e.classes = ClassSet(std::move(classes));
      }
      m.corpora.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("manifest: ") + ex.what());
  }
  m.validate();
  return m;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("manifest " + path.string() + ": " + ex.what());
  }
  return manifest_from_json(j, path.parent_path());
}

inline void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

struct LoadedCorpus {
  FeatureMatrix data;
  std::size_t dropped = 0;  // rows whose label is outside the class set
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"' || s.back() == '\''))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Parses a functionals CSV: a header naming 88 feature columns, an
/// "emotion" label column and an optional "corpus" column. OpenSMILE
/// metadata columns ("name", "file", "frameTime") are ignored. The delimiter
/// is ',' unless the header only contains ';'.
inline LoadedCorpus parse_corpus_csv(std::istream& in, const std::string& corpus_name, const ClassSet& classes,
                                     const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw FormatError(source + ": missing header row");

  const char delim = (line.find(',') == std::string::npos && line.find(';') != std::string::npos) ? ';' : ',';
  const auto header = detail::split(line, delim);
  std::ptrdiff_t label_col = -1;
  std::ptrdiff_t corpus_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = detail::lower(detail::trim(header[i]));
    if (name == "emotion") {
      label_col = static_cast<std::ptrdiff_t>(i);
    } else if (name == "corpus") {
      corpus_col = static_cast<std::ptrdiff_t>(i);
    } else if (name == "name" || name == "file" || name == "frametime") {
      continue;
    } else {
      feature_cols.push_back(i);
    }
  }
  if (label_col < 0) throw FormatError(source + ": header has no 'emotion' column");
  if (feature_cols.size() != kFeatureDim) {
    throw FormatError(source + ": expected " + std::to_string(kFeatureDim) + " feature columns, found " +
                      std::to_string(feature_cols.size()));
  }

  LoadedCorpus result;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, delim);
    if (cells.size() != header.size()) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(cells.size()));
    }
    const auto label = parse_emotion(detail::trim(cells[static_cast<std::size_t>(label_col)]));
    if (!label || !classes.contains(*label)) {
      ++result.dropped;
      continue;
    }
    for (std::size_t c : feature_cols) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        throw FormatError(source + ":" + std::to_string(line_no) + ": cannot parse '" +
                          std::string(detail::trim(cells[c])) + "' in column '" +
                          std::string(detail::trim(header[c])) + "'");
      }
      values.push_back(v);
    }
    result.data.labels.push_back(*label);
    result.data.corpus.push_back(corpus_col >= 0 ? std::string(detail::trim(cells[static_cast<std::size_t>(corpus_col)]))
                                                 : corpus_name);
  }
  const std::size_t n = result.data.labels.size();
  result.data.features = Matrix(n, kFeatureDim, std::move(values));
  return result;
}

inline LoadedCorpus load_corpus(const CorpusManifestEntry& entry) {
  std::ifstream in(entry.path);
  if (!in) throw IoError("cannot open corpus file " + entry.path.string());
  return parse_corpus_csv(in, entry.name, entry.classes, entry.path.string());
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_corpus_csv(const FeatureMatrix& fm, std::ostream& out) {
  fm.validate();
  for (std::size_t j = 0; j < fm.dim(); ++j) out << 'f' << j << ',';
  out << "emotion,corpus\n";
  for (std::size_t i = 0; i < fm.size(); ++i) {
    for (double v : fm.features.row(i)) out << format_double(v) << ',';
    out << emotion_name(fm.labels[i]) << ',' << fm.corpus[i] << '\n';
  }
}

inline void write_corpus_csv(const FeatureMatrix& fm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  write_corpus_csv(fm, out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace emolat
