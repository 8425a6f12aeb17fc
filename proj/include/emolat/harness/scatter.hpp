#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "emolat/core/error.hpp"
#include "emolat/data/corpus_io.hpp"
#include "emolat/harness/experiment.hpp"

namespace emolat {

// Scatter CSV: header "z1,z2,label,corpus", one row per embedded sample,
// reals in shortest round-trip form.

inline void write_scatter_csv(const LatentSet& set, std::ostream& out) {
  if (set.z.rows() != set.labels.size()) throw ShapeError("scatter: latent rows and labels differ");
  for (std::size_t d = 0; d < set.z.cols(); ++d) out << 'z' << d + 1 << ',';
  out << "label,corpus\n";
  for (std::size_t i = 0; i < set.z.rows(); ++i) {
    for (double v : set.z.row(i)) out << format_double(v) << ',';
    out << emotion_name(set.labels[i]) << ',' << set.corpus << '\n';
  }
}

inline void write_scatter_csv(const LatentSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scatter file " + path.string());
  write_scatter_csv(set, out);
  if (!out) throw IoError("write failed for " + path.string());
}

inline LatentSet read_scatter_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source + ": empty scatter file");
  const auto header = detail::split(line, ',');
  if (header.size() < 3 || detail::trim(header[header.size() - 2]) != "label" ||
      detail::trim(header.back()) != "corpus") {
    throw FormatError(source + ": expected header z1,...,label,corpus");
  }
  const std::size_t dim = header.size() - 2;
  LatentSet set;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size()) throw FormatError(source + ":" + std::to_string(line_no) + ": wrong field count");
    for (std::size_t d = 0; d < dim; ++d) {
      double v = 0.0;
      if (!detail::parse_double(cells[d], v)) throw FormatError(source + ":" + std::to_string(line_no) + ": bad number");
      values.push_back(v);
    }
    const auto label = parse_emotion(detail::trim(cells[dim]));
    if (!label) throw FormatError(source + ":" + std::to_string(line_no) + ": bad label");
    set.labels.push_back(*label);
    set.corpus = std::string(detail::trim(cells[dim + 1]));
  }
  set.z = Matrix(set.labels.size(), dim, std::move(values));
  return set;
}

inline LatentSet read_scatter_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scatter file " + path.string());
  return read_scatter_csv(in, path.string());
}

/// One CSV per (variant, corpus) under `dir`, named <variant>_<corpus>.csv.
/// Returns the written paths.
inline std::vector<std::filesystem::path> export_scatter(const EvalReport& report, std::span<const Variant> variants,
                                                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create scatter directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (std::size_t v = 0; v < report.scatter.size() && v < variants.size(); ++v) {
    for (const auto& set : report.scatter[v]) {
      const auto path = dir / (std::string(variant_name(variants[v])) + "_" + set.corpus + ".csv");
      write_scatter_csv(set, path);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace emolat
