#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "emolat/core/error.hpp"
#include "emolat/data/corpus_io.hpp"
#include "emolat/harness/experiment.hpp"

namespace emolat {

namespace detail {

inline nlohmann::json real_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json trace_json(const std::vector<EpochRecord>& trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : trace) {
    out.push_back({{"epoch", r.epoch},
                   {"beta", r.beta},
                   {"gamma", r.gamma},
                   {"reconstruction", real_or_null(r.reconstruction)},
                   {"kl", real_or_null(r.kl)},
                   {"kl_per_dim", r.kl_per_dim},
                   {"cluster", real_or_null(r.cluster)},
                   {"total", real_or_null(r.total)},
                   {"batches", r.batches},
                   {"single_class_batches", r.single_class_batches}});
  }
  return out;
}

inline nlohmann::json ci_json(const MeanCi& ci, const std::vector<double>& values) {
  return {{"values", values}, {"mean", ci.mean}, {"std", ci.stddev}, {"ci95_half_width", ci.half_width}};
}

}  // namespace detail

/// Structured form of the report; the summary table is rendered from this.
inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json transfer = nlohmann::json::array();
    for (const auto& t : c.transfer) {
      transfer.push_back({{"corpus", t.corpus}, {"balanced_accuracy", t.balanced_accuracy}, {"bd", t.bd},
                          {"scored", t.scored}});
    }
    cells.push_back({{"variant", std::string(variant_name(c.variant))},
                     {"fold", c.fold + 1},
                     {"status", c.ok ? "ok" : "error"},
                     {"error", c.ok ? nlohmann::json() : nlohmann::json(c.error)},
                     {"train_size", c.train_size},
                     {"validation_size", c.validation_size},
                     {"validation_accuracy", c.ok ? nlohmann::json(c.validation_accuracy) : nlohmann::json()},
                     {"transfer", transfer},
                     {"trace", detail::trace_json(c.trace)}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    nlohmann::json transfer = nlohmann::json::array();
    for (const auto& t : s.transfer) {
      transfer.push_back({{"corpus", t.corpus},
                          {"accuracy", detail::ci_json(t.accuracy, t.fold_accuracies)},
                          {"bd",
                           {{"reference", t.bd.reference},
                            {"transfer", t.bd.transfer},
                            {"bd", t.bd.bd},
                            {"log_bd", t.bd.log_bd ? nlohmann::json(*t.bd.log_bd) : nlohmann::json()},
                            {"fold_values", t.fold_bd}}}});
    }
    summaries.push_back({{"variant", std::string(variant_name(s.variant))},
                         {"folds_ok", s.folds_ok},
                         {"validation", detail::ci_json(s.validation, s.fold_validation)},
                         {"transfer", transfer}});
  }
  return {{"config", r.config}, {"warnings", r.warnings}, {"cells", cells}, {"summary", summaries},
          {"status", r.any_failed() ? "error" : "ok"}};
}

/// Plain-text table. Numbers are printed in shortest round-trip form so they
/// match the structured report exactly.
inline std::string render_summary(const nlohmann::json& report) {
  std::ostringstream out;
  auto num = [](const nlohmann::json& v) { return v.is_number() ? format_double(v.get<double>()) : std::string("-"); };
  const auto& cfg = report.at("config");
  out << "emolat experiment summary\n";
  out << "condition " << cfg.at("condition").get<int>() << ", classes " << cfg.at("classes").get<std::string>()
      << ", folds " << cfg.at("folds").get<std::size_t>() << ", seed " << cfg.at("seed").get<std::uint64_t>() << "\n\n";

  out << "per-fold cells\n";
  out << "variant\tfold\tstatus\tvalidation_accuracy";
  for (const auto& t : report.at("summary").empty() ? nlohmann::json::array() : report.at("summary")[0].at("transfer"))
    out << '\t' << t.at("corpus").get<std::string>() << "_accuracy";
  out << '\n';
  for (const auto& c : report.at("cells")) {
    out << c.at("variant").get<std::string>() << '\t' << c.at("fold").get<std::size_t>() << '\t';
    if (c.at("status") != "ok") {
      out << "error\t" << c.at("error").get<std::string>() << '\n';
      continue;
    }
    out << "ok\t" << num(c.at("validation_accuracy"));
    for (const auto& t : c.at("transfer")) out << '\t' << num(t.at("balanced_accuracy"));
    out << '\n';
  }

  out << "\nvalidation balanced accuracy (mean +/- 95% CI)\n";
  for (const auto& s : report.at("summary")) {
    out << s.at("variant").get<std::string>() << '\t' << num(s.at("validation").at("mean")) << "\t+/- "
        << num(s.at("validation").at("ci95_half_width")) << '\n';
  }
  out << "\ntransfer balanced accuracy (mean +/- 95% CI) and Bhattacharyya distance\n";
  out << "variant\tcorpus\taccuracy\tci95\tbd\tlog_bd\n";
  for (const auto& s : report.at("summary")) {
    for (const auto& t : s.at("transfer")) {
      out << s.at("variant").get<std::string>() << '\t' << t.at("corpus").get<std::string>() << '\t'
          << num(t.at("accuracy").at("mean")) << '\t' << num(t.at("accuracy").at("ci95_half_width")) << '\t'
          << num(t.at("bd").at("bd")) << '\t' << num(t.at("bd").at("log_bd")) << '\n';
    }
  }
  out << "\nfinal-epoch KL per latent dimension (fold 1)\n";
  for (const auto& c : report.at("cells")) {
    if (c.at("fold").get<std::size_t>() != 1 || c.at("trace").empty()) continue;
    const auto& first = c.at("trace").front();
    const auto& last = c.at("trace").back();
    if (last.at("kl_per_dim").empty()) continue;
    out << c.at("variant").get<std::string>() << "\tepoch1";
    for (const auto& v : first.at("kl_per_dim")) out << ' ' << num(v);
    out << "\tfinal";
    for (const auto& v : last.at("kl_per_dim")) out << ' ' << num(v);
    out << '\n';
  }
  if (!report.at("warnings").empty()) {
    out << "\nwarnings\n";
    for (const auto& w : report.at("warnings")) out << "- " << w.get<std::string>() << '\n';
  }
  out << "\nstatus " << report.at("status").get<std::string>() << '\n';
  return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

/// Writes report.json and summary.txt into `dir`.
inline void report_render(const EvalReport& report, const std::filesystem::path& dir) {
  const nlohmann::json j = to_json(report);
  write_text(dir / "report.json", j.dump(2) + "\n");
  write_text(dir / "summary.txt", render_summary(j));
}

}  // namespace emolat
