#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "emolat/emolat.hpp"

namespace emolat {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("emolat_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CorpusSet synthetic_set(std::size_t transfers, std::uint64_t seed, std::size_t per_class = 40) {
  SyntheticSuiteOptions opt;
  opt.seed = seed;
  opt.transfer_corpora = transfers;
  opt.training_counts = {per_class, per_class, per_class, per_class};
  opt.transfer_counts = {per_class / 2, per_class / 2, per_class / 2, per_class / 2};
  const auto suite = make_synthetic_suite(opt);
  CorpusSet set;
  set.training_name = suite[0].name;
  set.training = generate_synthetic_corpus(suite[0], derive_seed(seed, 21, 0));
  for (std::size_t t = 1; t < suite.size(); ++t) {
    set.transfer_names.push_back(suite[t].name);
    set.transfers.push_back(generate_synthetic_corpus(suite[t], derive_seed(seed, 21, t)));
  }
  return set;
}

ExperimentConfig quick_config(std::vector<Variant> variants, std::size_t epochs = 3) {
  ExperimentConfig cfg;
  cfg.variants = std::move(variants);
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.seed = 17;
  cfg.kde_grid = 40;
  return cfg;
}

TEST(Harness, ReportCardinality) {
  const auto data = synthetic_set(2, 1);
  const auto report = run_experiment(quick_config({Variant::kDae}), data);
  ASSERT_EQ(report.cells.size(), 5u);
  std::set<std::size_t> folds;
  for (const auto& c : report.cells) {
    EXPECT_TRUE(c.ok) << c.error;
    EXPECT_TRUE(folds.insert(c.fold).second);
    EXPECT_EQ(c.transfer.size(), 2u);
    EXPECT_EQ(c.trace.size(), 3u);
  }
  ASSERT_EQ(report.summaries.size(), 1u);
  EXPECT_EQ(report.summaries[0].fold_validation.size(), 5u);
  ASSERT_EQ(report.summaries[0].transfer.size(), 2u);
  for (const auto& t : report.summaries[0].transfer) {
    EXPECT_EQ(t.fold_accuracies.size(), 5u);
    EXPECT_EQ(t.fold_bd.size(), 5u);
    EXPECT_EQ(t.bd.reference, "train");
  }
  const auto j = to_json(report);
  EXPECT_EQ(j.at("cells").size(), 5u);
  EXPECT_EQ(j.at("summary")[0].at("transfer").size(), 2u);
  EXPECT_EQ(j.at("status"), "ok");
}

TEST(Harness, SameSeedSameReport) {
  const auto data = synthetic_set(1, 2);
  auto cfg = quick_config({Variant::kDae, Variant::kVaeSs});
  const std::string a = to_json(run_experiment(cfg, data)).dump();
  const std::string b = to_json(run_experiment(cfg, data)).dump();
  cfg.jobs = 3;
  const std::string c = to_json(run_experiment(cfg, data)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.seed += 1;
  EXPECT_NE(a, to_json(run_experiment(cfg, data)).dump());
}

TEST(Condition, SubsampleArithmetic) {
  const auto data = synthetic_set(1, 3, 50);
  const FeatureMatrix& t = data.transfers[0];
  ASSERT_EQ(t.size(), 100u);
  const auto ctx = apply_condition(2, t, 0.2, 5, Standardizer{});
  EXPECT_EQ(ctx.normalization_indices.size(), 20u);
  EXPECT_EQ(ctx.scoring_indices.size(), 80u);
  std::set<std::size_t> all(ctx.normalization_indices.begin(), ctx.normalization_indices.end());
  all.insert(ctx.scoring_indices.begin(), ctx.scoring_indices.end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(apply_condition(2, t, 0.2, 5, Standardizer{}, true).scoring_indices.size(), 100u);
  EXPECT_EQ(apply_condition(2, t, 0.2, 5, Standardizer{}).normalization_indices, ctx.normalization_indices);
  EXPECT_THROW(apply_condition(2, t.subset(std::vector<std::size_t>{0, 1, 2, 3, 4}), 0.2, 5, Standardizer{}),
               ContractError);
}

TEST(Condition, FrozenTrainingStandardizer) {
  const auto data = synthetic_set(1, 4);
  const Standardizer s = fit_standardizer(data.training);
  const auto ctx = apply_condition(1, data.transfers[0], 0.2, 0, s);
  EXPECT_EQ(ctx.standardizer.mean, s.mean);
  EXPECT_EQ(ctx.scoring_indices.size(), data.transfers[0].size());
  const auto stats = column_stats(ctx.standardizer.apply(data.transfers[0].features));
  double largest = 0.0;
  for (double m : stats.mean) largest = std::max(largest, std::abs(m));
  EXPECT_GT(largest, 0.05);
}

TEST(Condition, NullShiftGivesEqualAccuracy) {
  SyntheticSuiteOptions opt;
  opt.seed = 5;
  opt.transfer_corpora = 1;
  opt.shift_magnitude = 0.0;
  opt.gain_jitter = 0.0;
  opt.training_counts = {60, 60, 60, 60};
  opt.transfer_counts = {50, 50, 50, 50};
  const auto suite = make_synthetic_suite(opt);
  CorpusSet data;
  data.training_name = "train";
  data.training = generate_synthetic_corpus(suite[0], 1);
  data.transfer_names = {"copy"};
  data.transfers = {generate_synthetic_corpus(suite[1], 2)};

  auto cfg = quick_config({Variant::kDae}, 10);
  const auto one = run_experiment(cfg, data).summaries[0].transfer[0].accuracy;
  cfg.condition = 2;
  const auto two = run_experiment(cfg, data).summaries[0].transfer[0].accuracy;
  EXPECT_LE(std::abs(one.mean - two.mean), std::max(one.half_width, two.half_width))
      << one.mean << " vs " << two.mean;
}

TEST(Harness, ThreeClassSetExcludesNeutral) {
  const auto full = synthetic_set(1, 6);
  CorpusSet data = full;
  data.training = full.training.restrict_to(ClassSet::three());
  data.transfers[0] = full.transfers[0].restrict_to(ClassSet::three());
  auto cfg = quick_config({Variant::kVaeSs});
  cfg.classes = ClassSet::three();
  const auto report = run_experiment(cfg, data);
  ASSERT_FALSE(report.any_failed());
  for (const auto& set : report.scatter[0])
    for (Emotion e : set.labels) EXPECT_NE(e, Emotion::kNeutral);
}

// Training corpus where one class has a single sample: the fold that holds it
// for validation trains on one class only and its SVM cannot be fitted.
CorpusSet single_sample_class_set() {
  CorpusSet data = synthetic_set(1, 7, 10);
  std::vector<std::size_t> keep;
  bool kept_neutral = false;
  for (std::size_t i = 0; i < data.training.size(); ++i) {
    const Emotion e = data.training.labels[i];
    if (e == Emotion::kSad) keep.push_back(i);
    if (e == Emotion::kNeutral && !kept_neutral) {
      keep.push_back(i);
      kept_neutral = true;
    }
  }
  data.training = data.training.subset(keep);
  return data;
}

TEST(Harness, FailedCellIsRecordedAndSurfaced) {
  const CorpusSet data = single_sample_class_set();
  const auto report = run_experiment(quick_config({Variant::kDae}), data);
  ASSERT_EQ(report.cells.size(), 5u);
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += !c.ok;
  EXPECT_EQ(failed, 1u);
  EXPECT_TRUE(report.any_failed());
  EXPECT_EQ(report.summaries[0].folds_ok, 4u);
  EXPECT_EQ(report.warnings.size(), 1u);

  const auto j = to_json(report);
  EXPECT_EQ(j.at("status"), "error");
  const std::string summary = render_summary(j);
  EXPECT_NE(summary.find("\terror\t"), std::string::npos) << summary;
  EXPECT_NE(summary.find("status error"), std::string::npos);
}

TEST(Report, SummaryNumbersMatchJson) {
  const auto data = synthetic_set(2, 8);
  const auto j = to_json(run_experiment(quick_config({Variant::kDae, Variant::kVae}), data));
  const std::string summary = render_summary(j);
  std::istringstream lines(summary);
  std::string line;
  std::size_t matched = 0;
  while (std::getline(lines, line)) {
    for (const auto& c : j.at("cells")) {
      const std::string prefix =
          c.at("variant").get<std::string>() + "\t" + std::to_string(c.at("fold").get<std::size_t>()) + "\tok\t";
      if (line.rfind(prefix, 0) != 0) continue;
      std::string expected = prefix + format_double(c.at("validation_accuracy").get<double>());
      for (const auto& t : c.at("transfer")) expected += "\t" + format_double(t.at("balanced_accuracy").get<double>());
      EXPECT_EQ(line, expected);
      ++matched;
    }
  }
  EXPECT_EQ(matched, 10u);
}

TEST(Report, ConfidenceIntervalsRecompute) {
  const auto data = synthetic_set(1, 9);
  auto cfg = quick_config({Variant::kDae});
  for (bool student : {false, true}) {
    cfg.student_t_ci = student;
    const auto j = to_json(run_experiment(cfg, data));
    const auto& v = j.at("summary")[0].at("validation");
    const auto values = v.at("values").get<std::vector<double>>();
    ASSERT_EQ(values.size(), 5u);
    double mean = 0.0;
    for (double x : values) mean += x;
    mean /= 5.0;
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    const double s = std::sqrt(ss / 4.0);
    const double z = student ? 2.7764451051977987 : 1.96;
    EXPECT_NEAR(v.at("mean").get<double>(), mean, 1e-12);
    EXPECT_NEAR(v.at("ci95_half_width").get<double>(), z * s / std::sqrt(5.0), 1e-12);
  }
}

TEST(Scatter, RoundTripAndRowCount) {
  Rng rng(10);
  LatentSet set{"corpusA", gaussian_sample(rng, 25, 2), {}};
  for (std::size_t i = 0; i < 25; ++i) set.labels.push_back(kAllEmotions[i % 4]);
  std::stringstream buf;
  write_scatter_csv(set, buf);
  const std::string text = buf.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 26u);
  EXPECT_EQ(text.substr(0, text.find('\n')), "z1,z2,label,corpus");
  const auto back = read_scatter_csv(buf);
  EXPECT_EQ(back.corpus, "corpusA");
  EXPECT_EQ(back.labels, set.labels);
  for (std::size_t i = 0; i < set.z.size(); ++i) EXPECT_NEAR(back.z.data()[i], set.z.data()[i], 1e-12);
}

TEST(Scatter, EveryVariantCorpusPairIsExported) {
  const fs::path dir = scratch_dir("scatter");
  SyntheticSuiteOptions opt;
  opt.transfer_corpora = 2;
  opt.training_counts = {30, 30, 30, 30};
  opt.transfer_counts = {20, 20, 20, 20};
  write_synthetic_suite(opt, dir / "data");
  auto cfg = quick_config({Variant::kDae, Variant::kVaeAnneal});
  cfg.manifest = dir / "data" / "manifest.json";
  cfg.output_dir = dir / "out";
  cfg.save_checkpoints = true;
  const auto report = run_experiment(cfg);
  report_render(report, cfg.output_dir);
  const auto files = export_scatter(report, cfg.variants, cfg.output_dir / "scatter");
  EXPECT_EQ(files.size(), 6u);
  for (const char* v : {"dae", "vae_anneal"})
    for (const char* c : {"train", "transfer1", "transfer2"}) {
      const fs::path p = cfg.output_dir / "scatter" / (std::string(v) + "_" + c + ".csv");
      ASSERT_TRUE(fs::exists(p)) << p;
      const auto set = read_scatter_csv(p);
      EXPECT_EQ(set.corpus, c);
      EXPECT_EQ(set.z.rows(), std::string(c) == "train" ? 96u : 80u);
    }
  EXPECT_TRUE(fs::exists(cfg.output_dir / "report.json"));
  EXPECT_TRUE(fs::exists(cfg.output_dir / "summary.txt"));
  EXPECT_TRUE(fs::exists(cfg.output_dir / "checkpoints" / "dae_fold1.ckpt"));
  const auto ck = load_checkpoint(cfg.output_dir / "checkpoints" / "vae_anneal_fold5.ckpt");
  EXPECT_EQ(ck.params.config.variant, Variant::kVaeAnneal);
}

TEST(Config, JsonRoundTripAndUnknownKey) {
  ExperimentConfig cfg;
  cfg.variants = {Variant::kVae, Variant::kVaeSs};
  cfg.classes = ClassSet::three();
  cfg.condition = 2;
  cfg.model.hidden = {16, 4};
  cfg.model.annealing.beta_max = 0.5;
  ExperimentConfig back;
  apply_json(back, to_json(cfg));
  EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump());
  EXPECT_TRUE(back.model == cfg.model);
  EXPECT_THROW(apply_json(back, nlohmann::json{{"epoch", 3}}), ParameterError);
  EXPECT_THROW(apply_json(back, nlohmann::json{{"epochs", "many"}}), FormatError);
}

TEST(Config, Validation) {
  ExperimentConfig cfg;
  cfg.condition = 3;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg.condition = 2;
  cfg.transfer_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg.transfer_fraction = 0.2;
  cfg.classes = ClassSet::parse("S");
  EXPECT_THROW(cfg.validate(), ParameterError);
}

}  // namespace
}  // namespace emolat
