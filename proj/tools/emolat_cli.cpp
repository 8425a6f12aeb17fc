// emolat command-line interface.
//
//   emolat generate  --out DIR               synthetic training + transfer corpora and a manifest
//   emolat train     --manifest M --variant V --out model.ckpt
//   emolat embed     --checkpoint C --corpus X.csv --out latents.csv
//   emolat evaluate  --reference train.csv --target a.csv [--target b.csv ...]
//   emolat run       [--config cfg.json] [flags]   full cross-validated experiment
//   emolat report    --input report.json [--out summary.txt]

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emolat/emolat.hpp"

namespace fs = std::filesystem;
using emolat::ClassSet;
using nlohmann::json;

namespace {

int cmd_generate(const fs::path& out_dir, const emolat::SyntheticSuiteOptions& opt) {
  const auto manifest = emolat::write_synthetic_suite(opt, out_dir);
  for (const auto& e : manifest.corpora) std::cout << "wrote " << e.path.string() << '\n';
  std::cout << "wrote " << (out_dir / "manifest.json").string() << '\n';
  return 0;
}

int cmd_train(const emolat::ExperimentConfig& cfg, emolat::Variant variant, const fs::path& out,
              const std::string& trace_path) {
  std::vector<std::string> warnings;
  const auto manifest = emolat::load_manifest(cfg.manifest);
  const auto data = emolat::prepare_corpora(manifest, cfg, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  const auto standardizer = emolat::fit_standardizer(data.training);
  for (std::size_t j : standardizer.floored) std::cerr << "warning: feature " << j << " has zero variance, std floored\n";
  const auto x = standardizer.apply(data.training.features);
  const auto result = emolat::train(cfg.model_for(variant), cfg.train_options(), x, data.training.labels, cfg.seed);
  emolat::save_checkpoint({result.params, cfg.seed, standardizer}, out);
  if (!trace_path.empty()) {
    emolat::write_text(trace_path, emolat::detail::trace_json(result.trace).dump(2) + "\n");
  }
  const auto& last = result.trace.back();
  std::cout << "trained " << emolat::variant_name(variant) << " on " << x.rows() << " samples; final loss "
            << last.total << " (rec " << last.reconstruction << ", kl " << last.kl << ", cluster " << last.cluster
            << ")\nwrote " << out.string() << '\n';
  return 0;
}

int cmd_embed(const fs::path& checkpoint, const fs::path& corpus, const std::string& name, const ClassSet& classes,
              const fs::path& out) {
  const auto ck = emolat::load_checkpoint(checkpoint);
  emolat::CorpusManifestEntry entry;
  entry.name = name.empty() ? corpus.stem().string() : name;
  entry.path = corpus;
  entry.classes = classes;
  const auto loaded = emolat::load_corpus(entry);
  if (loaded.dropped > 0) std::cerr << "warning: dropped " << loaded.dropped << " rows outside the class set\n";
  emolat::Matrix x = loaded.data.features;
  if (ck.standardizer) x = ck.standardizer->apply(x);
  emolat::LatentSet set{entry.name, emolat::embed(ck.params, x), loaded.data.labels};
  emolat::write_scatter_csv(set, out);
  std::cout << "wrote " << out.string() << " (" << set.z.rows() << " rows)\n";
  return 0;
}

int cmd_evaluate(const fs::path& reference, const std::vector<std::string>& targets, const ClassSet& classes,
                 double c, std::size_t grid, const std::string& out) {
  const auto ref = emolat::read_scatter_csv(reference);
  emolat::SvmOptions opt;
  opt.c = c;
  const auto svm = emolat::svm_fit(ref.z, ref.labels, opt);
  json result = {{"reference", ref.corpus},
                 {"reference_accuracy", emolat::balanced_accuracy(ref.labels, svm.predict(ref.z), classes)},
                 {"targets", json::array()}};
  for (const auto& t : targets) {
    const auto target = emolat::read_scatter_csv(fs::path(t));
    const auto bd = emolat::bhattacharyya(ref.z, target.z, grid, ref.corpus, target.corpus);
    result["targets"].push_back({{"corpus", target.corpus},
                                 {"balanced_accuracy", emolat::balanced_accuracy(target.labels, svm.predict(target.z), classes)},
                                 {"bd", bd.bd},
                                 {"log_bd", bd.log_bd ? json(*bd.log_bd) : json()}});
  }
  if (out.empty()) {
    std::cout << result.dump(2) << '\n';
  } else {
    emolat::write_text(out, result.dump(2) + "\n");
  }
  return 0;
}

int cmd_run(const emolat::ExperimentConfig& cfg) {
  const auto report = emolat::run_experiment(cfg);
  emolat::report_render(report, cfg.output_dir);
  const auto files = emolat::export_scatter(report, cfg.variants, cfg.output_dir / "scatter");
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << emolat::render_summary(emolat::to_json(report));
  std::cout << "wrote " << (cfg.output_dir / "report.json").string() << ", "
            << (cfg.output_dir / "summary.txt").string() << " and " << files.size() << " scatter files\n";
  return report.any_failed() ? 1 : 0;
}

int cmd_report(const fs::path& input, const std::string& out) {
  std::ifstream in(input);
  if (!in) throw emolat::IoError("cannot open " + input.string());
  json j;
  in >> j;
  const auto text = emolat::render_summary(j);
  if (out.empty()) {
    std::cout << text;
  } else {
    emolat::write_text(out, text);
  }
  return j.at("status") == "ok" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent emotion representations: train DAE/VAE variants and evaluate cross-corpus transfer"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic training corpus, transfer corpora and a manifest");
  fs::path gen_out;
  emolat::SyntheticSuiteOptions gen_opt;
  std::size_t train_per_class = 150, transfer_per_class = 100;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_opt.seed, "Generator seed");
  gen->add_option("--separation", gen_opt.separation, "Distance between class means in class-std units");
  gen->add_option("--shift", gen_opt.shift_magnitude, "Norm of each transfer corpus shift");
  gen->add_option("--gain-jitter", gen_opt.gain_jitter, "Transfer gain drawn from [1-j, 1+j]");
  gen->add_option("--class-scale", gen_opt.class_scale, "Class cloud standard deviation");
  gen->add_option("--transfer-corpora", gen_opt.transfer_corpora, "Number of transfer corpora");
  gen->add_option("--train-per-class", train_per_class, "Training samples per class");
  gen->add_option("--transfer-per-class", transfer_per_class, "Transfer samples per class");
  gen->add_flag("--last-without-neutral", gen_opt.last_without_neutral, "Last transfer corpus has no neutral samples");

  // shared experiment flags; recorded as JSON so they can be applied over a config file
  json overrides = json::object();
  auto add_experiment_flags = [&overrides](CLI::App* sub) {
    auto str = [&overrides, sub](const std::string& flag, const std::string& key, const std::string& help) {
      sub->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
    };
    auto real = [&overrides, sub](const std::string& flag, const std::string& key, const std::string& help) {
      sub->add_option_function<double>(flag, [&overrides, key](double v) { overrides[key] = v; }, help);
    };
    auto count = [&overrides, sub](const std::string& flag, const std::string& key, const std::string& help) {
      sub->add_option_function<std::uint64_t>(flag, [&overrides, key](std::uint64_t v) { overrides[key] = v; }, help);
    };
    str("--manifest", "manifest", "Corpus manifest (JSON)");
    str("--classes", "classes", "Class set, e.g. NSHA or SHA");
    count("--epochs", "epochs", "Training epochs");
    count("--batch", "batch_size", "Mini-batch size");
    real("--lr", "lr", "Adam learning rate");
    count("--seed", "seed", "Experiment seed");
    str("--activation", "activation", "Hidden activation (relu|tanh)");
    real("--dae-noise", "dae_noise", "DAE input noise std");
    real("--gamma", "gamma", "Cluster loss weight");
    real("--beta-max", "beta_max", "Annealing ceiling");
    str("--vae-reconstruction", "vae_reconstruction", "VAE reconstruction reduction (mean|sum)");
    sub->add_option_function<std::vector<std::size_t>>(
        "--hidden", [&overrides](const std::vector<std::size_t>& v) { overrides["hidden"] = v; }, "Encoder widths");
  };

  // train
  auto* tr = app.add_subcommand("train", "Train one variant on the full training corpus");
  std::string tr_variant = "dae";
  fs::path tr_out;
  std::string tr_trace;
  add_experiment_flags(tr);
  tr->add_option("--variant", tr_variant, "dae | vae | vae_anneal | vae_ss");
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--trace", tr_trace, "Write the per-epoch loss trace (JSON)");

  // embed
  auto* em = app.add_subcommand("embed", "Embed a corpus CSV with a trained checkpoint");
  fs::path em_ckpt, em_corpus, em_out;
  std::string em_name, em_classes = "NSHA";
  em->add_option("--checkpoint", em_ckpt)->required();
  em->add_option("--corpus", em_corpus)->required();
  em->add_option("--name", em_name, "Corpus tag written to the output");
  em->add_option("--classes", em_classes);
  em->add_option("--out", em_out)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Linear SVM accuracy and Bhattacharyya distance between latent CSVs");
  fs::path ev_ref;
  std::vector<std::string> ev_targets;
  std::string ev_classes = "NSHA", ev_out;
  double ev_c = 1.0;
  std::size_t ev_grid = 100;
  ev->add_option("--reference", ev_ref, "Latents the SVM is fitted on")->required();
  ev->add_option("--target", ev_targets, "Latents to score")->required();
  ev->add_option("--classes", ev_classes);
  ev->add_option("--c", ev_c, "SVM regularization C");
  ev->add_option("--grid", ev_grid, "KDE grid points per axis");
  ev->add_option("--out", ev_out, "Write JSON here instead of stdout");

  // run
  auto* run = app.add_subcommand("run", "Cross-validated experiment over all variants");
  std::string run_config;
  add_experiment_flags(run);
  run->add_option("--config", run_config, "Experiment config (JSON); flags override it");
  run->add_option_function<std::vector<std::string>>(
      "--variants", [&overrides](const std::vector<std::string>& v) { overrides["variants"] = v; }, "Variants to run");
  run->add_option_function<int>("--condition", [&overrides](int v) { overrides["condition"] = v; }, "1 or 2");
  run->add_option_function<double>(
      "--fraction", [&overrides](double v) { overrides["transfer_fraction"] = v; }, "Condition 2 normalization fraction");
  run->add_option_function<std::size_t>("--folds", [&overrides](std::size_t v) { overrides["folds"] = v; });
  run->add_option_function<std::string>("--out", [&overrides](const std::string& v) { overrides["output_dir"] = v; },
                                        "Output directory");
  run->add_option_function<std::size_t>("--jobs", [&overrides](std::size_t v) { overrides["jobs"] = v; },
                                        "Parallel (variant, fold) cells");
  run->add_flag_function("--score-normalization-subset",
                         [&overrides](std::int64_t) { overrides["score_normalization_subset"] = true; });
  run->add_flag_function("--student-t", [&overrides](std::int64_t) { overrides["student_t_ci"] = true; },
                         "t-distribution confidence intervals");
  run->add_flag_function("--save-checkpoints", [&overrides](std::int64_t) { overrides["save_checkpoints"] = true; });

  // report
  auto* rep = app.add_subcommand("report", "Render the summary table of a report.json");
  fs::path rep_in;
  std::string rep_out;
  rep->add_option("--input", rep_in)->required();
  rep->add_option("--out", rep_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_opt.training_counts = {train_per_class, train_per_class, train_per_class, train_per_class};
      gen_opt.transfer_counts = {transfer_per_class, transfer_per_class, transfer_per_class, transfer_per_class};
      return cmd_generate(gen_out, gen_opt);
    }
    if (tr->parsed()) {
      emolat::ExperimentConfig cfg;
      emolat::apply_json(cfg, overrides);
      if (cfg.manifest.empty()) throw emolat::ParameterError("--manifest is required");
      return cmd_train(cfg, emolat::parse_variant(tr_variant), tr_out, tr_trace);
    }
    if (em->parsed()) return cmd_embed(em_ckpt, em_corpus, em_name, ClassSet::parse(em_classes), em_out);
    if (ev->parsed()) return cmd_evaluate(ev_ref, ev_targets, ClassSet::parse(ev_classes), ev_c, ev_grid, ev_out);
    if (run->parsed()) {
      emolat::ExperimentConfig cfg = run_config.empty() ? emolat::ExperimentConfig{}
                                                        : emolat::load_experiment_config(run_config);
      emolat::apply_json(cfg, overrides);
      if (cfg.manifest.empty()) throw emolat::ParameterError("a manifest is required (--manifest or config)");
      return cmd_run(cfg);
    }
    if (rep->parsed()) return cmd_report(rep_in, rep_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
