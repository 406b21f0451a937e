// pabcnn: simulate, beamform, train, predict, calibrate and post-process Hybrid-BCNN reconstructions.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pabcnn/cli/commands.hpp"
#include "pabcnn/io/config.hpp"
#include "pabcnn/io/tnsr.hpp"
#include "pabcnn/nn/model.hpp"

namespace fs = std::filesystem;
using namespace pabcnn;

namespace {

std::string or_default(const std::string& flag, const std::string& fallback) {
  return flag.empty() ? fallback : flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photoacoustic Hybrid-BCNN reconstruction with uncertainty"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  app.add_option("--config", config_path, "JSON run configuration (\"preset\": \"desk\" | \"full\")")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Overrides the seed used by the chosen command");
  app.add_option("--jobs", jobs, "Worker threads for per-image work")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output path");

  auto* simulate = app.add_subcommand("simulate", "Generate phantoms, channel data and MC volumes");
  std::optional<std::size_t> count;
  simulate->add_option("--count", count, "Number of images");

  auto* beamform = app.add_subcommand("beamform", "Raw channel data to MC volume and DAS image");
  std::string raw_file;
  beamform->add_option("raw", raw_file, "TNSR file (elements x samples)")->required()->check(CLI::ExistingFile);

  auto* ingest = app.add_subcommand("ingest", "Fiber-average an experimental block, then beamform");
  std::string block_file;
  ingest->add_option("block", block_file, "TNSR file (samples x elements x fibers)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train a network on a simulated dataset");
  std::string data_dir;
  std::string loss_name;
  train->add_option("--data", data_dir, "Dataset directory");
  train->add_option("--loss", loss_name, "hybrid_laplace | laplace_only | hybrid_gauss");

  auto* predict = app.add_subcommand("predict", "Monte Carlo dropout prediction");
  std::string ckpt_path;
  std::string input_path;
  std::optional<std::size_t> passes;
  std::string split = "test";
  predict->add_option("--checkpoint", ckpt_path, "Checkpoint file");
  predict->add_option("--input", input_path, "Dataset directory, directory of MC files, or one MC file");
  predict->add_option("--passes", passes, "Dropout passes K");
  predict->add_option("--split", split, "Dataset split: train | val | test | all");

  auto* calibrate = app.add_subcommand("calibrate", "Accuracy and calibration report");
  std::string predictions_dir;
  std::string truth_dir;
  bool no_truth = false;
  calibrate->add_option("--predictions", predictions_dir, "Directory of posterior bundles");
  calibrate->add_option("--data", truth_dir, "Dataset directory holding the ground truth");
  calibrate->add_flag("--no-truth", no_truth, "Report uncertainty summaries only");

  auto* confidence = app.add_subcommand("confidence", "Confident segmentation and images");
  std::string bundle;
  std::vector<double> sweep;
  bool no_sweep = false;
  confidence->add_option("bundle", bundle, "Posterior bundle")->required()->check(CLI::ExistingFile);
  confidence->add_option("--sweep", sweep, "Image SD/M thresholds (replaces the configured sweep)");
  confidence->add_flag("--no-sweep", no_sweep, "Only the configured threshold");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check for all losses");
  double tolerance = 1e-4;
  bool corrupt = false;
  gradcheck->add_option("--tolerance", tolerance, "Max relative error");
  gradcheck->add_flag("--corrupt", corrupt, "Perturb one analytic gradient (expected to fail)");

  CLI11_PARSE(app, argc, argv);

  try {
    io::RunConfig cfg = config_path.empty() ? io::RunConfig::desk() : io::load_run_config(config_path);

    if (simulate->parsed()) {
      if (count) cfg.dataset.count = *count;
      if (seed) cfg.dataset.seed = *seed;
      const fs::path dir = or_default(out, cfg.paths.dataset);
      cli::cmd_simulate(cfg, dir, jobs);
      std::cout << "wrote " << cfg.dataset.count << " samples to " << dir.string() << '\n';
    } else if (beamform->parsed()) {
      cli::cmd_beamform(cfg, raw_file, or_default(out, "."));
    } else if (ingest->parsed()) {
      cli::cmd_ingest(cfg, block_file, or_default(out, "."));
    } else if (train->parsed()) {
      if (seed) cfg.train.seed = *seed;
      if (!loss_name.empty()) {
        const auto kind = losses::parse_loss_kind(loss_name);
        if (!kind) throw cli::CommandError("unknown loss '" + loss_name + "'");
        cfg.loss = *kind;
        cfg.net.head_kind = *kind == losses::LossKind::laplace_only ? nn::HeadKind::laplace_only : nn::HeadKind::hybrid;
      }
      const fs::path ckpt = or_default(out, cfg.paths.checkpoint);
      const auto result = cli::cmd_train(cfg, or_default(data_dir, cfg.paths.dataset), ckpt, &std::cout);
      std::cout << "best epoch " << result.best.epoch << " (val " << result.best.best_val_loss << ") after "
                << result.epochs_run << " epochs; checkpoint " << ckpt.string() << '\n';
    } else if (predict->parsed()) {
      cli::PredictOptions opts;
      opts.passes = passes.value_or(cfg.predict.passes);
      opts.seed = seed.value_or(cfg.predict.seed);
      opts.split = split;
      opts.jobs = jobs;
      const auto written = cli::cmd_predict(or_default(ckpt_path, cfg.paths.checkpoint),
                                            or_default(input_path, cfg.paths.dataset), opts,
                                            or_default(out, cfg.paths.predictions));
      std::cout << "wrote " << written.size() << " posterior bundles\n";
    } else if (calibrate->parsed()) {
      const fs::path truth = no_truth ? fs::path() : fs::path(or_default(truth_dir, cfg.paths.dataset));
      const auto report = cli::cmd_calibrate(or_default(predictions_dir, cfg.paths.predictions), truth,
                                             cfg.calibration, or_default(out, cfg.paths.report), jobs);
      std::cout << report["summary"].dump(2) << '\n';
      if (report.contains("pooled")) std::cout << "pooled ACC vs Cred CC " << report["pooled"]["ACC vs Cred CC"] << '\n';
    } else if (confidence->parsed()) {
      const std::vector<double> thresholds = no_sweep ? std::vector<double>{} : (sweep.empty() ? cfg.sweep : sweep);
      const auto written = cli::cmd_confidence(bundle, cfg.confidence, thresholds, or_default(out, "confidence"));
      std::cout << "wrote " << written.size() << " files\n";
    } else if (gradcheck->parsed()) {
      const auto summary = cli::cmd_gradcheck(tolerance, seed.value_or(7), std::cout, corrupt);
      return summary.passed ? 0 : 1;
    }
  } catch (const nn::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
