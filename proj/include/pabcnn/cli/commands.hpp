#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "pabcnn/io/config.hpp"
#include "pabcnn/nn/gradcheck.hpp"
#include "pabcnn/nn/model.hpp"

namespace pabcnn::cli {

namespace fs = std::filesystem;

/// User-facing failure; the CLI prints the message and exits nonzero.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Writes every phantom/raw/MC triple plus manifest.json. Returns the manifest path.
fs::path cmd_simulate(const io::RunConfig& cfg, const fs::path& out_dir, std::size_t jobs = 1);

/// Raw channel data (elements x samples) to mc.tnsr, das.tnsr and das.pgm.
void cmd_beamform(const io::RunConfig& cfg, const fs::path& raw_file, const fs::path& out_dir);

/// Experimental block (samples x elements x fibers): fiber average, then as cmd_beamform.
/// The averaged traces are also written as raw.tnsr.
void cmd_ingest(const io::RunConfig& cfg, const fs::path& block_file, const fs::path& out_dir);

/// Trains on the dataset's train/val splits; writes the best checkpoint and `<ckpt>.log.csv`.
nn::TrainResult cmd_train(const io::RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_ckpt,
                          std::ostream* progress = nullptr);

struct PredictOptions {
  std::size_t passes = 50;
  std::uint64_t seed = 0;
  std::string split = "test";  // dataset inputs only: train | val | test | all
  std::size_t jobs = 1;
};

/// Input is a dataset directory, a directory of MC files, or one MC file.
/// Writes one posterior bundle per input and predictions.json; returns the bundle paths.
std::vector<fs::path> cmd_predict(const fs::path& ckpt_path, const fs::path& input, const PredictOptions& opts,
                                  const fs::path& out_dir);

/// Per-image and pooled metrics. Without ground truth the report holds uncertainty summaries only
/// and "ground_truth" is false. Writes JSON to out_report and per-image CSV beside it.
nlohmann::json cmd_calibrate(const fs::path& posterior_dir, const fs::path& dataset_dir,
                             const io::CalibrationConfig& cfg, const fs::path& out_report,
                             std::size_t jobs = 1);

/// Confident segmentation and images (configured threshold plus each sweep threshold) as TNSR and PGM.
std::vector<fs::path> cmd_confidence(const fs::path& bundle, const confidence::ConfidenceParams& params,
                                     const std::vector<double>& sweep, const fs::path& out_dir);

struct GradcheckSummary {
  bool passed = true;
  std::vector<nn::GradCheckReport> reports;
};

GradcheckSummary cmd_gradcheck(double tolerance, std::uint64_t seed, std::ostream& out,
                               bool corrupt_gradient = false);

}  // namespace pabcnn::cli
