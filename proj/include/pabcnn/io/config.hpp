#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/confidence.hpp"
#include "pabcnn/losses.hpp"
#include "pabcnn/nn/model.hpp"
#include "pabcnn/phantom.hpp"

namespace pabcnn::io {

struct DatasetConfig {
  std::size_t count = 500;
  std::uint64_t seed = 0;
  double snr_min_db = 10.0;
  double snr_max_db = 35.0;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct PredictConfig {
  std::size_t passes = 50;
  std::uint64_t seed = 0;
  friend bool operator==(const PredictConfig&, const PredictConfig&) = default;
};

struct CalibrationConfig {
  std::size_t bins = 10;
  double eps_factor = 0.2;
  bool pooled = true;
  friend bool operator==(const CalibrationConfig&, const CalibrationConfig&) = default;
};

struct PathsConfig {
  std::string dataset = "data";
  std::string checkpoint = "model.ckpt";
  std::string predictions = "predictions";
  std::string report = "report.json";
  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct RunConfig {
  phantom::GridSpec grid;
  acoustics::ArrayGeometry geometry;
  phantom::VesselParams phantom;
  DatasetConfig dataset;
  nn::NetConfig net;
  nn::TrainConfig train;
  losses::LossKind loss = losses::LossKind::hybrid_laplace;
  PredictConfig predict;
  CalibrationConfig calibration;
  confidence::ConfidenceParams confidence;
  std::vector<double> sweep = {2.0, 1.5, 0.9, 0.5};
  PathsConfig paths;

  /// Desk-scale defaults (64 x 32 grid, 32 elements).
  static RunConfig desk();
  /// 512 x 128 grid, 128-element 15.625 MHz array, 16,000 images.
  static RunConfig full_scale();

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep the values in `defaults`; unknown keys throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& defaults = RunConfig::desk());
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const phantom::GridSpec& v);
nlohmann::json to_json(const acoustics::ArrayGeometry& v);
nlohmann::json to_json(const phantom::VesselParams& v);
nlohmann::json to_json(const nn::NetConfig& v);
nlohmann::json to_json(const nn::TrainConfig& v);
nlohmann::json to_json(const confidence::ConfidenceParams& v);

phantom::GridSpec grid_from_json(const nlohmann::json& j, const phantom::GridSpec& d = {});
acoustics::ArrayGeometry geometry_from_json(const nlohmann::json& j, const acoustics::ArrayGeometry& d = {});
phantom::VesselParams vessel_from_json(const nlohmann::json& j, const phantom::VesselParams& d = {});
nn::NetConfig net_from_json(const nlohmann::json& j, const nn::NetConfig& d = {});
nn::TrainConfig train_from_json(const nlohmann::json& j, const nn::TrainConfig& d = {});
confidence::ConfidenceParams confidence_from_json(const nlohmann::json& j, const confidence::ConfidenceParams& d = {});

}  // namespace pabcnn::io
