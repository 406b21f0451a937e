#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/io/config.hpp"
#include "pabcnn/io/tnsr.hpp"
#include "pabcnn/nn/model.hpp"
#include "pabcnn/phantom.hpp"
#include "pabcnn/uncertainty.hpp"

namespace pabcnn::io {

// Simulated datasets --------------------------------------------------------

struct SimulatedSample {
  phantom::Phantom phantom;
  acoustics::RawChannelData raw;
  acoustics::MCVolume mc;
  double snr_db = 0.0;
};

struct SampleRecord {
  std::size_t index = 0;
  std::string file;
  double snr_db = 0.0;
  std::uint64_t noise_seed = 0;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  phantom::GridSpec grid;
  acoustics::ArrayGeometry geometry;
  phantom::VesselParams phantom;
  double snr_min_db = 0.0;
  double snr_max_db = 0.0;
  phantom::Splits splits;
  std::vector<SampleRecord> samples;

  std::size_t count() const { return samples.size(); }
};

inline constexpr const char* kManifestName = "manifest.json";

std::string sample_file_name(std::size_t index);

/// Per-sample SNR and noise seed; both depend only on (seed, index).
double sample_snr_db(const DatasetConfig& cfg, std::size_t index);
std::uint64_t sample_noise_seed(std::uint64_t seed, std::size_t index);

DatasetManifest plan_dataset(const RunConfig& cfg);
SimulatedSample simulate_sample(const DatasetManifest& manifest, std::size_t index);

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Bundle maps: segmentation (u8), image (f64), raw (f32), mc (f32).
std::vector<NamedArray> sample_maps(const SimulatedSample& s);
void write_sample(const std::filesystem::path& dir, const SampleRecord& rec, const SimulatedSample& s);
SimulatedSample read_sample(const std::filesystem::path& dir, const DatasetManifest& m, std::size_t index);

/// Throws ConfigError when the dataset was simulated on a different grid or array.
void check_compatible(const DatasetManifest& m, const RunConfig& cfg);

nn::TrainingSet load_training_set(const std::filesystem::path& dir, const DatasetManifest& m);

// Channel data and MC volumes as standalone maps ---------------------------

NamedArray from_raw(std::string name, const acoustics::RawChannelData& raw, Dtype dtype = Dtype::f64);
acoustics::RawChannelData to_raw(const NamedArray& a);
NamedArray from_mc(std::string name, const acoustics::MCVolume& mc, Dtype dtype = Dtype::f64);
acoustics::MCVolume to_mc(const NamedArray& a);

// Posterior bundles ---------------------------------------------------------

struct StoredPosterior {
  uncertainty::Posterior posterior;
  uncertainty::SampleStack stack;
  nlohmann::json meta;  // passes, loss kind, seeds, source
};

/// Writes `<path>` (TNSR bundle of every posterior and per-pass map) and `<path>.json`.
void write_posterior(const std::filesystem::path& path, const uncertainty::Posterior& post,
                     const uncertainty::SampleStack& stack, nlohmann::json source = {});
StoredPosterior read_posterior(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& bundle);

}  // namespace pabcnn::io
