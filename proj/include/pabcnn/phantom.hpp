#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pabcnn/grid.hpp"

namespace pabcnn::phantom {

/// Image grid geometry. Rows are axial (depth), columns lateral.
struct GridSpec {
  std::size_t nz = 64;
  std::size_t nx = 32;
  double dz_mm = 0.4;
  double dx_mm = 0.4;

  double depth_mm() const { return static_cast<double>(nz) * dz_mm; }
  double width_mm() const { return static_cast<double>(nx) * dx_mm; }
  void validate() const;

  static GridSpec desk() { return {}; }
  static GridSpec full_scale() { return {512, 128, 0.05, 0.1}; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct VesselParams {
  double diameter_min_mm = 0.05;
  double diameter_max_mm = 0.3;
  int vessels_min = 1;
  int vessels_max = 8;
  // Max heading change per step (radians); each step draws uniformly in [-s, s].
  double smoothness_rad = 0.3;
  // Per-image non-background fraction target, drawn uniformly from this band.
  double fraction_min = 0.04;
  double fraction_max = 0.10;

  void validate(const GridSpec& spec) const;

  friend bool operator==(const VesselParams&, const VesselParams&) = default;
};

struct Phantom {
  MaskGrid segmentation;
  RealGrid image;
};

/// Centerline of one vessel in physical coordinates (z_mm, x_mm) with its diameter.
struct VesselPath {
  std::vector<std::pair<double, double>> points;
  double diameter_mm = 0.0;
  double amplitude = 0.0;
};

/// The random-walk centerlines that generate_phantom rasterizes for the same inputs.
std::vector<VesselPath> vessel_paths(const GridSpec& spec, const VesselParams& params,
                                     std::uint64_t seed);

Phantom generate_phantom(const GridSpec& spec, const VesselParams& params, std::uint64_t seed);

double non_background_fraction(const Phantom& p);

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<Phantom> phantoms;
  Splits splits;
  std::uint64_t seed = 0;
  GridSpec spec;
  VesselParams params;
};

/// 80/10/10 split of a shuffled index set; val and test round down.
Splits split_indices(std::size_t n, std::uint64_t seed);

/// Phantom i is generated with seed derive_seed(seed, i).
Dataset generate_dataset(std::size_t n, const GridSpec& spec, const VesselParams& params,
                         std::uint64_t seed);

}  // namespace pabcnn::phantom
