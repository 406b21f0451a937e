#include "pabcnn/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pabcnn/rng.hpp"

namespace pabcnn::phantom {

void GridSpec::validate() const {
  if (nz < 8 || nx < 8) {
    throw std::invalid_argument("GridSpec: nz and nx must be >= 8");
  }
  if (!(dz_mm > 0.0) || !(dx_mm > 0.0)) {
    throw std::invalid_argument("GridSpec: pixel sizes must be positive");
  }
}

void VesselParams::validate(const GridSpec& spec) const {
  const double extent = std::min(spec.depth_mm(), spec.width_mm());
  if (!(diameter_min_mm > 0.0) || diameter_max_mm < diameter_min_mm || diameter_max_mm >= extent) {
    throw std::invalid_argument("VesselParams: diameter range [" + std::to_string(diameter_min_mm) +
                                ", " + std::to_string(diameter_max_mm) +
                                "] mm must lie inside (0, " + std::to_string(extent) + ")");
  }
  if (vessels_min < 1 || vessels_max < vessels_min) {
    throw std::invalid_argument("VesselParams: vessels-per-image range must satisfy 1 <= min <= max");
  }
  if (smoothness_rad < 0.0) {
    throw std::invalid_argument("VesselParams: smoothness must be non-negative");
  }
  if (!(fraction_min > 0.0) || fraction_max < fraction_min || fraction_max >= 1.0) {
    throw std::invalid_argument("VesselParams: fraction band must satisfy 0 < min <= max < 1");
  }
}

std::vector<VesselPath> vessel_paths(const GridSpec& spec, const VesselParams& params,
                                     std::uint64_t seed) {
  spec.validate();
  params.validate(spec);

  Rng rng(mix_seed(seed));
  std::uniform_int_distribution<int> count_dist(params.vessels_min, params.vessels_max);
  const int n_vessels = count_dist(rng);
  const double fraction = uniform(rng, params.fraction_min, params.fraction_max);
  const double pixel_budget =
      fraction * static_cast<double>(spec.nz * spec.nx) / static_cast<double>(n_vessels);
  const double step = 0.5 * std::min(spec.dz_mm, spec.dx_mm);
  const double pixel_width = std::sqrt(spec.dz_mm * spec.dx_mm);
  const double depth = spec.depth_mm();
  const double width = spec.width_mm();

  std::vector<VesselPath> paths;
  paths.reserve(static_cast<std::size_t>(n_vessels));
  for (int v = 0; v < n_vessels; ++v) {
    VesselPath path;
    path.diameter_mm = uniform(rng, params.diameter_min_mm, params.diameter_max_mm);
    path.amplitude = uniform(rng, 1.0, 10.0);
    const double stroke = std::max(path.diameter_mm, pixel_width);
    const double length = pixel_budget * spec.dz_mm * spec.dx_mm / stroke;

    double z = uniform(rng, 0.0, depth);
    double x = uniform(rng, 0.0, width);
    double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    path.points.emplace_back(z, x);
    for (double walked = step; walked <= length; walked += step) {
      heading += uniform(rng, -params.smoothness_rad, params.smoothness_rad);
      z += step * std::cos(heading);
      x += step * std::sin(heading);
      if (z < 0.0 || z >= depth || x < 0.0 || x >= width) break;
      path.points.emplace_back(z, x);
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

Phantom generate_phantom(const GridSpec& spec, const VesselParams& params, std::uint64_t seed) {
  const auto paths = vessel_paths(spec, params, seed);

  RealGrid image(spec.nz, spec.nx, 0.0);
  for (const auto& path : paths) {
    const double radius = 0.5 * path.diameter_mm;
    const auto reach_z = static_cast<long>(std::ceil(radius / spec.dz_mm));
    const auto reach_x = static_cast<long>(std::ceil(radius / spec.dx_mm));
    for (const auto& [z, x] : path.points) {
      const auto iz0 = static_cast<long>(std::floor(z / spec.dz_mm));
      const auto ix0 = static_cast<long>(std::floor(x / spec.dx_mm));
      for (long iz = iz0 - reach_z; iz <= iz0 + reach_z; ++iz) {
        if (iz < 0 || iz >= static_cast<long>(spec.nz)) continue;
        for (long ix = ix0 - reach_x; ix <= ix0 + reach_x; ++ix) {
          if (ix < 0 || ix >= static_cast<long>(spec.nx)) continue;
          const double cz = (static_cast<double>(iz) + 0.5) * spec.dz_mm;
          const double cx = (static_cast<double>(ix) + 0.5) * spec.dx_mm;
          const bool inside = (iz == iz0 && ix == ix0) || std::hypot(cz - z, cx - x) < radius;
          if (!inside) continue;
          double& px = image(static_cast<std::size_t>(iz), static_cast<std::size_t>(ix));
          px = std::max(px, path.amplitude);
        }
      }
    }
  }

  double power = 0.0;
  std::size_t support = 0;
  for (double v : image.values()) {
    if (v > 0.0) {
      power += v * v;
      ++support;
    }
  }
  // vessel_paths always emits at least the start point, so support > 0.
  const double scale = 1.0 / std::sqrt(power / static_cast<double>(support));
  MaskGrid seg(spec.nz, spec.nx, 0);
  for (std::size_t i = 0; i < image.size(); ++i) {
    image[i] *= scale;
    seg[i] = image[i] > 0.0 ? 1 : 0;
  }
  return {std::move(seg), std::move(image)};
}

double non_background_fraction(const Phantom& p) {
  std::size_t count = 0;
  for (auto s : p.segmentation.values()) count += s;
  return static_cast<double>(count) / static_cast<double>(p.segmentation.size());
}

Splits split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) {
    throw std::invalid_argument("generate_dataset: need at least 10 phantoms for three splits, got " +
                                std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0xD5u));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  const std::size_t n_val = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_val - n_test;
  Splits s;
  s.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  s.val.assign(order.begin() + static_cast<long>(n_train),
               order.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  return s;
}

Dataset generate_dataset(std::size_t n, const GridSpec& spec, const VesselParams& params,
                         std::uint64_t seed) {
  Dataset ds;
  ds.splits = split_indices(n, seed);
  ds.seed = seed;
  ds.spec = spec;
  ds.params = params;
  ds.phantoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.phantoms.push_back(generate_phantom(spec, params, derive_seed(seed, i)));
  }
  return ds;
}

}  // namespace pabcnn::phantom
