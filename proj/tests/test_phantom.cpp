#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pabcnn/phantom.hpp"
#include "pabcnn/rng.hpp"

using namespace pabcnn;
using namespace pabcnn::phantom;

namespace {

// Brute-force rasterization: a pixel is on if some path point lies inside it or
// is strictly closer than the radius to its center.
std::size_t count_path_pixels(const GridSpec& spec, const std::vector<VesselPath>& paths) {
  std::size_t count = 0;
  for (std::size_t iz = 0; iz < spec.nz; ++iz) {
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      const double z0 = static_cast<double>(iz) * spec.dz_mm;
      const double x0 = static_cast<double>(ix) * spec.dx_mm;
      const double cz = z0 + 0.5 * spec.dz_mm;
      const double cx = x0 + 0.5 * spec.dx_mm;
      bool on = false;
      for (const auto& path : paths) {
        for (const auto& [z, x] : path.points) {
          const bool contains = z >= z0 && z < z0 + spec.dz_mm && x >= x0 && x < x0 + spec.dx_mm;
          const double d = std::sqrt((cz - z) * (cz - z) + (cx - x) * (cx - x));
          if (contains || d < 0.5 * path.diameter_mm) {
            on = true;
            break;
          }
        }
        if (on) break;
      }
      count += on;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("same inputs give bit-identical phantoms") {
  const GridSpec spec;
  const VesselParams params;
  const Phantom a = generate_phantom(spec, params, 42);
  const Phantom b = generate_phantom(spec, params, 42);
  CHECK(a.segmentation == b.segmentation);
  CHECK(a.image == b.image);
  const Phantom c = generate_phantom(spec, params, 43);
  CHECK_FALSE(a.image == c.image);
}

TEST_CASE("single one-pixel vessel: fraction equals the independently rasterized path") {
  const GridSpec spec;
  VesselParams params;
  params.vessels_min = params.vessels_max = 1;
  params.diameter_min_mm = params.diameter_max_mm = spec.dz_mm;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto paths = vessel_paths(spec, params, seed);
    REQUIRE(paths.size() == 1);
    const Phantom p = generate_phantom(spec, params, seed);
    const double expected = static_cast<double>(count_path_pixels(spec, paths)) / static_cast<double>(spec.nz * spec.nx);
    CHECK(non_background_fraction(p) == expected);
  }
}

TEST_CASE("1000-seed sweep: pixel invariants and corpus sparsity") {
  const GridSpec spec;
  const VesselParams params;
  double fraction_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Phantom p = generate_phantom(spec, params, derive_seed(7, seed));
    double lo = INFINITY, hi = 0.0, power = 0.0;
    std::size_t support = 0;
    bool indicator_ok = true;
    for (std::size_t i = 0; i < p.image.size(); ++i) {
      const double v = p.image[i];
      indicator_ok &= (p.segmentation[i] == 1) == (v > 0.0);
      if (v > 0.0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        power += v * v;
        ++support;
      }
    }
    REQUIRE(indicator_ok);
    REQUIRE(support > 0);
    REQUIRE(hi / lo <= 10.0 + 1e-12);
    REQUIRE(std::abs(power / static_cast<double>(support) - 1.0) <= 1e-6);
    fraction_sum += non_background_fraction(p);
  }
  const double mean_fraction = fraction_sum / 1000.0;
  CHECK(mean_fraction >= 0.02);
  CHECK(mean_fraction <= 0.15);
}

TEST_CASE("full-scale preset sparsity is near the reference corpus") {
  const GridSpec spec = GridSpec::full_scale();
  const VesselParams params;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) sum += non_background_fraction(generate_phantom(spec, params, seed));
  const double mean = sum / 20.0;
  MESSAGE("full-scale mean non-background fraction " << mean);
  CHECK(mean > 0.03);
  CHECK(mean < 0.11);
}

TEST_CASE("diameter range must fit inside the grid") {
  GridSpec spec;
  VesselParams params;
  params.diameter_max_mm = std::min(spec.depth_mm(), spec.width_mm());
  CHECK_THROWS_AS(generate_phantom(spec, params, 1), std::invalid_argument);
  params = VesselParams{};
  params.vessels_min = 0;
  CHECK_THROWS_AS(generate_phantom(spec, params, 1), std::invalid_argument);
  spec.nz = 4;
  CHECK_THROWS_AS(generate_phantom(spec, VesselParams{}, 1), std::invalid_argument);
}

TEST_CASE("split sizes") {
  auto sizes = [](std::size_t n) {
    const Splits s = split_indices(n, 3);
    return std::array<std::size_t, 3>{s.train.size(), s.val.size(), s.test.size()};
  };
  CHECK(sizes(16000) == std::array<std::size_t, 3>{12800, 1600, 1600});
  CHECK(sizes(10) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(sizes(500) == std::array<std::size_t, 3>{400, 50, 50});
  CHECK(sizes(19) == std::array<std::size_t, 3>{17, 1, 1});
  CHECK_THROWS_AS(split_indices(9, 3), std::invalid_argument);
}

TEST_CASE("splits partition the index set and are deterministic") {
  const Splits a = split_indices(1000, 11);
  const Splits b = split_indices(1000, 11);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  std::set<std::size_t> all;
  for (const auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
  CHECK(all.size() == 1000);
  CHECK(*all.rbegin() == 999);
  const Splits c = split_indices(1000, 12);
  CHECK_FALSE(a.test == c.test);
}

TEST_CASE("dataset phantom i is generated from derive_seed(seed, i)") {
  const GridSpec spec;
  const VesselParams params;
  const Dataset ds = generate_dataset(12, spec, params, 99);
  REQUIRE(ds.phantoms.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(ds.phantoms[i].image == generate_phantom(spec, params, derive_seed(99, i)).image);
  }
  CHECK_THROWS_AS(generate_dataset(9, spec, params, 99), std::invalid_argument);
}
