#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/rng.hpp"

using namespace pabcnn;
using namespace pabcnn::acoustics;

namespace {

const GridSpec kSpec;
const ArrayGeometry kGeom;

RealGrid point_source(std::size_t iz, std::size_t ix, double amplitude = 1.0) {
  RealGrid g(kSpec.nz, kSpec.nx, 0.0);
  g(iz, ix) = amplitude;
  return g;
}

RealGrid random_image(std::uint64_t seed, double density) {
  Rng rng(seed);
  RealGrid g(kSpec.nz, kSpec.nx, 0.0);
  for (double& v : g.values()) {
    if (uniform01(rng) < density) v = uniform(rng, 0.1, 3.0);
  }
  return g;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("pulse kernel: unit peak, even symmetry, envelope-limited support") {
  const PulseKernel k = synthesize_pulse(kGeom);
  REQUIRE(k.samples.size() == 2 * k.center + 1);
  CHECK(k.samples[k.center] == 1.0);
  for (std::size_t i = 1; i <= k.center; ++i) {
    CHECK(std::abs(k.samples[k.center + i] - k.samples[k.center - i]) <= 1e-12);
  }
  const double t_edge = static_cast<double>(k.center) / kGeom.fs_hz;
  CHECK(std::exp(-0.5 * std::pow(t_edge / k.envelope_sigma_s, 2)) >= 1e-3);
  const double t_out = static_cast<double>(k.center + 1) / kGeom.fs_hz;
  CHECK(std::exp(-0.5 * std::pow(t_out / k.envelope_sigma_s, 2)) < 1e-3);
}

TEST_CASE("pulse spectrum peaks at the center frequency") {
  for (const ArrayGeometry& geom : {ArrayGeometry::desk(), ArrayGeometry::full_scale()}) {
    const PulseKernel k = synthesize_pulse(geom);
    const std::size_t n = 2048;  // zero-padded direct DFT
    double best = -1.0;
    std::size_t best_bin = 0;
    for (std::size_t b = 0; b <= n / 2; ++b) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < k.samples.size(); ++i) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(b * i) / static_cast<double>(n);
        acc += k.samples[i] * std::complex<double>(std::cos(phase), std::sin(phase));
      }
      if (std::abs(acc) > best) {
        best = std::abs(acc);
        best_bin = b;
      }
    }
    const double bin_hz = geom.fs_hz / static_cast<double>(n);
    CHECK(std::abs(static_cast<double>(best_bin) * bin_hz - geom.fc_hz) <= bin_hz);
  }
}

TEST_CASE("forward projection: zero image gives zero traces") {
  const RawChannelData raw = forward_project(RealGrid(kSpec.nz, kSpec.nx, 0.0), kSpec, kGeom);
  for (double v : raw.traces) REQUIRE(v == 0.0);
}

TEST_CASE("forward projection: impulse beneath an element peaks at the one-way delay") {
  // Element j sits over pixel column j on the desk grid.
  for (std::size_t j : {0, 7, 16, 31}) {
    REQUIRE(std::abs(kGeom.element_x_mm(j, kSpec) - (static_cast<double>(j) + 0.5) * kSpec.dx_mm) < 1e-12);
    for (std::size_t iz : {3, 20, 63}) {
      const RawChannelData raw = forward_project(point_source(iz, j), kSpec, kGeom);
      const double z_m = (static_cast<double>(iz) + 0.5) * kSpec.dz_mm * 1e-3;
      const long expected = std::lround(z_m / kGeom.c_m_s * kGeom.fs_hz);
      long argmax = 0;
      for (std::size_t s = 0; s < raw.n_samples; ++s) {
        if (std::abs(raw.at(j, s)) > std::abs(raw.at(j, static_cast<std::size_t>(argmax)))) argmax = static_cast<long>(s);
      }
      CHECK(std::abs(argmax - expected) <= 1);
    }
  }
}

TEST_CASE("forward, MC and DAS are linear") {
  const RealGrid x = random_image(1, 0.05);
  const RealGrid y = random_image(2, 0.05);
  const double a = 1.7, b = -0.6;
  RealGrid combo(kSpec.nz, kSpec.nx, 0.0);
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x[i] + b * y[i];

  const RawChannelData fx = forward_project(x, kSpec, kGeom);
  const RawChannelData fy = forward_project(y, kSpec, kGeom);
  const RawChannelData fc = forward_project(combo, kSpec, kGeom);
  std::vector<double> expected(fx.traces.size());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = a * fx.traces[i] + b * fy.traces[i];
  CHECK(rel_diff(fc.traces, expected) < 1e-6);

  const MCVolume mx = mc_transform(fx, kSpec, kGeom);
  const MCVolume my = mc_transform(fy, kSpec, kGeom);
  RawChannelData rc = fx;
  for (std::size_t i = 0; i < rc.traces.size(); ++i) rc.traces[i] = a * fx.traces[i] + b * fy.traces[i];
  const MCVolume mc = mc_transform(rc, kSpec, kGeom);
  std::vector<double> mexp(mx.channels.size());
  for (std::size_t i = 0; i < mexp.size(); ++i) mexp[i] = a * mx.channels[i] + b * my.channels[i];
  CHECK(rel_diff(mc.channels, mexp) < 1e-6);

  const RealGrid dx = das_reconstruct(mx);
  const RealGrid dy = das_reconstruct(my);
  const RealGrid dc = das_reconstruct(mc);
  std::vector<double> dexp(dx.size());
  for (std::size_t i = 0; i < dexp.size(); ++i) dexp[i] = a * dx[i] + b * dy[i];
  CHECK(rel_diff(dc.raw(), dexp) < 1e-6);
}

TEST_CASE("MC transform of zero data is zero; DAS is the exact channel sum") {
  RawChannelData zero{kGeom.n_elem, kGeom.n_samples, std::vector<double>(kGeom.n_elem * kGeom.n_samples, 0.0)};
  for (double v : mc_transform(zero, kSpec, kGeom).channels) REQUIRE(v == 0.0);

  const MCVolume mc = mc_transform(forward_project(random_image(3, 0.1), kSpec, kGeom), kSpec, kGeom);
  const RealGrid das = das_reconstruct(mc);
  for (std::size_t i = 0; i < das.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < mc.n_elem; ++j) sum += mc.channels[j * mc.plane() + i];
    REQUIRE(das[i] == sum);
  }
  const RealGrid mag = das_magnitude(mc);
  for (std::size_t i = 0; i < das.size(); ++i) REQUIRE(mag[i] == std::abs(das[i]));
}

TEST_CASE("MC channels peak on the source's delay curve") {
  const std::size_t iz = 30, ix = 11;
  const MCVolume mc = mc_transform(forward_project(point_source(iz, ix), kSpec, kGeom), kSpec, kGeom);
  for (std::size_t j = 0; j < mc.n_elem; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < mc.plane(); ++i) {
      if (std::abs(mc.channels[j * mc.plane() + i]) > std::abs(mc.channels[j * mc.plane() + best])) best = i;
    }
    const double d_src = element_distance_mm(kSpec, kGeom, j, iz, ix);
    const double d_max = element_distance_mm(kSpec, kGeom, j, best / mc.nx, best % mc.nx);
    CHECK(std::abs(d_max - d_src) <= kSpec.dz_mm);
  }
}

TEST_CASE("DAS localizes 100 random point sources within one pixel") {
  Rng rng(2024);
  std::uniform_int_distribution<std::size_t> pz(4, kSpec.nz - 5), px(2, kSpec.nx - 3);
  int misses = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t iz = pz(rng), ix = px(rng);
    const RealGrid das = das_magnitude(mc_transform(forward_project(point_source(iz, ix), kSpec, kGeom), kSpec, kGeom));
    const std::size_t best = static_cast<std::size_t>(std::max_element(das.raw().begin(), das.raw().end()) - das.raw().begin());
    const long dz = static_cast<long>(best / kSpec.nx) - static_cast<long>(iz);
    const long dx = static_cast<long>(best % kSpec.nx) - static_cast<long>(ix);
    misses += (std::abs(dz) > 1 || std::abs(dx) > 1);
  }
  CHECK(misses == 0);
}

TEST_CASE("noise: disabled sentinel, empirical std, determinism, zero input") {
  RawChannelData raw{128, 1024, std::vector<double>(128 * 1024, 0.0)};
  raw.traces[500] = 1.0;
  CHECK(add_noise(raw, kNoiseDisabled, 1).traces == raw.traces);

  const RawChannelData noisy = add_noise(raw, 20.0, 5);
  double ss = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < raw.traces.size(); ++i) mean += noisy.traces[i] - raw.traces[i];
  mean /= static_cast<double>(raw.traces.size());
  for (std::size_t i = 0; i < raw.traces.size(); ++i) {
    const double d = noisy.traces[i] - raw.traces[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(raw.traces.size() - 1));
  CHECK(std::abs(sd - 0.1) / 0.1 < 0.02);
  CHECK(add_noise(raw, 20.0, 5).traces == noisy.traces);
  CHECK_FALSE(add_noise(raw, 20.0, 6).traces == noisy.traces);

  RawChannelData zero{4, 16, std::vector<double>(64, 0.0)};
  CHECK_THROWS_AS(add_noise(zero, 20.0, 1), std::invalid_argument);
}

TEST_CASE("geometry validation") {
  ArrayGeometry g = kGeom;
  g.fs_hz = 2.0 * g.fc_hz;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = kGeom;
  g.n_samples = 64;
  CHECK_THROWS_AS(g.validate(kSpec), std::invalid_argument);
  const ArrayGeometry full = ArrayGeometry::full_scale();
  CHECK(full.n_elem == 128);
  CHECK(full.n_samples == 2048);
  CHECK_NOTHROW(full.validate(GridSpec::full_scale()));
}

TEST_CASE("fiber averaging") {
  const std::size_t ns = 5, ne = 3, nf = 4;
  std::vector<double> block(ns * ne * nf);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t j = 0; j < ne; ++j)
      for (std::size_t f = 0; f < nf; ++f) block[(s * ne + j) * nf + f] = static_cast<double>(100 * s + 10 * j + f);
  const RawChannelData raw = average_fibers(block, ns, ne, nf);
  REQUIRE(raw.n_elem == ne);
  REQUIRE(raw.n_samples == ns);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t j = 0; j < ne; ++j) CHECK(raw.at(j, s) == doctest::Approx(100.0 * s + 10.0 * j + 1.5));
  CHECK_THROWS_AS(average_fibers(block, ns, ne, nf + 1), std::invalid_argument);
}
