#include "pabcnn/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "pabcnn/rng.hpp"

namespace pabcnn::acoustics {

namespace {

constexpr double kEnvelopeFloor = 1e-3;

double delay_samples(double distance_mm, const ArrayGeometry& geom) {
  return distance_mm * 1e-3 / geom.c_m_s * geom.fs_hz;
}

}  // namespace

void ArrayGeometry::validate() const {
  if (n_elem == 0 || n_samples < 2) throw std::invalid_argument("ArrayGeometry: empty array");
  if (!(pitch_mm > 0.0)) throw std::invalid_argument("ArrayGeometry: pitch must be positive");
  if (!(fc_hz > 0.0) || !(fs_hz > 2.0 * fc_hz)) {
    throw std::invalid_argument("ArrayGeometry: need fs > 2 fc > 0");
  }
  if (!(c_m_s > 0.0)) throw std::invalid_argument("ArrayGeometry: speed of sound must be positive");
  if (!(fractional_bandwidth > 0.0)) {
    throw std::invalid_argument("ArrayGeometry: fractional bandwidth must be positive");
  }
}

void ArrayGeometry::validate(const GridSpec& spec) const {
  validate();
  spec.validate();
  const double window_mm = static_cast<double>(n_samples) * c_m_s / fs_hz * 1e3;
  // Farthest one-way path: an end element to the far bottom corner.
  const double lateral = std::max(std::abs(element_x_mm(0, spec)), std::abs(spec.width_mm() - element_x_mm(0, spec)));
  const double reach_mm = std::hypot(spec.depth_mm(), lateral);
  if (window_mm < reach_mm) {
    throw std::invalid_argument("ArrayGeometry: temporal window " + std::to_string(window_mm) +
                                " mm does not cover the farthest pixel at " + std::to_string(reach_mm) + " mm");
  }
}

double ArrayGeometry::element_x_mm(std::size_t j, const GridSpec& spec) const {
  return 0.5 * spec.width_mm() +
         (static_cast<double>(j) - 0.5 * static_cast<double>(n_elem - 1)) * pitch_mm;
}

double pulse_envelope_sigma(const ArrayGeometry& geom) {
  return std::sqrt(2.0 * std::numbers::ln2) / (std::numbers::pi * geom.fractional_bandwidth * geom.fc_hz);
}

double pulse_value(const ArrayGeometry& geom, double t_s) {
  const double sigma = pulse_envelope_sigma(geom);
  const double t = std::abs(t_s);
  const double envelope = std::exp(-0.5 * (t / sigma) * (t / sigma));
  if (envelope < kEnvelopeFloor) return 0.0;
  return envelope * std::cos(2.0 * std::numbers::pi * geom.fc_hz * t);
}

PulseKernel synthesize_pulse(const ArrayGeometry& geom) {
  geom.validate();
  PulseKernel k;
  k.envelope_sigma_s = pulse_envelope_sigma(geom);
  k.half_support_s = k.envelope_sigma_s * std::sqrt(-2.0 * std::log(kEnvelopeFloor));
  const auto half = static_cast<std::size_t>(std::floor(k.half_support_s * geom.fs_hz));
  k.center = half;
  k.samples.resize(2 * half + 1);
  for (std::size_t i = 0; i <= 2 * half; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(half)) / geom.fs_hz;
    k.samples[i] = pulse_value(geom, t);
  }
  return k;
}

double element_distance_mm(const GridSpec& spec, const ArrayGeometry& geom, std::size_t j,
                           std::size_t iz, std::size_t ix) {
  const double z = (static_cast<double>(iz) + 0.5) * spec.dz_mm;
  const double x = (static_cast<double>(ix) + 0.5) * spec.dx_mm;
  return std::hypot(z, x - geom.element_x_mm(j, spec));
}

RawChannelData forward_project(const RealGrid& image, const GridSpec& spec,
                               const ArrayGeometry& geom) {
  geom.validate(spec);
  if (image.rows() != spec.nz || image.cols() != spec.nx) {
    throw std::invalid_argument("forward_project: image shape does not match GridSpec");
  }
  const PulseKernel kernel = synthesize_pulse(geom);
  const double half_support = kernel.half_support_s * geom.fs_hz;

  RawChannelData raw{geom.n_elem, geom.n_samples, std::vector<double>(geom.n_elem * geom.n_samples, 0.0)};
  for (std::size_t iz = 0; iz < spec.nz; ++iz) {
    for (std::size_t ix = 0; ix < spec.nx; ++ix) {
      const double amplitude = image(iz, ix);
      if (amplitude == 0.0) continue;
      for (std::size_t j = 0; j < geom.n_elem; ++j) {
        const double delay = delay_samples(element_distance_mm(spec, geom, j, iz, ix), geom);
        const long first = std::max(0L, static_cast<long>(std::ceil(delay - half_support)));
        const long last = std::min(static_cast<long>(geom.n_samples) - 1,
                                   static_cast<long>(std::floor(delay + half_support)));
        double* trace = raw.traces.data() + j * geom.n_samples;
        for (long s = first; s <= last; ++s) {
          trace[s] += amplitude * pulse_value(geom, (static_cast<double>(s) - delay) / geom.fs_hz);
        }
      }
    }
  }
  return raw;
}

RawChannelData add_noise(const RawChannelData& raw, double snr_db, std::uint64_t seed) {
  double peak = 0.0;
  for (double v : raw.traces) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw std::invalid_argument("add_noise: all-zero input, SNR undefined");
  RawChannelData out = raw;
  if (std::isinf(snr_db) && snr_db > 0.0) return out;
  const double sigma = peak / std::pow(10.0, snr_db / 20.0);
  Rng rng(mix_seed(seed));
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.traces) v += noise(rng);
  return out;
}

MCVolume mc_transform(const RawChannelData& raw, const GridSpec& spec, const ArrayGeometry& geom) {
  geom.validate(spec);
  if (raw.n_elem != geom.n_elem || raw.n_samples != geom.n_samples ||
      raw.traces.size() != raw.n_elem * raw.n_samples) {
    throw std::invalid_argument("mc_transform: raw data shape does not match geometry");
  }
  MCVolume mc{geom.n_elem, spec.nz, spec.nx, std::vector<double>(geom.n_elem * spec.nz * spec.nx, 0.0)};
  const double last = static_cast<double>(geom.n_samples - 1);
  for (std::size_t j = 0; j < geom.n_elem; ++j) {
    const double* trace = raw.traces.data() + j * geom.n_samples;
    for (std::size_t iz = 0; iz < spec.nz; ++iz) {
      for (std::size_t ix = 0; ix < spec.nx; ++ix) {
        const double s = delay_samples(element_distance_mm(spec, geom, j, iz, ix), geom);
        if (s > last) continue;
        const auto i0 = static_cast<std::size_t>(s);
        const double frac = s - static_cast<double>(i0);
        double v = trace[i0];
        if (frac > 0.0) v = (1.0 - frac) * trace[i0] + frac * trace[i0 + 1];
        mc.at(j, iz, ix) = v;
      }
    }
  }
  return mc;
}

RealGrid das_reconstruct(const MCVolume& mc) {
  if (mc.channels.size() != mc.n_elem * mc.plane()) {
    throw std::invalid_argument("das_reconstruct: malformed MC volume");
  }
  RealGrid out(mc.nz, mc.nx, 0.0);
  for (std::size_t j = 0; j < mc.n_elem; ++j) {
    const double* ch = mc.channels.data() + j * mc.plane();
    for (std::size_t i = 0; i < mc.plane(); ++i) out[i] += ch[i];
  }
  return out;
}

RealGrid das_magnitude(const MCVolume& mc) {
  RealGrid out = das_reconstruct(mc);
  for (double& v : out.values()) v = std::abs(v);
  return out;
}

RawChannelData average_fibers(const std::vector<double>& block, std::size_t n_samples,
                              std::size_t n_elem, std::size_t n_fibers) {
  if (n_fibers == 0 || block.size() != n_samples * n_elem * n_fibers) {
    throw std::invalid_argument("average_fibers: block size does not match samples x elements x fibers");
  }
  RawChannelData raw{n_elem, n_samples, std::vector<double>(n_elem * n_samples, 0.0)};
  const double inv = 1.0 / static_cast<double>(n_fibers);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t j = 0; j < n_elem; ++j) {
      const double* fibers = block.data() + (s * n_elem + j) * n_fibers;
      double sum = 0.0;
      for (std::size_t f = 0; f < n_fibers; ++f) sum += fibers[f];
      raw.at(j, s) = sum * inv;
    }
  }
  return raw;
}

}  // namespace pabcnn::acoustics
