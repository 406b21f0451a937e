#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "pabcnn/grid.hpp"
#include "pabcnn/phantom.hpp"

namespace pabcnn::acoustics {

using phantom::GridSpec;

/// Linear array on the z = 0 plane, centered laterally over the image grid.
struct ArrayGeometry {
  std::size_t n_elem = 32;
  double pitch_mm = 0.4;
  double fc_hz = 2.5e6;
  double fs_hz = 20.0e6;
  std::size_t n_samples = 1024;
  double c_m_s = 1540.0;
  double fractional_bandwidth = 0.7;

  void validate() const;
  /// Also checks the temporal window covers twice the grid depth.
  void validate(const GridSpec& spec) const;

  /// Lateral element position relative to the grid's left edge (mm).
  double element_x_mm(std::size_t j, const GridSpec& spec) const;

  static ArrayGeometry desk() { return {}; }
  static ArrayGeometry full_scale() { return {128, 0.1, 15.625e6, 62.5e6, 2048, 1540.0, 0.7}; }

  friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

/// Element-by-sample pressure traces.
struct RawChannelData {
  std::size_t n_elem = 0;
  std::size_t n_samples = 0;
  std::vector<double> traces;  // [n_elem][n_samples]

  double& at(std::size_t j, std::size_t s) { return traces[j * n_samples + s]; }
  double at(std::size_t j, std::size_t s) const { return traces[j * n_samples + s]; }
};

/// Per-element delayed images (network input); channels[j] is nz x nx.
struct MCVolume {
  std::size_t n_elem = 0;
  std::size_t nz = 0;
  std::size_t nx = 0;
  std::vector<double> channels;  // [n_elem][nz][nx]

  std::size_t plane() const { return nz * nx; }
  double& at(std::size_t j, std::size_t iz, std::size_t ix) {
    return channels[(j * nz + iz) * nx + ix];
  }
  double at(std::size_t j, std::size_t iz, std::size_t ix) const {
    return channels[(j * nz + iz) * nx + ix];
  }
};

struct PulseKernel {
  std::vector<double> samples;
  std::size_t center = 0;
  double envelope_sigma_s = 0.0;  // Gaussian envelope std in seconds
  double half_support_s = 0.0;
};

/// Gaussian envelope std (s) for a pulse whose spectral FWHM is bandwidth * fc.
double pulse_envelope_sigma(const ArrayGeometry& geom);
/// Continuous pulse at time t (s) relative to its peak; zero outside the 1e-3 envelope support.
double pulse_value(const ArrayGeometry& geom, double t_s);

PulseKernel synthesize_pulse(const ArrayGeometry& geom);

/// Distance (mm) from pixel center (iz, ix) to element j.
double element_distance_mm(const GridSpec& spec, const ArrayGeometry& geom, std::size_t j,
                           std::size_t iz, std::size_t ix);

RawChannelData forward_project(const RealGrid& image, const GridSpec& spec, const ArrayGeometry& geom);

constexpr double kNoiseDisabled = std::numeric_limits<double>::infinity();

RawChannelData add_noise(const RawChannelData& raw, double snr_db, std::uint64_t seed);

MCVolume mc_transform(const RawChannelData& raw, const GridSpec& spec, const ArrayGeometry& geom);

/// Signed element sum of the MC volume.
RealGrid das_reconstruct(const MCVolume& mc);
/// |DAS|, the display and metric variant.
RealGrid das_magnitude(const MCVolume& mc);

/// Averages a samples x elements x fibers block over fibers into element-major traces.
RawChannelData average_fibers(const std::vector<double>& block, std::size_t n_samples,
                              std::size_t n_elem, std::size_t n_fibers);

}  // namespace pabcnn::acoustics
