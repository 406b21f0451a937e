#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pabcnn/losses.hpp"
#include "pabcnn/nn/layers.hpp"
#include "pabcnn/nn/unet.hpp"

namespace pabcnn::nn {

struct GradCheckOptions {
  losses::LossKind kind = losses::LossKind::hybrid_laplace;
  double tolerance = 1e-4;
  double step = 1e-5;
  std::size_t probes_per_group = 6;
  std::uint64_t seed = 7;
  Mode mode = Mode::train;
  /// Adds a deliberate error to one analytic gradient entry (negative control).
  bool corrupt_gradient = false;
};

struct GroupError {
  std::string name;
  std::size_t probes = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  losses::LossKind kind = losses::LossKind::hybrid_laplace;
  std::size_t parameter_count = 0;
  std::size_t probes = 0;
  double max_rel_error = 0.0;
  bool passed = false;
  std::vector<GroupError> groups;
};

/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps near-zero gradients from dividing by noise.
double relative_error(double analytic, double numeric);

/// Central-difference check of the total loss (data term + L2 penalty) on a tiny U-Net with
/// frozen dropout masks, in double precision.
GradCheckReport gradient_check(const GradCheckOptions& options);

/// Smallest configuration the check runs on (depth 1, 2 base channels, 8 x 8 grid, 3 inputs).
NetConfig gradcheck_net_config(losses::LossKind kind);

}  // namespace pabcnn::nn
