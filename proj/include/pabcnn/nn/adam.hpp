#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pabcnn::nn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

struct AdamParams {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of `params` in place.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const AdamParams& hp);

}  // namespace pabcnn::nn
