#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/grid.hpp"
#include "pabcnn/losses.hpp"
#include "pabcnn/nn/model.hpp"

namespace pabcnn::uncertainty {

/// Which predictive family the image head represents.
enum class Distribution { laplace, gauss };

std::string_view to_string(Distribution d);
Distribution distribution_for(losses::LossKind kind);

/// K Monte-Carlo-dropout head outputs for one input.
struct SampleStack {
  std::size_t nz = 0, nx = 0;
  losses::LossKind kind = losses::LossKind::hybrid_laplace;
  std::vector<RealGrid> mu1;  // empty for laplace_only
  std::vector<RealGrid> mu2;
  std::vector<RealGrid> sigma;
  std::vector<std::uint64_t> seeds;

  std::size_t passes() const { return mu2.size(); }
  bool has_segmentation() const { return !mu1.empty(); }
  void validate() const;
};

/// Aggregated predictive moments with their data/model split.
struct Posterior {
  Distribution distribution = Distribution::laplace;
  std::size_t passes = 0;
  bool has_segmentation = false;

  RealGrid seg_mean, seg_unc, seg_unc_data, seg_unc_model;  // empty without segmentation
  RealGrid img_mean, img_unc, img_unc_data, img_unc_model;
  MaskGrid final_seg;                                        // all ones without segmentation
  RealGrid img_mean_masked, img_unc_masked;
};

/// Pass k uses dropout seed derive_seed(seed, k).
std::uint64_t pass_seed(std::uint64_t seed, std::size_t k);

SampleStack predict_mc(const nn::Checkpoint& ckpt, const acoustics::MCVolume& x, std::size_t passes,
                       std::uint64_t seed);
/// Same, on an input already laid out by nn::prepare_input.
SampleStack predict_mc(const nn::Checkpoint& ckpt, const std::vector<double>& prepared, std::size_t nz,
                       std::size_t nx, std::size_t passes, std::uint64_t seed);

/// Means, uncertainties (total, data, model), thresholded segmentation and masked image maps.
Posterior aggregate(const SampleStack& stack, Distribution distribution);
Posterior aggregate(const SampleStack& stack);

}  // namespace pabcnn::uncertainty
