#include "pabcnn/confidence.hpp"

#include <cmath>
#include <stdexcept>

namespace pabcnn::confidence {

void ConfidenceParams::validate() const {
  if (!(soft_threshold > 0.0) || !(seg_rel_threshold > 0.0) || !(img_rel_threshold >= 0.0) ||
      !(seg_round_threshold > 0.0)) {
    throw std::invalid_argument("ConfidenceParams: thresholds must be positive");
  }
  if (!(soft_threshold < seg_round_threshold)) {
    throw std::invalid_argument("ConfidenceParams: soft_threshold must be below seg_round_threshold");
  }
}

RealGrid relative_uncertainty(const RealGrid& mean, const RealGrid& unc, const MaskGrid& support) {
  require_same_shape(mean, unc, "relative_uncertainty");
  require_same_shape(mean, support, "relative_uncertainty");
  RealGrid out(mean.rows(), mean.cols(), kUndefined);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (support[i] != 0 && mean[i] > 0.0) out[i] = unc[i] / mean[i];
  }
  return out;
}

MaskGrid confident_segmentation(const uncertainty::Posterior& posterior, const ConfidenceParams& params) {
  if (!posterior.has_segmentation) {
    throw std::invalid_argument("confident_segmentation: posterior has no segmentation maps");
  }
  const RealGrid& mean = posterior.seg_mean;
  MaskGrid support(mean.rows(), mean.cols(), 0);
  for (std::size_t i = 0; i < mean.size(); ++i) support[i] = mean[i] > params.soft_threshold ? 1 : 0;
  const RealGrid rel = relative_uncertainty(mean, posterior.seg_unc, support);
  MaskGrid out(mean.rows(), mean.cols(), 0);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    // NaN compares false, so undefined ratios are never retained.
    out[i] = (rel[i] < params.seg_rel_threshold && mean[i] > params.seg_round_threshold) ? 1 : 0;
  }
  return out;
}

RealGrid confident_image(const uncertainty::Posterior& posterior, const MaskGrid& conf_seg,
                         const ConfidenceParams& params) {
  require_same_shape(posterior.img_mean, conf_seg, "confident_image");
  const std::size_t n = conf_seg.size();
  RealGrid masked_mean(conf_seg.rows(), conf_seg.cols(), 0.0);
  RealGrid masked_unc(conf_seg.rows(), conf_seg.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    masked_mean[i] = posterior.img_mean[i] * conf_seg[i];
    masked_unc[i] = posterior.img_unc[i] * conf_seg[i];
  }
  if (std::isinf(params.img_rel_threshold)) return masked_mean;

  const RealGrid rel = relative_uncertainty(masked_mean, masked_unc, conf_seg);
  RealGrid out(conf_seg.rows(), conf_seg.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (rel[i] <= params.img_rel_threshold) out[i] = masked_mean[i];
  }
  return out;
}

std::vector<RealGrid> threshold_sweep(const uncertainty::Posterior& posterior, const MaskGrid& conf_seg,
                                      const ConfidenceParams& params, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("threshold_sweep: empty threshold list");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (thresholds[i] > thresholds[i - 1]) {
      throw std::invalid_argument("threshold_sweep: thresholds must be sorted descending");
    }
  }
  std::vector<RealGrid> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    ConfidenceParams p = params;
    p.img_rel_threshold = t;
    out.push_back(confident_image(posterior, conf_seg, p));
  }
  return out;
}

std::vector<RealGrid> threshold_sweep(const uncertainty::Posterior& posterior, const ConfidenceParams& params,
                                      const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("threshold_sweep: empty threshold list");
  return threshold_sweep(posterior, confident_segmentation(posterior, params), params, thresholds);
}

}  // namespace pabcnn::confidence
