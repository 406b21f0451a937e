#pragma once

#include <limits>
#include <vector>

#include "pabcnn/grid.hpp"
#include "pabcnn/uncertainty.hpp"

namespace pabcnn::confidence {

struct ConfidenceParams {
  double soft_threshold = 0.05;
  double seg_rel_threshold = 1.0;   // retained when SD/M < threshold
  double img_rel_threshold = 0.9;   // retained when SD/M <= threshold
  double seg_round_threshold = 0.5;

  void validate() const;
  friend bool operator==(const ConfidenceParams&, const ConfidenceParams&) = default;
};

/// Marks pixels where SD/M is undefined (outside the support or zero mean).
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

RealGrid relative_uncertainty(const RealGrid& mean, const RealGrid& unc, const MaskGrid& support);

MaskGrid confident_segmentation(const uncertainty::Posterior& posterior, const ConfidenceParams& params);

RealGrid confident_image(const uncertainty::Posterior& posterior, const MaskGrid& conf_seg,
                         const ConfidenceParams& params);

/// One confident image per threshold (sorted descending), substituted for img_rel_threshold.
std::vector<RealGrid> threshold_sweep(const uncertainty::Posterior& posterior, const ConfidenceParams& params,
                                      const std::vector<double>& thresholds);
/// Same, on a caller-supplied confident segmentation.
std::vector<RealGrid> threshold_sweep(const uncertainty::Posterior& posterior, const MaskGrid& conf_seg,
                                      const ConfidenceParams& params, const std::vector<double>& thresholds);

}  // namespace pabcnn::confidence
