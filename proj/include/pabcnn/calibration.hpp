#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pabcnn/grid.hpp"
#include "pabcnn/uncertainty.hpp"

namespace pabcnn::calibration {

/// Laplace(mu, scale sigma) cumulative distribution. Throws for sigma <= 0.
double laplace_cdf(double a, double mu, double sigma);
/// Normal(mu, sigma) cumulative distribution. Throws for sigma <= 0.
double gauss_cdf(double a, double mu, double sigma);

/// Mixture credibility of [mean - eps, mean + eps], eps = eps_factor * mean, on final_seg pixels.
struct CredibilityMap {
  RealGrid values;      // NaN where not evaluated
  RealGrid epsilon;     // interval half-width, 0 where not evaluated
  MaskGrid evaluated;
  std::size_t excluded_nonpositive = 0;  // final_seg pixels dropped because mean <= 0
};

CredibilityMap credibility_map(const uncertainty::SampleStack& stack, const uncertainty::Posterior& posterior,
                               double eps_factor = 0.2);

struct ReliabilityBin {
  double lower = 0.0, upper = 0.0;
  std::size_t count = 0;
  double cred = 0.0;  // mean credibility in the bin
  double acc = 0.0;   // fraction of bin pixels whose truth lies in the interval
};

struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;
  std::optional<double> cc;     // Pearson(Cred, ACC) over occupied bins
  std::optional<double> slope;  // least-squares slope of ACC on Cred
  std::size_t pixels = 0;
};

struct CredibilityHit {
  double credibility = 0.0;
  bool hit = false;  // truth inside [mean - eps, mean + eps]
};

std::vector<CredibilityHit> credibility_hits(const CredibilityMap& cred, const uncertainty::Posterior& posterior,
                                             const RealGrid& truth);

/// Pools (credibility, hit) pairs across images before binning.
class ReliabilityAccumulator {
 public:
  explicit ReliabilityAccumulator(std::size_t bins = 10);
  void add(const CredibilityMap& cred, const uncertainty::Posterior& posterior, const RealGrid& truth);
  void add_pixel(double credibility, bool hit);
  ReliabilityDiagram finish() const;

 private:
  std::size_t bins_;
  std::vector<double> cred_sum_;
  std::vector<double> hits_;
  std::vector<std::size_t> counts_;
};

/// Bin index in [0, bins) for credibility c in ((h-1)/H, h/H]; c <= 0 joins the first bin.
std::size_t bin_index(double c, std::size_t bins);

ReliabilityDiagram reliability_diagram(const CredibilityMap& cred, const uncertainty::Posterior& posterior,
                                       const RealGrid& truth, std::size_t bins = 10);

struct CoverageReport {
  double overall = 0.0;
  std::optional<double> band;  // empty when no pixel falls in the band
  std::size_t evaluated = 0;
  std::size_t band_count = 0;
};

/// Fraction of final_seg pixels with |truth - mean| <= 2 * total uncertainty.
CoverageReport coverage_report(const uncertainty::Posterior& posterior, const RealGrid& truth);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

double mean_squared_error(const RealGrid& a, const RealGrid& b);
/// 10 log10(peak^2 / mse); kInfinitePsnr when mse is zero.
double psnr_from_mse(double mse, double peak);
double psnr(const RealGrid& reconstruction, const RealGrid& truth, double peak);
/// Rescales g so that max |g| equals target_peak (all-zero input is returned unchanged).
RealGrid peak_match(const RealGrid& g, double target_peak);
double seg_accuracy(const MaskGrid& predicted, const MaskGrid& truth);
std::optional<double> seg_uncertainty_cc(const RealGrid& seg_unc, const MaskGrid& final_seg, const MaskGrid& truth);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace pabcnn::calibration
