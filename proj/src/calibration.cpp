#include "pabcnn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pabcnn::calibration {

double laplace_cdf(double a, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("laplace_cdf: sigma must be > 0");
  const double z = (a - mu) / sigma;
  if (z < 0.0) return 0.5 * std::exp(z);
  return 1.0 - 0.5 * std::exp(-z);
}

double gauss_cdf(double a, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gauss_cdf: sigma must be > 0");
  return 0.5 * std::erfc(-(a - mu) / (sigma * std::sqrt(2.0)));
}

CredibilityMap credibility_map(const uncertainty::SampleStack& stack, const uncertainty::Posterior& posterior,
                               double eps_factor) {
  stack.validate();
  require_same_shape(stack.mu2[0], posterior.img_mean, "credibility_map");
  if (!(eps_factor > 0.0)) throw std::invalid_argument("credibility_map: eps_factor must be > 0");
  const bool laplace = posterior.distribution == uncertainty::Distribution::laplace;
  auto cdf = [laplace](double a, double mu, double s) { return laplace ? laplace_cdf(a, mu, s) : gauss_cdf(a, mu, s); };

  const std::size_t rows = posterior.img_mean.rows();
  const std::size_t cols = posterior.img_mean.cols();
  CredibilityMap out{RealGrid(rows, cols, std::numeric_limits<double>::quiet_NaN()), RealGrid(rows, cols, 0.0),
                     MaskGrid(rows, cols, 0), 0};
  const double inv_k = 1.0 / static_cast<double>(stack.passes());
  for (std::size_t i = 0; i < posterior.img_mean.size(); ++i) {
    if (posterior.final_seg[i] == 0) continue;
    const double mean = posterior.img_mean[i];
    if (!(mean > 0.0)) {
      ++out.excluded_nonpositive;
      continue;
    }
    const double eps = eps_factor * mean;
    double c = 0.0;
    for (std::size_t k = 0; k < stack.passes(); ++k) {
      const double mu = stack.mu2[k][i];
      const double s = stack.sigma[k][i];
      c += cdf(mean + eps, mu, s) - cdf(mean - eps, mu, s);
    }
    out.values[i] = c * inv_k;
    out.epsilon[i] = eps;
    out.evaluated[i] = 1;
  }
  return out;
}

std::size_t bin_index(double c, std::size_t bins) {
  const double scaled = std::ceil(c * static_cast<double>(bins));
  if (!(scaled >= 1.0)) return 0;
  return std::min(bins, static_cast<std::size_t>(scaled)) - 1;
}

ReliabilityAccumulator::ReliabilityAccumulator(std::size_t bins)
    : bins_(bins), cred_sum_(bins, 0.0), hits_(bins, 0.0), counts_(bins, 0) {
  if (bins == 0) throw std::invalid_argument("ReliabilityAccumulator: need at least one bin");
}

void ReliabilityAccumulator::add_pixel(double credibility, bool hit) {
  const std::size_t b = bin_index(credibility, bins_);
  cred_sum_[b] += credibility;
  hits_[b] += hit ? 1.0 : 0.0;
  ++counts_[b];
}

std::vector<CredibilityHit> credibility_hits(const CredibilityMap& cred, const uncertainty::Posterior& posterior,
                                             const RealGrid& truth) {
  require_same_shape(cred.values, truth, "reliability_diagram");
  require_same_shape(posterior.img_mean, truth, "reliability_diagram");
  std::vector<CredibilityHit> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (cred.evaluated[i] == 0) continue;
    out.push_back({cred.values[i], std::abs(truth[i] - posterior.img_mean[i]) <= cred.epsilon[i]});
  }
  return out;
}

void ReliabilityAccumulator::add(const CredibilityMap& cred, const uncertainty::Posterior& posterior,
                                 const RealGrid& truth) {
  for (const auto& h : credibility_hits(cred, posterior, truth)) add_pixel(h.credibility, h.hit);
}

ReliabilityDiagram ReliabilityAccumulator::finish() const {
  ReliabilityDiagram d;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t b = 0; b < bins_; ++b) {
    ReliabilityBin bin;
    bin.lower = static_cast<double>(b) / static_cast<double>(bins_);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(bins_);
    bin.count = counts_[b];
    if (bin.count > 0) {
      bin.cred = cred_sum_[b] / static_cast<double>(bin.count);
      bin.acc = hits_[b] / static_cast<double>(bin.count);
      xs.push_back(bin.cred);
      ys.push_back(bin.acc);
    }
    d.pixels += bin.count;
    d.bins.push_back(bin);
  }
  if (xs.size() >= 2) {
    d.cc = pearson(xs, ys);
    d.slope = ols_slope(xs, ys);
  }
  return d;
}

ReliabilityDiagram reliability_diagram(const CredibilityMap& cred, const uncertainty::Posterior& posterior,
                                       const RealGrid& truth, std::size_t bins) {
  ReliabilityAccumulator acc(bins);
  acc.add(cred, posterior, truth);
  return acc.finish();
}

CoverageReport coverage_report(const uncertainty::Posterior& posterior, const RealGrid& truth) {
  require_same_shape(posterior.img_mean, truth, "coverage_report");
  double max_two_sigma = 0.0;
  std::size_t evaluated = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (posterior.final_seg[i] == 0) continue;
    const double two_sigma = 2.0 * posterior.img_unc[i];
    max_two_sigma = std::max(max_two_sigma, two_sigma);
    ++evaluated;
    if (std::abs(truth[i] - posterior.img_mean[i]) <= two_sigma) ++covered;
  }
  if (evaluated == 0) throw std::invalid_argument("coverage_report: no final_seg pixels to evaluate");

  CoverageReport r;
  r.evaluated = evaluated;
  r.overall = static_cast<double>(covered) / static_cast<double>(evaluated);
  const double centre = 0.5 * max_two_sigma;
  std::size_t band_covered = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (posterior.final_seg[i] == 0) continue;
    const double two_sigma = 2.0 * posterior.img_unc[i];
    if (two_sigma < 0.95 * centre || two_sigma > 1.05 * centre) continue;
    ++r.band_count;
    if (std::abs(truth[i] - posterior.img_mean[i]) <= two_sigma) ++band_covered;
  }
  if (r.band_count > 0) r.band = static_cast<double>(band_covered) / static_cast<double>(r.band_count);
  return r;
}

double mean_squared_error(const RealGrid& a, const RealGrid& b) {
  require_same_shape(a, b, "mean_squared_error");
  if (a.size() == 0) throw std::invalid_argument("mean_squared_error: empty grid");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  return sse / static_cast<double>(a.size());
}

double psnr_from_mse(double mse, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const RealGrid& reconstruction, const RealGrid& truth, double peak) {
  require_same_shape(reconstruction, truth, "psnr");
  return psnr_from_mse(mean_squared_error(reconstruction, truth), peak);
}

RealGrid peak_match(const RealGrid& g, double target_peak) {
  double peak = 0.0;
  for (double v : g.values()) peak = std::max(peak, std::abs(v));
  RealGrid out = g;
  if (peak > 0.0) {
    for (double& v : out.values()) v *= target_peak / peak;
  }
  return out;
}

double seg_accuracy(const MaskGrid& predicted, const MaskGrid& truth) {
  require_same_shape(predicted, truth, "seg_accuracy");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) agree += (predicted[i] != 0) == (truth[i] != 0);
  return static_cast<double>(agree) / static_cast<double>(truth.size());
}

std::optional<double> seg_uncertainty_cc(const RealGrid& seg_unc, const MaskGrid& final_seg, const MaskGrid& truth) {
  require_same_shape(seg_unc, final_seg, "seg_uncertainty_cc");
  require_same_shape(seg_unc, truth, "seg_uncertainty_cc");
  std::vector<double> err(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) err[i] = (final_seg[i] != 0) != (truth[i] != 0) ? 1.0 : 0.0;
  return pearson(seg_unc.values(), err);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_slope: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace pabcnn::calibration
