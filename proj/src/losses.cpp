#include "pabcnn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pabcnn::losses {

namespace {

double clamp_probability(double mu1) {
  return std::clamp(mu1, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::hybrid_laplace: return "hybrid_laplace";
    case LossKind::laplace_only: return "laplace_only";
    case LossKind::hybrid_gauss: return "hybrid_gauss";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  if (name == "hybrid_laplace") return LossKind::hybrid_laplace;
  if (name == "laplace_only") return LossKind::laplace_only;
  if (name == "hybrid_gauss") return LossKind::hybrid_gauss;
  return std::nullopt;
}

int head_channels(LossKind kind) { return kind == LossKind::laplace_only ? 2 : 3; }
bool is_hybrid(LossKind kind) { return kind != LossKind::laplace_only; }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double bernoulli_nll(double y_seg, double mu1) {
  const double p = clamp_probability(mu1);
  return (y_seg - 1.0) * std::log(1.0 - p) - y_seg * std::log(p);
}

double laplace_nll(double y, double mu2, double sigma) {
  return std::abs(y - mu2) / sigma + std::log(2.0 * sigma);
}

double gauss_nll(double y, double mu2, double sigma) {
  const double r = y - mu2;
  return r * r / (2.0 * sigma * sigma) + std::log(sigma) + kHalfLog2Pi;
}

double bernoulli_cross_entropy(const RealGrid& mu1, const MaskGrid& y_seg) {
  require_same_shape(mu1, y_seg, "bernoulli_cross_entropy");
  double total = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    require_finite(mu1[i], "bernoulli_cross_entropy");
    total += bernoulli_nll(y_seg[i], mu1[i]);
  }
  return total;
}

double masked_image_nll(const RealGrid& mu2, const RealGrid& sigma, const MaskGrid& y_seg,
                        const RealGrid& y_img, bool gaussian) {
  require_same_shape(mu2, sigma, "masked_image_nll");
  require_same_shape(mu2, y_seg, "masked_image_nll");
  require_same_shape(mu2, y_img, "masked_image_nll");
  double total = 0.0;
  for (std::size_t i = 0; i < mu2.size(); ++i) {
    require_finite(mu2[i] + sigma[i] + y_img[i], "masked_image_nll");
    if (y_seg[i] == 0) continue;
    total += gaussian ? gauss_nll(y_img[i], mu2[i], sigma[i]) : laplace_nll(y_img[i], mu2[i], sigma[i]);
  }
  return total;
}

namespace {

double hybrid_loss(const RealGrid& mu1, const RealGrid& mu2, const RealGrid& sigma,
                   const MaskGrid& y_seg, const RealGrid& y_img, bool gaussian, const char* what) {
  require_same_shape(mu1, mu2, what);
  require_same_shape(mu1, sigma, what);
  require_same_shape(mu1, y_seg, what);
  require_same_shape(mu1, y_img, what);
  double total = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    require_finite(mu1[i] + mu2[i] + sigma[i] + y_img[i], what);
    const double ys = y_seg[i];
    double term = bernoulli_nll(ys, mu1[i]);
    if (y_seg[i] != 0) {
      term += gaussian ? gauss_nll(y_img[i], mu2[i], sigma[i]) : laplace_nll(y_img[i], mu2[i], sigma[i]);
    }
    total += term;
  }
  return total;
}

}  // namespace

double hybrid_laplace_loss(const RealGrid& mu1, const RealGrid& mu2, const RealGrid& sigma,
                           const MaskGrid& y_seg, const RealGrid& y_img) {
  return hybrid_loss(mu1, mu2, sigma, y_seg, y_img, false, "hybrid_laplace_loss");
}

double hybrid_gauss_loss(const RealGrid& mu1, const RealGrid& mu2, const RealGrid& sigma,
                         const MaskGrid& y_seg, const RealGrid& y_img) {
  return hybrid_loss(mu1, mu2, sigma, y_seg, y_img, true, "hybrid_gauss_loss");
}

double laplace_only_loss(const RealGrid& mu2, const RealGrid& sigma, const RealGrid& y_img) {
  require_same_shape(mu2, sigma, "laplace_only_loss");
  require_same_shape(mu2, y_img, "laplace_only_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < mu2.size(); ++i) {
    require_finite(mu2[i] + sigma[i] + y_img[i], "laplace_only_loss");
    total += laplace_nll(y_img[i], mu2[i], sigma[i]);
  }
  return total;
}

PixelGradient pixel_gradient(LossKind kind, double y_seg, double y_img, double mu1, double mu2,
                             double sigma) {
  PixelGradient g;
  const double r = y_img - mu2;
  const double weight = kind == LossKind::laplace_only ? 1.0 : y_seg;
  if (kind != LossKind::laplace_only) {
    const double p = clamp_probability(mu1);
    if (p == mu1) g.d_mu1 = (1.0 - y_seg) / (1.0 - p) - y_seg / p;
  }
  if (kind == LossKind::hybrid_gauss) {
    g.d_mu2 = weight * (-r / (sigma * sigma));
    g.d_sigma = weight * (-r * r / (sigma * sigma * sigma) + 1.0 / sigma);
  } else {
    g.d_mu2 = weight * (-sign_or_zero(r) / sigma);
    g.d_sigma = weight * (-std::abs(r) / (sigma * sigma) + 1.0 / sigma);
  }
  return g;
}

double head_loss(LossKind kind, std::span<const double> logits, std::span<const unsigned char> y_seg,
                 std::span<const double> y_img, double sigma_floor, std::span<double> grad,
                 double grad_scale) {
  const std::size_t n_pix = y_img.size();
  const auto channels = static_cast<std::size_t>(head_channels(kind));
  if (logits.size() != channels * n_pix || y_seg.size() != n_pix ||
      (!grad.empty() && grad.size() != logits.size())) {
    throw std::invalid_argument("head_loss: shape mismatch");
  }
  const bool hybrid = is_hybrid(kind);
  const bool gaussian = kind == LossKind::hybrid_gauss;
  const std::size_t c_mu = hybrid ? 1 : 0;
  const std::size_t c_sigma = c_mu + 1;
  const double* z_mu = logits.data() + c_mu * n_pix;
  const double* z_sigma = logits.data() + c_sigma * n_pix;

  double total = 0.0;
  for (std::size_t i = 0; i < n_pix; ++i) {
    const double ys = y_seg[i];
    double term = 0.0;
    if (hybrid) {
      const double z1 = logits[i];
      term += softplus(z1) - ys * z1;
      if (!grad.empty()) grad[i] += grad_scale * (logistic(z1) - ys);
    }
    const bool image_term = !hybrid || y_seg[i] != 0;
    if (image_term) {
      const double mu2 = z_mu[i];
      const double sigma = softplus(z_sigma[i]) + sigma_floor;
      const double r = y_img[i] - mu2;
      double d_mu2;
      double d_sigma;
      if (gaussian) {
        term += r * r / (2.0 * sigma * sigma) + std::log(sigma) + kHalfLog2Pi;
        d_mu2 = -r / (sigma * sigma);
        d_sigma = -r * r / (sigma * sigma * sigma) + 1.0 / sigma;
      } else {
        term += std::abs(r) / sigma + std::log(2.0 * sigma);
        d_mu2 = -sign_or_zero(r) / sigma;
        d_sigma = -std::abs(r) / (sigma * sigma) + 1.0 / sigma;
      }
      if (!grad.empty()) {
        grad[c_mu * n_pix + i] += grad_scale * d_mu2;
        grad[c_sigma * n_pix + i] += grad_scale * d_sigma * logistic(z_sigma[i]);
      }
    }
    total += term;
  }
  return total;
}

}  // namespace pabcnn::losses
