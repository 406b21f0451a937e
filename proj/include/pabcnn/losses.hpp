#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pabcnn/grid.hpp"

namespace pabcnn::losses {

enum class LossKind { hybrid_laplace, laplace_only, hybrid_gauss };

std::string_view to_string(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);
/// Head channels the loss consumes: 3 for hybrid kinds, 2 for laplace_only.
int head_channels(LossKind kind);
bool is_hybrid(LossKind kind);

inline constexpr double kProbabilityClamp = 1e-7;

// Per-pixel terms. sigma is the Laplace scale / Gaussian std.
double bernoulli_nll(double y_seg, double mu1);
double laplace_nll(double y, double mu2, double sigma);
double gauss_nll(double y, double mu2, double sigma);

// Grid losses: pixel sums in row-major order.
double hybrid_laplace_loss(const RealGrid& mu1, const RealGrid& mu2, const RealGrid& sigma,
                           const MaskGrid& y_seg, const RealGrid& y_img);
double laplace_only_loss(const RealGrid& mu2, const RealGrid& sigma, const RealGrid& y_img);
double hybrid_gauss_loss(const RealGrid& mu1, const RealGrid& mu2, const RealGrid& sigma,
                         const MaskGrid& y_seg, const RealGrid& y_img);
double bernoulli_cross_entropy(const RealGrid& mu1, const MaskGrid& y_seg);
/// Image NLL restricted to y_seg = 1 pixels; gaussian selects the Gaussian term.
double masked_image_nll(const RealGrid& mu2, const RealGrid& sigma, const MaskGrid& y_seg,
                        const RealGrid& y_img, bool gaussian);

/// Derivatives of one pixel's loss with respect to (mu1, mu2, sigma).
struct PixelGradient {
  double d_mu1 = 0.0;
  double d_mu2 = 0.0;
  double d_sigma = 0.0;
};

/// Subgradient of |y - mu2| taken as 0 at equality.
PixelGradient pixel_gradient(LossKind kind, double y_seg, double y_img, double mu1, double mu2,
                             double sigma);

/// Loss on raw head activations for one sample, as used in training.
///
/// Channel layout of `logits`: hybrid kinds (z1, z2, z3), laplace_only (z2, z3), each channel a
/// contiguous pixel plane. mu1 = logistic(z1), mu2 = z2, sigma = softplus(z3) + sigma_floor.
/// The Bernoulli term is evaluated as softplus(z1) - y_seg * z1, which needs no clamping.
/// Adds grad_scale * d(loss)/d(logits) into `grad` unless it is empty; returns the pixel sum.
double head_loss(LossKind kind, std::span<const double> logits, std::span<const unsigned char> y_seg,
                 std::span<const double> y_img, double sigma_floor, std::span<double> grad,
                 double grad_scale);

double logistic(double z);
double softplus(double z);

}  // namespace pabcnn::losses
