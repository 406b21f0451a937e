#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pabcnn/nn/tensor.hpp"

namespace pabcnn::nn {

/// train: dropout on, batch statistics. mc_predict: dropout on, running statistics.
/// deterministic: dropout off, running statistics.
enum class Mode { train, mc_predict, deterministic };

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
  bool regularized = false;  // included in the L2 penalty
};

/// Flat trainable parameters plus non-trainable buffers (batchnorm running statistics).
struct ParamStore {
  std::vector<double> values;
  std::vector<double> grads;
  std::vector<double> buffers;
  std::vector<ParamGroup> groups;

  std::size_t allocate(std::string name, std::size_t count, bool regularized);
  std::size_t allocate_buffer(std::size_t count, double fill);
  void zero_grad();
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, std::size_t in_ch, std::size_t out_ch,
         std::size_t kernel, std::size_t stride);

  Tensor forward(const Tensor& x, const ParamStore& store);
  /// Returns d/dx (empty when need_input_grad is false); accumulates weight/bias gradients.
  Tensor backward(const Tensor& grad_out, ParamStore& store, bool need_input_grad);

  std::size_t in_channels() const { return in_ch_; }
  std::size_t out_channels() const { return out_ch_; }
  std::size_t weight_offset() const { return w_off_; }
  std::size_t bias_offset() const { return b_off_; }
  std::size_t fan_in() const { return in_ch_ * kernel_ * kernel_; }

 private:
  std::size_t in_ch_ = 0, out_ch_ = 0, kernel_ = 1, stride_ = 1, pad_ = 0;
  std::size_t w_off_ = 0, b_off_ = 0;
  std::size_t in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, batch_ = 0;
  std::vector<double> cols_;  // per-sample im2col matrices
};

class BatchNorm2d {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm2d() = default;
  BatchNorm2d(ParamStore& store, const std::string& name, std::size_t channels);

  Tensor forward(const Tensor& x, ParamStore& store, Mode mode);
  Tensor backward(const Tensor& grad_out, ParamStore& store);

 private:
  std::size_t channels_ = 0;
  std::size_t gamma_off_ = 0, beta_off_ = 0, mean_off_ = 0, var_off_ = 0;
  bool batch_stats_ = false;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double rate) : rate_(rate) {}

  /// Mask drawn from a generator seeded with `seed`; identical seeds give identical masks.
  Tensor forward(const Tensor& x, Mode mode, std::uint64_t seed);
  Tensor backward(const Tensor& grad_out) const;
  double rate() const { return rate_; }
  const std::vector<double>& mask() const { return mask_; }

 private:
  double rate_ = 0.0;
  bool active_ = false;
  std::vector<double> mask_;  // 0 or 1/(1-rate)
};

class LeakyRelu {
 public:
  LeakyRelu() = default;
  explicit LeakyRelu(double slope) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  double slope_ = 0.01;
  std::vector<unsigned char> positive_;
};

Tensor upsample_nearest2x(const Tensor& x);
Tensor upsample_nearest2x_backward(const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits a channel-concatenated gradient back into its two parts.
void split_channels(const Tensor& g, std::size_t c_first, Tensor& first, Tensor& second);

}  // namespace pabcnn::nn
