#include "pabcnn/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "pabcnn/rng.hpp"

namespace pabcnn::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

}  // namespace

std::size_t ParamStore::allocate(std::string name, std::size_t count, bool regularized) {
  const std::size_t offset = values.size();
  values.resize(offset + count, 0.0);
  grads.resize(offset + count, 0.0);
  groups.push_back({std::move(name), offset, count, regularized});
  return offset;
}

std::size_t ParamStore::allocate_buffer(std::size_t count, double fill) {
  const std::size_t offset = buffers.size();
  buffers.resize(offset + count, fill);
  return offset;
}

void ParamStore::zero_grad() { std::fill(grads.begin(), grads.end(), 0.0); }

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(ParamStore& store, const std::string& name, std::size_t in_ch, std::size_t out_ch,
               std::size_t kernel, std::size_t stride)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(kernel / 2) {
  w_off_ = store.allocate(name + ".weight", out_ch * in_ch * kernel * kernel, true);
  b_off_ = store.allocate(name + ".bias", out_ch, true);
}

Tensor Conv2d::forward(const Tensor& x, const ParamStore& store) {
  if (x.c != in_ch_) {
    throw std::invalid_argument("Conv2d: expected " + std::to_string(in_ch_) + " input channels, got " +
                                std::to_string(x.c));
  }
  batch_ = x.n;
  in_h_ = x.h;
  in_w_ = x.w;
  out_h_ = (x.h + 2 * pad_ - kernel_) / stride_ + 1;
  out_w_ = (x.w + 2 * pad_ - kernel_) / stride_ + 1;
  const std::size_t rows = fan_in();
  const std::size_t cols = out_h_ * out_w_;
  cols_.assign(batch_ * rows * cols, 0.0);

  Tensor y(batch_, out_ch_, out_h_, out_w_);
  ConstMatMap weight(store.values.data() + w_off_, static_cast<long>(out_ch_), static_cast<long>(rows));
  const double* bias = store.values.data() + b_off_;
  for (std::size_t n = 0; n < batch_; ++n) {
    double* col = cols_.data() + n * rows * cols;
    const double* in = x.sample(n);
    for (std::size_t c = 0; c < in_ch_; ++c) {
      const double* plane = in + c * in_h_ * in_w_;
      for (std::size_t kh = 0; kh < kernel_; ++kh) {
        for (std::size_t kw = 0; kw < kernel_; ++kw) {
          double* row = col + ((c * kernel_ + kh) * kernel_ + kw) * cols;
          for (std::size_t oy = 0; oy < out_h_; ++oy) {
            const long iy = static_cast<long>(oy * stride_ + kh) - static_cast<long>(pad_);
            if (iy < 0 || iy >= static_cast<long>(in_h_)) continue;
            const double* src = plane + static_cast<std::size_t>(iy) * in_w_;
            double* dst = row + oy * out_w_;
            for (std::size_t ox = 0; ox < out_w_; ++ox) {
              const long ix = static_cast<long>(ox * stride_ + kw) - static_cast<long>(pad_);
              if (ix >= 0 && ix < static_cast<long>(in_w_)) dst[ox] = src[ix];
            }
          }
        }
      }
    }
    ConstMatMap col_mat(col, static_cast<long>(rows), static_cast<long>(cols));
    MatMap out(y.sample(n), static_cast<long>(out_ch_), static_cast<long>(cols));
    out.noalias() = weight * col_mat;
    for (std::size_t o = 0; o < out_ch_; ++o) out.row(static_cast<long>(o)).array() += bias[o];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, ParamStore& store, bool need_input_grad) {
  const std::size_t rows = fan_in();
  const std::size_t cols = out_h_ * out_w_;
  ConstMatMap weight(store.values.data() + w_off_, static_cast<long>(out_ch_), static_cast<long>(rows));
  MatMap d_weight(store.grads.data() + w_off_, static_cast<long>(out_ch_), static_cast<long>(rows));
  double* d_bias = store.grads.data() + b_off_;

  Tensor dx;
  if (need_input_grad) dx = Tensor(batch_, in_ch_, in_h_, in_w_);
  RowMat d_col;
  for (std::size_t n = 0; n < batch_; ++n) {
    ConstMatMap gy(grad_out.sample(n), static_cast<long>(out_ch_), static_cast<long>(cols));
    ConstMatMap col_mat(cols_.data() + n * rows * cols, static_cast<long>(rows), static_cast<long>(cols));
    d_weight.noalias() += gy * col_mat.transpose();
    for (std::size_t o = 0; o < out_ch_; ++o) d_bias[o] += gy.row(static_cast<long>(o)).sum();
    if (!need_input_grad) continue;

    d_col.noalias() = weight.transpose() * gy;
    double* out = dx.sample(n);
    for (std::size_t c = 0; c < in_ch_; ++c) {
      double* plane = out + c * in_h_ * in_w_;
      for (std::size_t kh = 0; kh < kernel_; ++kh) {
        for (std::size_t kw = 0; kw < kernel_; ++kw) {
          const double* row = d_col.data() + ((c * kernel_ + kh) * kernel_ + kw) * cols;
          for (std::size_t oy = 0; oy < out_h_; ++oy) {
            const long iy = static_cast<long>(oy * stride_ + kh) - static_cast<long>(pad_);
            if (iy < 0 || iy >= static_cast<long>(in_h_)) continue;
            double* dst = plane + static_cast<std::size_t>(iy) * in_w_;
            const double* src = row + oy * out_w_;
            for (std::size_t ox = 0; ox < out_w_; ++ox) {
              const long ix = static_cast<long>(ox * stride_ + kw) - static_cast<long>(pad_);
              if (ix >= 0 && ix < static_cast<long>(in_w_)) dst[ix] += src[ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(ParamStore& store, const std::string& name, std::size_t channels)
    : channels_(channels) {
  gamma_off_ = store.allocate(name + ".gamma", channels, false);
  beta_off_ = store.allocate(name + ".beta", channels, false);
  std::fill_n(store.values.begin() + static_cast<long>(gamma_off_), channels, 1.0);
  mean_off_ = store.allocate_buffer(channels, 0.0);
  var_off_ = store.allocate_buffer(channels, 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, ParamStore& store, Mode mode) {
  if (x.c != channels_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  batch_stats_ = mode == Mode::train;
  const std::size_t plane = x.plane();
  const double count = static_cast<double>(x.n * plane);
  xhat_ = Tensor(x.n, x.c, x.h, x.w);
  inv_std_.assign(channels_, 0.0);
  Tensor y(x.n, x.c, x.h, x.w);
  const double* gamma = store.values.data() + gamma_off_;
  const double* beta = store.values.data() + beta_off_;
  double* running_mean = store.buffers.data() + mean_off_;
  double* running_var = store.buffers.data() + var_off_;

  for (std::size_t c = 0; c < channels_; ++c) {
    double mean;
    double var;
    if (batch_stats_) {
      double sum = 0.0;
      for (std::size_t n = 0; n < x.n; ++n) {
        const double* p = x.channel(n, c);
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < x.n; ++n) {
        const double* p = x.channel(n, c);
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
      const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
      running_mean[c] = (1.0 - kMomentum) * running_mean[c] + kMomentum * mean;
      running_var[c] = (1.0 - kMomentum) * running_var[c] + kMomentum * unbiased;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + kEps);
    inv_std_[c] = inv_std;
    for (std::size_t n = 0; n < x.n; ++n) {
      const double* p = x.channel(n, c);
      double* xh = xhat_.channel(n, c);
      double* out = y.channel(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean) * inv_std;
        out[i] = gamma[c] * xh[i] + beta[c];
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, ParamStore& store) {
  const std::size_t plane = grad_out.plane();
  const double count = static_cast<double>(grad_out.n * plane);
  const double* gamma = store.values.data() + gamma_off_;
  double* d_gamma = store.grads.data() + gamma_off_;
  double* d_beta = store.grads.data() + beta_off_;
  Tensor dx(grad_out.n, grad_out.c, grad_out.h, grad_out.w);

  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < grad_out.n; ++n) {
      const double* gy = grad_out.channel(n, c);
      const double* xh = xhat_.channel(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += gy[i];
        sum_dy_xhat += gy[i] * xh[i];
      }
    }
    d_gamma[c] += sum_dy_xhat;
    d_beta[c] += sum_dy;
    const double scale = gamma[c] * inv_std_[c];
    for (std::size_t n = 0; n < grad_out.n; ++n) {
      const double* gy = grad_out.channel(n, c);
      const double* xh = xhat_.channel(n, c);
      double* out = dx.channel(n, c);
      if (batch_stats_) {
        for (std::size_t i = 0; i < plane; ++i) {
          out[i] = scale * (gy[i] - sum_dy / count - xh[i] * sum_dy_xhat / count);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) out[i] = scale * gy[i];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, Mode mode, std::uint64_t seed) {
  active_ = mode != Mode::deterministic && rate_ > 0.0;
  if (!active_) {
    mask_.clear();
    return x;
  }
  const double keep = 1.0 - rate_;
  const double scale = 1.0 / keep;
  // rng() < threshold with probability keep; keep < 1 so the product is below 2^64.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(keep, 64));
  Rng rng(seed);
  mask_.resize(x.size());
  Tensor y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng() < threshold ? scale : 0.0;
    y.data[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) const {
  if (!active_) return grad_out;
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
  return dx;
}

// ---------------------------------------------------------------------------
// LeakyRelu

Tensor LeakyRelu::forward(const Tensor& x) {
  Tensor y = x;
  positive_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    positive_[i] = x.data[i] > 0.0;
    if (!positive_[i]) y.data[i] *= slope_;
  }
  return y;
}

Tensor LeakyRelu::backward(const Tensor& grad_out) const {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!positive_[i]) dx.data[i] *= slope_;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Resampling and concatenation

Tensor upsample_nearest2x(const Tensor& x) {
  Tensor y(x.n, x.c, 2 * x.h, 2 * x.w);
  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t c = 0; c < x.c; ++c) {
      const double* src = x.channel(n, c);
      double* dst = y.channel(n, c);
      for (std::size_t oy = 0; oy < y.h; ++oy) {
        for (std::size_t ox = 0; ox < y.w; ++ox) dst[oy * y.w + ox] = src[(oy / 2) * x.w + ox / 2];
      }
    }
  }
  return y;
}

Tensor upsample_nearest2x_backward(const Tensor& grad_out) {
  Tensor dx(grad_out.n, grad_out.c, grad_out.h / 2, grad_out.w / 2);
  for (std::size_t n = 0; n < grad_out.n; ++n) {
    for (std::size_t c = 0; c < grad_out.c; ++c) {
      const double* src = grad_out.channel(n, c);
      double* dst = dx.channel(n, c);
      for (std::size_t oy = 0; oy < grad_out.h; ++oy) {
        for (std::size_t ox = 0; ox < grad_out.w; ++ox) dst[(oy / 2) * dx.w + ox / 2] += src[oy * grad_out.w + ox];
      }
    }
  }
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw std::invalid_argument("concat_channels: shape mismatch");
  Tensor y(a.n, a.c + b.c, a.h, a.w);
  for (std::size_t n = 0; n < a.n; ++n) {
    std::copy(a.sample(n), a.sample(n) + a.sample_size(), y.sample(n));
    std::copy(b.sample(n), b.sample(n) + b.sample_size(), y.sample(n) + a.sample_size());
  }
  return y;
}

void split_channels(const Tensor& g, std::size_t c_first, Tensor& first, Tensor& second) {
  first = Tensor(g.n, c_first, g.h, g.w);
  second = Tensor(g.n, g.c - c_first, g.h, g.w);
  for (std::size_t n = 0; n < g.n; ++n) {
    std::copy(g.sample(n), g.sample(n) + first.sample_size(), first.sample(n));
    std::copy(g.sample(n) + first.sample_size(), g.sample(n) + g.sample_size(), second.sample(n));
  }
}

}  // namespace pabcnn::nn
