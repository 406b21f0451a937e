#pragma once

#include <cstddef>
#include <vector>

namespace pabcnn::nn {

/// Dense NCHW batch of feature maps.
struct Tensor {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

  std::size_t plane() const { return h * w; }
  std::size_t sample_size() const { return c * h * w; }
  std::size_t size() const { return data.size(); }

  double* sample(std::size_t i) { return data.data() + i * sample_size(); }
  const double* sample(std::size_t i) const { return data.data() + i * sample_size(); }
  double* channel(std::size_t i, std::size_t ch) { return sample(i) + ch * plane(); }
  const double* channel(std::size_t i, std::size_t ch) const { return sample(i) + ch * plane(); }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

}  // namespace pabcnn::nn
