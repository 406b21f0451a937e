#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pabcnn/losses.hpp"
#include "pabcnn/nn/layers.hpp"
#include "pabcnn/nn/tensor.hpp"

namespace pabcnn::nn {

enum class HeadKind { hybrid, laplace_only };

std::string_view to_string(HeadKind kind);
std::optional<HeadKind> parse_head_kind(std::string_view name);
bool compatible(HeadKind head, losses::LossKind loss);

struct NetConfig {
  std::size_t depth = 2;
  std::size_t base_channels = 8;
  std::size_t kernel_size = 3;
  double dropout_rate = 0.1;
  double leaky_slope = 0.01;
  double l2_factor = 1e-6;
  HeadKind head_kind = HeadKind::hybrid;
  double sigma_floor = 1e-4;

  std::size_t output_channels() const { return head_kind == HeadKind::hybrid ? 3 : 2; }
  void validate() const;
  /// Throws unless every level halves cleanly and the bottleneck keeps >= 1 pixel.
  void validate_grid(std::size_t nz, std::size_t nx) const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// U-Net: encoder levels joined by stride-2 convolutions, decoder levels by nearest-neighbour
/// upsampling and skip concatenation. Every convolution is preceded by dropout; trunk
/// convolutions are followed by batch normalization and LeakyReLU. The output convolution is
/// 1x1 and emits the raw head activations.
class UNet {
 public:
  UNet(const NetConfig& cfg, std::size_t input_channels);

  const NetConfig& config() const { return cfg_; }
  std::size_t input_channels() const { return input_channels_; }
  std::size_t parameter_count() const { return store_.values.size(); }

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  /// Fan-in scaled uniform initialisation of every convolution.
  void initialize(std::uint64_t seed);

  /// Head activations (N x output_channels x H x W). Dropout layer i uses derive_seed(seed, i).
  Tensor forward(const Tensor& x, Mode mode, std::uint64_t seed);
  /// Accumulates parameter gradients for d(loss)/d(head activations).
  void backward(const Tensor& grad_head);

  std::size_t dropout_layer_count() const;

 private:
  struct Unit {
    Dropout drop;
    Conv2d conv;
    BatchNorm2d bn;
    LeakyRelu act;
  };
  struct Head {
    Dropout drop;
    Conv2d conv;
  };

  Unit make_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t stride);
  Tensor unit_forward(Unit& u, const Tensor& x, Mode mode, std::uint64_t seed);
  Tensor unit_backward(Unit& u, const Tensor& g, bool need_input_grad);

  NetConfig cfg_;
  std::size_t input_channels_;
  ParamStore store_;

  // encoder_[0] = input level; encoder_[l] for l >= 1 starts with a stride-2 unit.
  std::vector<std::vector<Unit>> encoder_;
  // decoder_[l-1] handles level l -> l-1: {upsampled conv, post-concat conv}.
  std::vector<std::vector<Unit>> decoder_;
  Head head_;

  std::vector<std::size_t> skip_channels_;
};

/// Per-sample head outputs after the domain transforms.
struct HeadMaps {
  std::size_t nz = 0, nx = 0;
  std::vector<double> mu1;    // empty for laplace_only
  std::vector<double> mu2;
  std::vector<double> sigma;
};

/// mu1 = logistic(z1), mu2 = z2, sigma = softplus(z3) + floor.
HeadMaps head_maps(const Tensor& z, std::size_t sample, const NetConfig& cfg);

}  // namespace pabcnn::nn
