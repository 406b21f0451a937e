#include "pabcnn/nn/unet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pabcnn/rng.hpp"

namespace pabcnn::nn {

std::string_view to_string(HeadKind kind) {
  return kind == HeadKind::hybrid ? "hybrid" : "laplace_only";
}

std::optional<HeadKind> parse_head_kind(std::string_view name) {
  if (name == "hybrid") return HeadKind::hybrid;
  if (name == "laplace_only") return HeadKind::laplace_only;
  return std::nullopt;
}

bool compatible(HeadKind head, losses::LossKind loss) {
  return (head == HeadKind::hybrid) == losses::is_hybrid(loss);
}

void NetConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("NetConfig: depth must be >= 1");
  if (base_channels < 1) throw std::invalid_argument("NetConfig: base_channels must be >= 1");
  if (kernel_size % 2 == 0) throw std::invalid_argument("NetConfig: kernel_size must be odd");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("NetConfig: dropout_rate must lie in [0, 1)");
  }
  if (!(l2_factor >= 0.0)) throw std::invalid_argument("NetConfig: l2_factor must be >= 0");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("NetConfig: sigma_floor must be > 0");
  if (!(leaky_slope >= 0.0)) throw std::invalid_argument("NetConfig: leaky_slope must be >= 0");
}

void NetConfig::validate_grid(std::size_t nz, std::size_t nx) const {
  const std::size_t factor = std::size_t{1} << depth;
  if (nz < factor || nx < factor || nz % factor != 0 || nx % factor != 0) {
    throw std::invalid_argument("NetConfig: depth " + std::to_string(depth) + " incompatible with grid " +
                                std::to_string(nz) + "x" + std::to_string(nx) +
                                " (both dimensions must be multiples of " + std::to_string(factor) + ")");
  }
}

UNet::UNet(const NetConfig& cfg, std::size_t input_channels) : cfg_(cfg), input_channels_(input_channels) {
  cfg_.validate();
  if (input_channels == 0) throw std::invalid_argument("UNet: input_channels must be >= 1");
  const std::size_t base = cfg_.base_channels;
  auto width = [base](std::size_t level) { return base << level; };

  encoder_.resize(cfg_.depth + 1);
  encoder_[0].push_back(make_unit("enc0.0", input_channels, width(0), 1));
  encoder_[0].push_back(make_unit("enc0.1", width(0), width(0), 1));
  for (std::size_t l = 1; l <= cfg_.depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    encoder_[l].push_back(make_unit(p + ".down", width(l - 1), width(l), 2));
    encoder_[l].push_back(make_unit(p + ".1", width(l), width(l), 1));
  }
  decoder_.resize(cfg_.depth);
  for (std::size_t l = cfg_.depth; l >= 1; --l) {
    const std::string p = "dec" + std::to_string(l);
    decoder_[l - 1].push_back(make_unit(p + ".up", width(l), width(l - 1), 1));
    decoder_[l - 1].push_back(make_unit(p + ".merge", 2 * width(l - 1), width(l - 1), 1));
  }
  head_.drop = Dropout(cfg_.dropout_rate);
  head_.conv = Conv2d(store_, "head", width(0), cfg_.output_channels(), 1, 1);
}

UNet::Unit UNet::make_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t stride) {
  Unit u;
  u.drop = Dropout(cfg_.dropout_rate);
  u.conv = Conv2d(store_, name + ".conv", in, out, cfg_.kernel_size, stride);
  u.bn = BatchNorm2d(store_, name + ".bn", out);
  u.act = LeakyRelu(cfg_.leaky_slope);
  return u;
}

void UNet::initialize(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  auto init_conv = [&](const Conv2d& conv, double gain) {
    const double bound = gain * std::sqrt(1.0 / static_cast<double>(conv.fan_in()));
    const std::size_t count = conv.out_channels() * conv.fan_in();
    for (std::size_t i = 0; i < count; ++i) store_.values[conv.weight_offset() + i] = uniform(rng, -bound, bound);
    for (std::size_t i = 0; i < conv.out_channels(); ++i) store_.values[conv.bias_offset() + i] = 0.0;
  };
  const double trunk_gain = std::sqrt(6.0);
  for (auto& level : encoder_) {
    for (auto& u : level) init_conv(u.conv, trunk_gain);
  }
  for (auto& level : decoder_) {
    for (auto& u : level) init_conv(u.conv, trunk_gain);
  }
  init_conv(head_.conv, 1.0);
}

std::size_t UNet::dropout_layer_count() const {
  return 2 * (cfg_.depth + 1) + 2 * cfg_.depth + 1;
}

Tensor UNet::unit_forward(Unit& u, const Tensor& x, Mode mode, std::uint64_t seed) {
  Tensor h = u.drop.forward(x, mode, seed);
  h = u.conv.forward(h, store_);
  h = u.bn.forward(h, store_, mode);
  return u.act.forward(h);
}

Tensor UNet::unit_backward(Unit& u, const Tensor& g, bool need_input_grad) {
  Tensor d = u.act.backward(g);
  d = u.bn.backward(d, store_);
  d = u.conv.backward(d, store_, need_input_grad);
  if (!need_input_grad) return d;
  return u.drop.backward(d);
}

Tensor UNet::forward(const Tensor& x, Mode mode, std::uint64_t seed) {
  if (x.c != input_channels_) {
    throw std::invalid_argument("UNet: expected " + std::to_string(input_channels_) +
                                " input channels, got " + std::to_string(x.c));
  }
  cfg_.validate_grid(x.h, x.w);
  std::uint64_t layer = 0;
  auto next_seed = [&] { return derive_seed(seed, layer++); };

  std::vector<Tensor> skips(cfg_.depth);
  Tensor h = x;
  for (std::size_t l = 0; l <= cfg_.depth; ++l) {
    for (auto& u : encoder_[l]) h = unit_forward(u, h, mode, next_seed());
    if (l < cfg_.depth) skips[l] = h;
  }
  skip_channels_.assign(cfg_.depth, 0);
  for (std::size_t l = cfg_.depth; l >= 1; --l) {
    auto& level = decoder_[l - 1];
    h = upsample_nearest2x(h);
    h = unit_forward(level[0], h, mode, next_seed());
    skip_channels_[l - 1] = skips[l - 1].c;
    h = concat_channels(skips[l - 1], h);
    h = unit_forward(level[1], h, mode, next_seed());
  }
  h = head_.drop.forward(h, mode, next_seed());
  return head_.conv.forward(h, store_);
}

void UNet::backward(const Tensor& grad_head) {
  Tensor g = head_.conv.backward(grad_head, store_, true);
  g = head_.drop.backward(g);

  std::vector<Tensor> skip_grads(cfg_.depth);
  for (std::size_t l = 1; l <= cfg_.depth; ++l) {
    auto& level = decoder_[l - 1];
    g = unit_backward(level[1], g, true);
    Tensor g_up;
    split_channels(g, skip_channels_[l - 1], skip_grads[l - 1], g_up);
    g_up = unit_backward(level[0], g_up, true);
    g = upsample_nearest2x_backward(g_up);
  }
  for (std::size_t l = cfg_.depth + 1; l-- > 0;) {
    if (l < cfg_.depth) {
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += skip_grads[l].data[i];
    }
    auto& level = encoder_[l];
    for (std::size_t i = level.size(); i-- > 0;) {
      const bool is_input_layer = l == 0 && i == 0;
      g = unit_backward(level[i], g, !is_input_layer);
    }
  }
}

HeadMaps head_maps(const Tensor& z, std::size_t sample, const NetConfig& cfg) {
  if (z.c != cfg.output_channels()) throw std::invalid_argument("head_maps: channel mismatch");
  HeadMaps m;
  m.nz = z.h;
  m.nx = z.w;
  const std::size_t plane = z.plane();
  std::size_t c = 0;
  if (cfg.head_kind == HeadKind::hybrid) {
    const double* z1 = z.channel(sample, c++);
    m.mu1.resize(plane);
    for (std::size_t i = 0; i < plane; ++i) m.mu1[i] = losses::logistic(z1[i]);
  }
  const double* z2 = z.channel(sample, c++);
  const double* z3 = z.channel(sample, c++);
  m.mu2.assign(z2, z2 + plane);
  m.sigma.resize(plane);
  for (std::size_t i = 0; i < plane; ++i) m.sigma[i] = losses::softplus(z3[i]) + cfg.sigma_floor;
  return m;
}

}  // namespace pabcnn::nn
