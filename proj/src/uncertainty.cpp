#include "pabcnn/uncertainty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pabcnn/rng.hpp"

namespace pabcnn::uncertainty {

std::string_view to_string(Distribution d) { return d == Distribution::laplace ? "laplace" : "gauss"; }

Distribution distribution_for(losses::LossKind kind) {
  return kind == losses::LossKind::hybrid_gauss ? Distribution::gauss : Distribution::laplace;
}

void SampleStack::validate() const {
  const std::size_t k = mu2.size();
  if (k == 0) throw std::invalid_argument("SampleStack: needs at least one pass");
  if (sigma.size() != k || (has_segmentation() && mu1.size() != k)) {
    throw std::invalid_argument("SampleStack: per-pass map counts disagree");
  }
  if (has_segmentation() != losses::is_hybrid(kind)) {
    throw std::invalid_argument("SampleStack: segmentation maps inconsistent with loss kind");
  }
  auto check = [&](const RealGrid& g) {
    if (g.rows() != nz || g.cols() != nx) throw std::invalid_argument("SampleStack: map shape mismatch");
  };
  for (std::size_t i = 0; i < k; ++i) {
    check(mu2[i]);
    check(sigma[i]);
    if (has_segmentation()) check(mu1[i]);
  }
}

std::uint64_t pass_seed(std::uint64_t seed, std::size_t k) { return derive_seed(seed, k); }

SampleStack predict_mc(const nn::Checkpoint& ckpt, const std::vector<double>& prepared, std::size_t nz,
                       std::size_t nx, std::size_t passes, std::uint64_t seed) {
  if (passes < 1) throw std::invalid_argument("predict_mc: K must be >= 1");
  const std::size_t channels = prepared.size() / (nz * nx);
  nn::validate_for_prediction(ckpt, ckpt.loss_kind, channels, nz, nx);
  if (channels * nz * nx != prepared.size()) throw std::invalid_argument("predict_mc: input size mismatch");

  nn::UNet net = nn::instantiate(ckpt);
  const nn::Tensor x = nn::make_batch({&prepared}, channels, nz, nx);
  SampleStack stack;
  stack.nz = nz;
  stack.nx = nx;
  stack.kind = ckpt.loss_kind;
  for (std::size_t k = 0; k < passes; ++k) {
    const std::uint64_t s = pass_seed(seed, k);
    const nn::Tensor z = net.forward(x, nn::Mode::mc_predict, s);
    nn::HeadMaps maps = nn::head_maps(z, 0, ckpt.net);
    if (!maps.mu1.empty()) stack.mu1.emplace_back(nz, nx, std::move(maps.mu1));
    stack.mu2.emplace_back(nz, nx, std::move(maps.mu2));
    stack.sigma.emplace_back(nz, nx, std::move(maps.sigma));
    stack.seeds.push_back(s);
  }
  return stack;
}

SampleStack predict_mc(const nn::Checkpoint& ckpt, const acoustics::MCVolume& x, std::size_t passes,
                       std::uint64_t seed) {
  return predict_mc(ckpt, nn::prepare_input(x), x.nz, x.nx, passes, seed);
}

namespace {

struct Moments {
  RealGrid mean, total, data, model;
};

// data_var(k, i) is the per-pass variance of pass k at pixel i.
template <typename DataVar>
Moments moments(const std::vector<RealGrid>& means, DataVar data_var) {
  const std::size_t k = means.size();
  const std::size_t rows = means[0].rows();
  const std::size_t cols = means[0].cols();
  const double inv_k = 1.0 / static_cast<double>(k);
  Moments m{RealGrid(rows, cols), RealGrid(rows, cols), RealGrid(rows, cols), RealGrid(rows, cols)};
  for (std::size_t i = 0; i < rows * cols; ++i) {
    double mean = 0.0;
    for (std::size_t p = 0; p < k; ++p) mean += means[p][i];
    mean *= inv_k;
    double data = 0.0;
    double spread = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      data += data_var(p, i);
      const double d = means[p][i] - mean;
      spread += d * d;
    }
    data *= inv_k;
    spread *= inv_k;
    m.mean[i] = mean;
    m.data[i] = std::sqrt(data);
    m.model[i] = std::sqrt(spread);
    m.total[i] = std::sqrt(data + spread);
  }
  return m;
}

}  // namespace

Posterior aggregate(const SampleStack& stack, Distribution distribution) {
  stack.validate();
  if (distribution != distribution_for(stack.kind)) {
    throw std::invalid_argument("aggregate: " + std::string(to_string(distribution)) +
                                " aggregation requested for a stack produced by a " +
                                std::string(losses::to_string(stack.kind)) + " network");
  }
  Posterior post;
  post.distribution = distribution;
  post.passes = stack.passes();
  post.has_segmentation = stack.has_segmentation();

  const double var_factor = distribution == Distribution::laplace ? 2.0 : 1.0;
  Moments img = moments(stack.mu2, [&](std::size_t p, std::size_t i) {
    const double s = stack.sigma[p][i];
    return var_factor * s * s;
  });
  post.img_mean = std::move(img.mean);
  post.img_unc = std::move(img.total);
  post.img_unc_data = std::move(img.data);
  post.img_unc_model = std::move(img.model);

  if (post.has_segmentation) {
    Moments seg = moments(stack.mu1, [&](std::size_t p, std::size_t i) {
      const double mu = stack.mu1[p][i];
      return mu * (1.0 - mu);
    });
    post.seg_mean = std::move(seg.mean);
    post.seg_unc = std::move(seg.total);
    post.seg_unc_data = std::move(seg.data);
    post.seg_unc_model = std::move(seg.model);
    post.final_seg = MaskGrid(stack.nz, stack.nx, 0);
    for (std::size_t i = 0; i < post.seg_mean.size(); ++i) post.final_seg[i] = post.seg_mean[i] > 0.5 ? 1 : 0;
  } else {
    post.final_seg = MaskGrid(stack.nz, stack.nx, 1);
  }

  post.img_mean_masked = post.img_mean;
  post.img_unc_masked = post.img_unc;
  for (std::size_t i = 0; i < post.final_seg.size(); ++i) {
    if (post.final_seg[i] == 0) {
      post.img_mean_masked[i] = 0.0;
      post.img_unc_masked[i] = 0.0;
    }
  }
  return post;
}

Posterior aggregate(const SampleStack& stack) { return aggregate(stack, distribution_for(stack.kind)); }

}  // namespace pabcnn::uncertainty
