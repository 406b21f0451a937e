#include "pabcnn/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pabcnn/nn/model.hpp"
#include "pabcnn/rng.hpp"

namespace pabcnn::nn {

namespace {

constexpr std::size_t kBatch = 2;
constexpr std::size_t kSide = 8;
constexpr std::size_t kInputs = 3;

struct Problem {
  Tensor x;
  std::vector<MaskGrid> seg;
  std::vector<RealGrid> img;
};

Problem make_problem(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  Problem p;
  p.x = Tensor(kBatch, kInputs, kSide, kSide);
  for (double& v : p.x.data) v = uniform(rng, -1.0, 1.0);
  for (std::size_t n = 0; n < kBatch; ++n) {
    MaskGrid seg(kSide, kSide, 0);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      seg[i] = uniform01(rng) < 0.4 ? 1 : 0;
    }
    p.seg.push_back(std::move(seg));
    p.img.emplace_back(kSide, kSide, 0.0);
  }
  return p;
}

double total_loss(UNet& net, const Problem& p, losses::LossKind kind, Mode mode, std::uint64_t mask_seed,
                  bool with_grad) {
  const Tensor z = net.forward(p.x, mode, mask_seed);
  Tensor grad(z.n, z.c, z.h, z.w);
  // Per-pixel mean keeps the loss O(1), so central-difference round-off stays well below the tolerance.
  const double scale = 1.0 / static_cast<double>(z.n * z.h * z.w);
  double loss = 0.0;
  for (std::size_t n = 0; n < z.n; ++n) {
    std::span<double> g;
    if (with_grad) g = std::span<double>(grad.sample(n), grad.sample_size());
    loss += scale * losses::head_loss(kind, std::span<const double>(z.sample(n), z.sample_size()), p.seg[n].values(),
                                      p.img[n].values(), net.config().sigma_floor, g, scale);
  }
  auto& store = net.store();
  const double l2 = net.config().l2_factor;
  for (const auto& group : store.groups) {
    if (!group.regularized) continue;
    for (std::size_t i = group.offset; i < group.offset + group.count; ++i) {
      loss += l2 * store.values[i] * store.values[i];
      if (with_grad) store.grads[i] += 2.0 * l2 * store.values[i];
    }
  }
  if (with_grad) net.backward(grad);
  return loss;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

NetConfig gradcheck_net_config(losses::LossKind kind) {
  NetConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 2;
  cfg.dropout_rate = 0.1;
  cfg.l2_factor = 1e-3;
  cfg.head_kind = losses::is_hybrid(kind) ? HeadKind::hybrid : HeadKind::laplace_only;
  return cfg;
}

GradCheckReport gradient_check(const GradCheckOptions& options) {
  const NetConfig cfg = gradcheck_net_config(options.kind);
  UNet net(cfg, kInputs);
  net.initialize(options.seed);
  // Non-trivial batchnorm affine parameters and running statistics.
  Rng rng(derive_seed(options.seed, 1));
  for (const auto& group : net.store().groups) {
    if (group.regularized) continue;
    for (std::size_t i = group.offset; i < group.offset + group.count; ++i) {
      net.store().values[i] += uniform(rng, -0.3, 0.3);
    }
  }
  for (const auto& group : net.store().groups) {
    if (!group.name.ends_with(".bias")) continue;
    for (std::size_t i = group.offset; i < group.offset + group.count; ++i) {
      net.store().values[i] += uniform(rng, -0.1, 0.1);
    }
  }
  for (std::size_t i = 0; i < net.store().buffers.size(); ++i) {
    net.store().buffers[i] = (i % 2 == 0) ? uniform(rng, -0.2, 0.2) : uniform(rng, 0.5, 1.5);
  }
  Problem problem = make_problem(derive_seed(options.seed, 2));
  const std::uint64_t mask_seed = derive_seed(options.seed, 3);
  // Keep image targets at least 0.2 from the predicted mean so no probe crosses the |y - mu| kink.
  const Tensor z0 = net.forward(problem.x, options.mode, mask_seed);
  for (std::size_t n = 0; n < kBatch; ++n) {
    const HeadMaps head = head_maps(z0, n, cfg);
    for (std::size_t i = 0; i < head.mu2.size(); ++i) {
      const double offset = uniform(rng, 0.2, 1.0);
      problem.img[n][i] = head.mu2[i] + (uniform01(rng) < 0.5 ? -offset : offset);
    }
  }

  net.store().zero_grad();
  total_loss(net, problem, options.kind, options.mode, mask_seed, true);
  std::vector<double> analytic = net.store().grads;
  if (options.corrupt_gradient && !analytic.empty()) analytic[analytic.size() / 2] += 0.5 + std::abs(analytic[analytic.size() / 2]);

  GradCheckReport report;
  report.kind = options.kind;
  report.parameter_count = net.parameter_count();
  auto& values = net.store().values;
  for (const auto& group : net.store().groups) {
    GroupError ge;
    ge.name = group.name;
    std::vector<std::size_t> picks(group.count);
    for (std::size_t i = 0; i < group.count; ++i) picks[i] = group.offset + i;
    if (picks.size() > options.probes_per_group) {
      for (std::size_t i = 0; i < options.probes_per_group; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, picks.size() - 1);
        std::swap(picks[i], picks[pick(rng)]);
      }
      picks.resize(options.probes_per_group);
    }
    if (options.corrupt_gradient) {
      const std::size_t corrupted = analytic.size() / 2;
      if (corrupted >= group.offset && corrupted < group.offset + group.count) picks.push_back(corrupted);
    }
    for (std::size_t idx : picks) {
      const double saved = values[idx];
      values[idx] = saved + options.step;
      const double plus = total_loss(net, problem, options.kind, options.mode, mask_seed, false);
      values[idx] = saved - options.step;
      const double minus = total_loss(net, problem, options.kind, options.mode, mask_seed, false);
      values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      ge.max_rel_error = std::max(ge.max_rel_error, relative_error(analytic[idx], numeric));
      ++ge.probes;
    }
    report.probes += ge.probes;
    report.max_rel_error = std::max(report.max_rel_error, ge.max_rel_error);
    report.groups.push_back(std::move(ge));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace pabcnn::nn
