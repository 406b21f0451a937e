#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pabcnn/calibration.hpp"
#include "pabcnn/rng.hpp"

using namespace pabcnn;
using namespace pabcnn::calibration;
using uncertainty::Posterior;
using uncertainty::SampleStack;

namespace {

SampleStack constant_stack(losses::LossKind kind, std::size_t nz, std::size_t nx, std::vector<double> mu2,
                           std::vector<double> sigma) {
  SampleStack s;
  s.nz = nz;
  s.nx = nx;
  s.kind = kind;
  for (std::size_t k = 0; k < mu2.size(); ++k) {
    if (losses::is_hybrid(kind)) s.mu1.emplace_back(nz, nx, 0.9);
    s.mu2.emplace_back(nz, nx, mu2[k]);
    s.sigma.emplace_back(nz, nx, sigma[k]);
  }
  return s;
}

// Random per-pixel mixture plus one truth value drawn from it.
struct Synthetic {
  SampleStack stack;
  RealGrid truth;
};

Synthetic self_consistent(losses::LossKind kind, std::size_t nz, std::size_t nx, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Synthetic out;
  out.stack.nz = nz;
  out.stack.nx = nx;
  out.stack.kind = kind;
  for (std::size_t p = 0; p < k; ++p) {
    out.stack.mu1.emplace_back(nz, nx, 0.9);
    out.stack.mu2.emplace_back(nz, nx, 0.0);
    out.stack.sigma.emplace_back(nz, nx, 0.0);
  }
  out.truth = RealGrid(nz, nx, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < nz * nx; ++i) {
    const double centre = uniform(rng, 1.0, 4.0);
    for (std::size_t p = 0; p < k; ++p) {
      out.stack.mu2[p][i] = centre + uniform(rng, -0.3, 0.3);
      out.stack.sigma[p][i] = uniform(rng, 0.05, 1.5);
    }
    const std::size_t p = pick(rng);
    const double noise = kind == losses::LossKind::hybrid_gauss ? normal(rng) : expo(rng) - expo(rng);
    out.truth[i] = out.stack.mu2[p][i] + out.stack.sigma[p][i] * noise;
  }
  return out;
}

}  // namespace

TEST_CASE("laplace cdf: median, tails and quadrature") {
  CHECK(laplace_cdf(2.0, 2.0, 0.7) == 0.5);
  CHECK(laplace_cdf(-1e6, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK(laplace_cdf(1e6, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(laplace_cdf(1.0, 0.0, 1.0) - laplace_cdf(-1.0, 0.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));

  // Simpson quadrature of the density over [mu - 1.3, mu + 0.4].
  const double mu = 0.8, s = 0.6, a = mu - 1.3, b = mu + 0.4;
  const int n = 20000;
  auto density = [&](double x) { return std::exp(-std::abs(x - mu) / s) / (2.0 * s); };
  double integral = density(a) + density(b);
  for (int i = 1; i < n; ++i) integral += (i % 2 ? 4.0 : 2.0) * density(a + (b - a) * i / n);
  integral *= (b - a) / (3.0 * n);
  CHECK(laplace_cdf(b, mu, s) - laplace_cdf(a, mu, s) == doctest::Approx(integral).epsilon(1e-7));

  CHECK(gauss_cdf(1.0, 0.0, 1.0) - gauss_cdf(-1.0, 0.0, 1.0) == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))));
  CHECK_THROWS_AS(laplace_cdf(0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_cdf(0.0, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("credibility: one pass with eps equal to the scale") {
  const SampleStack s = constant_stack(losses::LossKind::hybrid_laplace, 2, 2, {5.0}, {1.0});
  const Posterior p = uncertainty::aggregate(s);
  const CredibilityMap c = credibility_map(s, p, 0.2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.evaluated[i] == 1);
    CHECK(c.epsilon[i] == doctest::Approx(1.0));
    CHECK(c.values[i] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  }
  CHECK(std::round(c.values[0] * 1e4) / 1e4 == 0.6321);

  const SampleStack g = constant_stack(losses::LossKind::hybrid_gauss, 1, 1, {5.0}, {1.0});
  CHECK(credibility_map(g, uncertainty::aggregate(g), 0.2).values[0] ==
        doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("credibility: identical passes equal the single-pass value; mixture averages") {
  const SampleStack one = constant_stack(losses::LossKind::hybrid_laplace, 1, 1, {3.0}, {0.4});
  const SampleStack many = constant_stack(losses::LossKind::hybrid_laplace, 1, 1, {3.0, 3.0, 3.0, 3.0}, {0.4, 0.4, 0.4, 0.4});
  CHECK(credibility_map(many, uncertainty::aggregate(many)).values[0] ==
        doctest::Approx(credibility_map(one, uncertainty::aggregate(one)).values[0]).epsilon(1e-14));

  const SampleStack mix = constant_stack(losses::LossKind::hybrid_laplace, 1, 1, {2.0, 4.0}, {0.5, 1.0});
  const double mean = 3.0, eps = 0.6;
  const double expect = 0.5 * (laplace_cdf(mean + eps, 2.0, 0.5) - laplace_cdf(mean - eps, 2.0, 0.5)) +
                        0.5 * (laplace_cdf(mean + eps, 4.0, 1.0) - laplace_cdf(mean - eps, 4.0, 1.0));
  CHECK(credibility_map(mix, uncertainty::aggregate(mix)).values[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("credibility: only positive-mean final_seg pixels are evaluated") {
  SampleStack s = constant_stack(losses::LossKind::hybrid_laplace, 1, 3, {1.0}, {0.5});
  s.mu1[0][1] = 0.1;   // background
  s.mu2[0][2] = -0.5;  // non-positive mean
  const Posterior p = uncertainty::aggregate(s);
  const CredibilityMap c = credibility_map(s, p);
  CHECK(c.evaluated[0] == 1);
  CHECK(c.evaluated[1] == 0);
  CHECK(c.evaluated[2] == 0);
  CHECK(std::isnan(c.values[1]));
  CHECK(c.excluded_nonpositive == 1);
  CHECK_THROWS_AS(credibility_map(s, p, 0.0), std::invalid_argument);
}

TEST_CASE("credibility values lie in [0, 1]") {
  const Synthetic syn = self_consistent(losses::LossKind::hybrid_laplace, 30, 30, 5, 12);
  const CredibilityMap c = credibility_map(syn.stack, uncertainty::aggregate(syn.stack));
  for (std::size_t i = 0; i < 900; ++i) {
    REQUIRE(c.evaluated[i] == 1);
    CHECK(c.values[i] >= 0.0);
    CHECK(c.values[i] <= 1.0);
  }
}

TEST_CASE("bin edges are right-closed") {
  CHECK(bin_index(0.0, 10) == 0);
  CHECK(bin_index(-0.1, 10) == 0);
  CHECK(bin_index(0.1, 10) == 0);
  CHECK(bin_index(0.1000001, 10) == 1);
  CHECK(bin_index(0.55, 10) == 5);
  CHECK(bin_index(1.0, 10) == 9);
}

TEST_CASE("a self-consistent predictor is calibrated") {
  for (auto kind : {losses::LossKind::hybrid_laplace, losses::LossKind::hybrid_gauss}) {
    const Synthetic syn = self_consistent(kind, 320, 320, 3, 2024);
    const Posterior p = uncertainty::aggregate(syn.stack);
    const CredibilityMap c = credibility_map(syn.stack, p);
    const ReliabilityDiagram d = reliability_diagram(c, p, syn.truth);
    CHECK(d.pixels == 320 * 320);
    REQUIRE(d.cc.has_value());
    INFO(losses::to_string(kind) << " cc " << *d.cc << " slope " << *d.slope);
    CHECK(*d.cc >= 0.99);
    CHECK(std::abs(*d.slope - 1.0) < 0.05);
    for (const auto& bin : d.bins) {
      if (bin.count >= 2000) CHECK(std::abs(bin.acc - bin.cred) < 0.02);
    }
  }
}

TEST_CASE("pooling images matches one combined diagram") {
  const Synthetic a = self_consistent(losses::LossKind::hybrid_laplace, 20, 20, 3, 1);
  const Synthetic b = self_consistent(losses::LossKind::hybrid_laplace, 20, 20, 3, 2);
  const Posterior pa = uncertainty::aggregate(a.stack), pb = uncertainty::aggregate(b.stack);
  ReliabilityAccumulator acc;
  acc.add(credibility_map(a.stack, pa), pa, a.truth);
  acc.add(credibility_map(b.stack, pb), pb, b.truth);
  const ReliabilityDiagram pooled = acc.finish();

  ReliabilityAccumulator manual;
  for (const auto* s : {&a, &b}) {
    const Posterior p = uncertainty::aggregate(s->stack);
    const CredibilityMap c = credibility_map(s->stack, p);
    for (std::size_t i = 0; i < 400; ++i) {
      manual.add_pixel(c.values[i], std::abs(s->truth[i] - p.img_mean[i]) <= c.epsilon[i]);
    }
  }
  const ReliabilityDiagram expect = manual.finish();
  CHECK(pooled.pixels == 800);
  for (std::size_t h = 0; h < 10; ++h) {
    CHECK(pooled.bins[h].count == expect.bins[h].count);
    CHECK(pooled.bins[h].acc == expect.bins[h].acc);
  }
}

TEST_CASE("fewer than two occupied bins leaves cc and slope undefined") {
  ReliabilityAccumulator acc;
  acc.add_pixel(0.55, true);
  acc.add_pixel(0.58, false);
  const ReliabilityDiagram d = acc.finish();
  CHECK_FALSE(d.cc.has_value());
  CHECK_FALSE(d.slope.has_value());
  CHECK(d.bins[5].count == 2);
  CHECK(d.bins[5].acc == 0.5);
}

TEST_CASE("two-sigma coverage of a one-pass Laplace predictor") {
  const Synthetic syn = self_consistent(losses::LossKind::hybrid_laplace, 320, 320, 1, 99);
  const CoverageReport r = coverage_report(uncertainty::aggregate(syn.stack), syn.truth);
  const double expected = 1.0 - std::exp(-2.0 * std::sqrt(2.0));
  CHECK(std::round(expected * 1e4) / 1e4 == 0.9409);
  CHECK(std::abs(r.overall - expected) < 0.02);
  CHECK(r.evaluated == 320 * 320);
  REQUIRE(r.band.has_value());

  SampleStack wide = constant_stack(losses::LossKind::hybrid_laplace, 4, 4, {1.0}, {1e6});
  RealGrid truth(4, 4, 50.0);
  CHECK(coverage_report(uncertainty::aggregate(wide), truth).overall == 1.0);
}

TEST_CASE("psnr") {
  RealGrid truth(10, 10, 0.0), recon(10, 10, 0.0);
  truth(3, 3) = 1.0;
  for (std::size_t i = 0; i < 100; ++i) recon[i] = truth[i] + 0.1;
  CHECK(psnr(recon, truth, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(truth, truth, 1.0) == kInfinitePsnr);
  RealGrid r2 = recon, t2 = truth;
  for (std::size_t i = 0; i < 100; ++i) {
    r2[i] *= 7.5;
    t2[i] *= 7.5;
  }
  CHECK(psnr(r2, t2, 7.5) == doctest::Approx(psnr(recon, truth, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(recon, truth, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(psnr(RealGrid(2, 2), truth, 1.0), std::invalid_argument);

  const RealGrid matched = peak_match(recon, 3.0);
  CHECK(*std::max_element(matched.values().begin(), matched.values().end()) == doctest::Approx(3.0));
  CHECK(peak_match(RealGrid(2, 2, 0.0), 3.0)[0] == 0.0);
}

TEST_CASE("segmentation accuracy and uncertainty correlation") {
  Rng rng(5);
  const std::size_t n = 100000;
  MaskGrid truth(1, n), pred(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = uniform01(rng) < 0.1;
    pred[i] = uniform01(rng) < 0.1 ? !truth[i] : truth[i];
  }
  CHECK(seg_accuracy(truth, truth) == 1.0);
  MaskGrid complement(1, n);
  for (std::size_t i = 0; i < n; ++i) complement[i] = !truth[i];
  CHECK(seg_accuracy(complement, truth) == 0.0);

  RealGrid exact(1, n), noise(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    exact[i] = pred[i] != truth[i] ? 0.4 : 0.05;
    noise[i] = uniform01(rng) * 0.5;
  }
  REQUIRE(seg_uncertainty_cc(exact, pred, truth).has_value());
  CHECK(*seg_uncertainty_cc(exact, pred, truth) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(*seg_uncertainty_cc(noise, pred, truth)) < 0.05);
  CHECK_FALSE(seg_uncertainty_cc(noise, truth, truth).has_value());
}

TEST_CASE("pearson and least-squares slope") {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  CHECK(*pearson(x, y) == doctest::Approx(1.0));
  CHECK(*ols_slope(x, y) == doctest::Approx(2.0));
  const std::vector<double> flat = {1, 1, 1, 1};
  CHECK_FALSE(pearson(x, flat).has_value());
  CHECK_FALSE(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}).has_value());
}
