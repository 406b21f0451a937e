#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "pabcnn/confidence.hpp"
#include "pabcnn/rng.hpp"

using namespace pabcnn;
using namespace pabcnn::confidence;
using uncertainty::Posterior;

namespace {

struct Fixture {
  Posterior posterior;
  ConfidenceParams params;
  MaskGrid seg;
  RealGrid img;
  std::vector<double> thresholds;
  std::vector<RealGrid> sweep;
};

Fixture load_fixture() {
  std::ifstream in(std::string(PABCNN_FIXTURE_DIR) + "/confidence_case.json");
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  const std::size_t rows = j.at("rows"), cols = j.at("cols");
  auto grid = [&](const char* key) { return RealGrid(rows, cols, j.at(key).get<std::vector<double>>()); };
  Fixture f;
  f.posterior.has_segmentation = true;
  f.posterior.passes = 1;
  f.posterior.seg_mean = grid("seg_mean");
  f.posterior.seg_unc = grid("seg_unc");
  f.posterior.img_mean = grid("img_mean");
  f.posterior.img_unc = grid("img_unc");
  f.posterior.final_seg = MaskGrid(rows, cols, 0);
  for (std::size_t i = 0; i < rows * cols; ++i) f.posterior.final_seg[i] = f.posterior.seg_mean[i] > 0.5;
  const auto& p = j.at("params");
  f.params = {p.at("soft_threshold"), p.at("seg_rel_threshold"), p.at("img_rel_threshold"), p.at("seg_round_threshold")};
  f.seg = MaskGrid(rows, cols, j.at("confident_seg").get<std::vector<unsigned char>>());
  f.img = grid("confident_img");
  f.thresholds = j.at("sweep").at("thresholds").get<std::vector<double>>();
  for (const auto& im : j.at("sweep").at("images")) f.sweep.emplace_back(rows, cols, im.get<std::vector<double>>());
  return f;
}

Posterior random_posterior(std::size_t nz, std::size_t nx, std::uint64_t seed) {
  Rng rng(seed);
  Posterior p;
  p.has_segmentation = true;
  p.passes = 10;
  p.seg_mean = RealGrid(nz, nx);
  p.seg_unc = RealGrid(nz, nx);
  p.img_mean = RealGrid(nz, nx);
  p.img_unc = RealGrid(nz, nx);
  p.final_seg = MaskGrid(nz, nx);
  for (std::size_t i = 0; i < nz * nx; ++i) {
    const double m = uniform01(rng);
    p.seg_mean[i] = m;
    p.seg_unc[i] = std::sqrt(m * (1.0 - m)) * uniform01(rng) * 2.0;
    p.img_mean[i] = uniform(rng, -0.2, 3.0);
    p.img_unc[i] = uniform(rng, 0.0, 2.0);
    p.final_seg[i] = m > 0.5;
  }
  return p;
}

bool nested(const RealGrid& inner, const RealGrid& outer) {
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (inner[i] != 0.0 && outer[i] == 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stored case: default parameters reproduce the expected maps exactly") {
  const Fixture f = load_fixture();
  CHECK(f.params == ConfidenceParams{});
  const MaskGrid seg = confident_segmentation(f.posterior, f.params);
  CHECK(seg == f.seg);
  const RealGrid img = confident_image(f.posterior, seg, f.params);
  CHECK(img == f.img);
  const auto sweep = threshold_sweep(f.posterior, f.params, f.thresholds);
  REQUIRE(sweep.size() == f.sweep.size());
  for (std::size_t t = 0; t < sweep.size(); ++t) CHECK(sweep[t] == f.sweep[t]);
}

TEST_CASE("relative uncertainty") {
  const RealGrid mean(1, 4, std::vector<double>{0.5, 0.0, 2.0, 1.0});
  const RealGrid unc(1, 4, std::vector<double>{0.25, 0.3, 0.0, 1.0});
  const MaskGrid support(1, 4, std::vector<unsigned char>{1, 1, 1, 0});
  const RealGrid rel = relative_uncertainty(mean, unc, support);
  CHECK(rel[0] == 0.5);
  CHECK(std::isnan(rel[1]));
  CHECK(rel[2] == 0.0);
  CHECK(std::isnan(rel[3]));
}

TEST_CASE("worked examples") {
  Posterior p = random_posterior(1, 1, 1);
  p.seg_mean[0] = 0.6;
  p.seg_unc[0] = 0.9;
  CHECK(confident_segmentation(p, {})[0] == 0);
  p.seg_unc[0] = 0.3;
  CHECK(confident_segmentation(p, {})[0] == 1);
}

TEST_CASE("zero uncertainty: confident segmentation is the rounded mean") {
  Posterior p = random_posterior(8, 8, 2);
  Rng rng(3);
  for (std::size_t i = 0; i < 64; ++i) {
    p.seg_mean[i] = uniform01(rng) < 0.4 ? 1.0 : 0.0;
    p.seg_unc[i] = 0.0;
  }
  const MaskGrid seg = confident_segmentation(p, {});
  for (std::size_t i = 0; i < 64; ++i) CHECK(seg[i] == (p.seg_mean[i] > 0.5 ? 1 : 0));
}

TEST_CASE("unbounded segmentation threshold leaves final_seg on the support") {
  const Posterior p = random_posterior(16, 16, 4);
  ConfidenceParams params;
  params.seg_rel_threshold = kNoThreshold;
  const MaskGrid seg = confident_segmentation(p, params);
  for (std::size_t i = 0; i < 256; ++i) {
    const bool support = p.seg_mean[i] > params.soft_threshold;
    CHECK(seg[i] == ((p.final_seg[i] != 0 && support) ? 1 : 0));
  }
}

TEST_CASE("confident pixels always have mean above one half") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Posterior p = random_posterior(12, 12, seed);
    const MaskGrid seg = confident_segmentation(p, {});
    for (std::size_t i = 0; i < 144; ++i) {
      if (seg[i]) CHECK(p.seg_mean[i] > 0.5);
    }
  }
}

TEST_CASE("supports shrink monotonically with the thresholds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Posterior p = random_posterior(16, 16, 100 + seed);
    const auto sweep = threshold_sweep(p, {}, {2.0, 0.9, 0.5, 0.2, 0.05});
    for (std::size_t t = 1; t < sweep.size(); ++t) CHECK(nested(sweep[t], sweep[t - 1]));

    MaskGrid prev;
    for (double s : {4.0, 1.0, 0.6, 0.3}) {
      ConfidenceParams params;
      params.seg_rel_threshold = s;
      const MaskGrid seg = confident_segmentation(p, params);
      if (prev.size()) {
        for (std::size_t i = 0; i < seg.size(); ++i) CHECK((seg[i] == 0 || prev[i] == 1));
      }
      prev = seg;
    }
  }
}

TEST_CASE("confident image is idempotent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Posterior p = random_posterior(16, 16, 200 + seed);
    const MaskGrid seg = confident_segmentation(p, {});
    const RealGrid once = confident_image(p, seg, {});
    Posterior again = p;
    again.img_mean = once;
    for (std::size_t i = 0; i < once.size(); ++i) again.img_unc[i] = once[i] != 0.0 ? p.img_unc[i] : 0.0;
    CHECK(confident_image(again, seg, {}) == once);
  }
}

TEST_CASE("single-threshold sweep equals one confident image; infinite threshold keeps the masked mean") {
  const Posterior p = random_posterior(10, 10, 9);
  const MaskGrid seg = confident_segmentation(p, {});
  ConfidenceParams params;
  params.img_rel_threshold = 0.4;
  CHECK(threshold_sweep(p, params, {0.4})[0] == confident_image(p, seg, params));

  params.img_rel_threshold = kNoThreshold;
  const RealGrid all = confident_image(p, seg, params);
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == p.img_mean[i] * seg[i]);
}

TEST_CASE("argument checks") {
  const Posterior p = random_posterior(4, 4, 1);
  CHECK_THROWS_AS(threshold_sweep(p, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(threshold_sweep(p, {}, {0.5, 0.9}), std::invalid_argument);
  Posterior no_seg = p;
  no_seg.has_segmentation = false;
  CHECK_THROWS_AS(confident_segmentation(no_seg, {}), std::invalid_argument);
  ConfidenceParams bad;
  bad.soft_threshold = 0.6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.seg_rel_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(ConfidenceParams{}.validate());
}
