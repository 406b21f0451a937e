#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "pabcnn/io/config.hpp"
#include "pabcnn/io/dataset_io.hpp"
#include "pabcnn/io/pgm.hpp"
#include "pabcnn/io/tnsr.hpp"
#include "pabcnn/rng.hpp"

using namespace pabcnn;
using namespace pabcnn::io;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("pabcnn_io_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

TnsrError::Kind decode_error(std::string_view bytes) {
  try {
    decode_tnsr(bytes);
  } catch (const TnsrError& e) {
    return e.kind();
  }
  FAIL("decoded a corrupt TNSR buffer");
  return TnsrError::Kind::io;
}

RunConfig small_config() {
  RunConfig cfg = RunConfig::desk();
  cfg.dataset.count = 10;
  cfg.dataset.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("tnsr: single maps round-trip exactly in every dtype") {
  Rng rng(1);
  NamedArray f64{"", Dtype::f64, {3, 5}, {}};
  for (int i = 0; i < 15; ++i) f64.values.push_back(uniform(rng, -1e3, 1e3));
  f64.values[3] = -0.0;
  f64.values[4] = 1e-300;
  const auto back = decode_tnsr(encode_tnsr(f64));
  REQUIRE(back.size() == 1);
  CHECK(back[0].shape == f64.shape);
  CHECK(back[0].values == f64.values);
  CHECK(std::signbit(back[0].values[3]));

  NamedArray f32{"", Dtype::f32, {2, 2, 2}, {}};
  for (int i = 0; i < 8; ++i) f32.values.push_back(static_cast<float>(uniform(rng, -5.0, 5.0)));
  CHECK(decode_tnsr(encode_tnsr(f32))[0].values == f32.values);

  NamedArray u8{"", Dtype::u8, {4}, {0, 1, 254, 255}};
  CHECK(decode_tnsr(encode_tnsr(u8))[0].values == u8.values);
  CHECK(dtype_size(Dtype::f32) == 4);
}

TEST_CASE("tnsr: bundles keep names, order and values") {
  TempDir tmp("bundle");
  RealGrid g(4, 3);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.1 * static_cast<double>(i) - 0.3;
  MaskGrid m(4, 3, 0);
  m(1, 2) = 1;
  const std::vector<NamedArray> maps = {from_grid("image", g), from_mask("mask", m),
                                        NamedArray{"cube", Dtype::f32, {2, 1, 3}, {1, 2, 3, 4, 5, 6}}};
  write_bundle(tmp.path / "b.tnsr", maps);
  const auto back = read_tnsr(tmp.path / "b.tnsr");
  REQUIRE(back.size() == 3);
  CHECK(back[0].name == "image");
  CHECK(to_grid(find_map(back, "image")) == g);
  CHECK(to_mask(find_map(back, "mask")) == m);
  CHECK(find_map(back, "cube").values == maps[2].values);
  try {
    find_map(back, "absent");
    FAIL("missing map found");
  } catch (const TnsrError& e) {
    CHECK(e.kind() == TnsrError::Kind::missing_map);
  }
  try {
    to_grid(find_map(back, "cube"));
    FAIL("3-D map accepted as a grid");
  } catch (const TnsrError& e) {
    CHECK(e.kind() == TnsrError::Kind::shape_mismatch);
  }
}

TEST_CASE("tnsr: corruptions produce distinct named errors") {
  const std::string good = encode_tnsr(NamedArray{"", Dtype::f64, {2, 2}, {1, 2, 3, 4}});
  const std::string bundle = encode_bundle({NamedArray{"a", Dtype::f32, {3}, {1, 2, 3}}});

  std::string bad_magic = good;
  bad_magic.replace(bad_magic.find("TNSR1"), 5, "TNSR9");
  CHECK(decode_error(bad_magic) == TnsrError::Kind::bad_magic);
  CHECK(decode_error("{\"magic\": \"TNSR1\", \"byte_order\": \"LE\"") == TnsrError::Kind::corrupt_header);
  CHECK(decode_error("not json at all\n") == TnsrError::Kind::corrupt_header);
  CHECK(decode_error(good.substr(0, good.size() - 1)) == TnsrError::Kind::truncated_payload);
  CHECK(decode_error(good + "x") == TnsrError::Kind::trailing_bytes);
  CHECK(decode_error(bundle.substr(0, bundle.size() - 2)) == TnsrError::Kind::truncated_payload);
  CHECK(decode_error(bundle + "zz") == TnsrError::Kind::trailing_bytes);
  try {
    read_tnsr("/nonexistent/dir/file.tnsr");
    FAIL("read a missing file");
  } catch (const TnsrError& e) {
    CHECK(e.kind() == TnsrError::Kind::io);
  }
}

TEST_CASE("config defaults mirror the published hyperparameters") {
  const RunConfig cfg = RunConfig::desk();
  CHECK(cfg.net.dropout_rate == 0.1);
  CHECK(cfg.net.l2_factor == 1e-6);
  CHECK(cfg.train.learning_rate == 5e-4);
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.max_epochs == 1000);
  CHECK(cfg.train.patience == 50);
  CHECK(cfg.calibration.eps_factor == 0.2);
  CHECK(cfg.calibration.bins == 10);
  CHECK(cfg.confidence.seg_round_threshold == 0.5);
  CHECK(cfg.confidence.soft_threshold == 0.05);
  CHECK(cfg.confidence.seg_rel_threshold == 1.0);
  CHECK(cfg.confidence.img_rel_threshold == 0.9);
  CHECK(cfg.predict.passes == 50);
  CHECK(cfg.loss == losses::LossKind::hybrid_laplace);
  CHECK(cfg.grid.nz == 64);
  CHECK(cfg.grid.nx == 32);
  CHECK(cfg.geometry.n_elem == 32);
  CHECK_NOTHROW(cfg.validate());

  const RunConfig full = RunConfig::full_scale();
  CHECK(full.dataset.count == 16000);
  CHECK(full.geometry.n_samples == 2048);
  CHECK(full.geometry.n_elem == 128);
  CHECK(full.grid.nz == 512);
  CHECK(full.grid.nx == 128);
  CHECK(full.geometry.fc_hz == 15.625e6);
  CHECK_NOTHROW(full.validate());
}

TEST_CASE("config json: round trip, partial overrides, unknown keys") {
  RunConfig cfg = RunConfig::desk();
  cfg.train.max_epochs = 77;
  cfg.sweep = {1.0, 0.25};
  cfg.loss = losses::LossKind::hybrid_gauss;
  const RunConfig back = run_config_from_json(to_json(cfg));
  CHECK(back.train == cfg.train);
  CHECK(back.net == cfg.net);
  CHECK(back.grid == cfg.grid);
  CHECK(back.geometry == cfg.geometry);
  CHECK(back.confidence == cfg.confidence);
  CHECK(back.sweep == cfg.sweep);
  CHECK(back.loss == cfg.loss);
  CHECK(back.paths == cfg.paths);

  const RunConfig partial = run_config_from_json(json{{"train", {{"patience", 7}}}});
  CHECK(partial.train.patience == 7);
  CHECK(partial.train.max_epochs == 1000);

  CHECK_THROWS_AS(run_config_from_json(json{{"trian", json::object()}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json{{"train", {{"patiense", 7}}}}), ConfigError);

  TempDir tmp("config");
  write_file(tmp.path / "full.json", R"({"preset": "full", "train": {"max_epochs": 9, "patience": 3}})");
  const RunConfig full = load_run_config(tmp.path / "full.json");
  CHECK(full.grid.nz == 512);
  CHECK(full.train.max_epochs == 9);
  write_file(tmp.path / "odd.json", R"({"preset": "huge"})");
  CHECK_THROWS_AS(load_run_config(tmp.path / "odd.json"), ConfigError);
}

TEST_CASE("pgm: 50 dB display mapping") {
  const RealGrid g(1, 6, std::vector<double>{1.0, 0.1, 0.01, -0.01, 1e-4, 0.0});
  const std::string pgm = encode_pgm_db(g);
  const std::string header = "P5\n6 1\n255\n";
  REQUIRE(pgm.size() == header.size() + 6);
  CHECK(pgm.substr(0, header.size()) == header);
  const auto level = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  CHECK(level(0) == 255);
  CHECK(level(1) == 153);  // -20 dB
  CHECK(level(2) == 51);   // -40 dB
  CHECK(level(3) == 51);
  CHECK(level(4) == 0);  // below the display floor
  CHECK(level(5) == 0);

  const std::string halved = encode_pgm_db(g, 50.0, 2.0);
  CHECK(static_cast<unsigned char>(halved[header.size()]) == std::lround(255.0 * (50.0 + 20.0 * std::log10(0.5)) / 50.0));

  const std::string mask = encode_pgm_mask(MaskGrid(1, 2, std::vector<unsigned char>{0, 1}));
  CHECK(static_cast<unsigned char>(mask.back()) == 255);
}

TEST_CASE("dataset: manifest round trip and per-sample seeding") {
  TempDir tmp("manifest");
  const DatasetManifest m = plan_dataset(small_config());
  REQUIRE(m.count() == 10);
  CHECK(m.splits.train.size() == 8);
  CHECK(m.samples[3].file == sample_file_name(3));
  CHECK(sample_file_name(12) == "sample_00012.tnsr");
  CHECK(m.samples[3].noise_seed == sample_noise_seed(4, 3));
  CHECK(m.samples[0].noise_seed != m.samples[1].noise_seed);
  for (const auto& s : m.samples) {
    CHECK(s.snr_db >= 10.0);
    CHECK(s.snr_db <= 35.0);
  }
  write_manifest(tmp.path, m);
  const DatasetManifest back = read_manifest(tmp.path);
  CHECK(back.seed == m.seed);
  CHECK(back.grid == m.grid);
  CHECK(back.geometry == m.geometry);
  CHECK(back.splits.test == m.splits.test);
  REQUIRE(back.samples.size() == 10);
  CHECK(back.samples[7].snr_db == m.samples[7].snr_db);
  CHECK(back.samples[7].noise_seed == m.samples[7].noise_seed);

  CHECK_THROWS_AS(manifest_from_json(json{{"format", "something-else"}}), ConfigError);

  RunConfig other = small_config();
  other.grid.nz = 128;
  CHECK_THROWS_AS(check_compatible(m, other), ConfigError);
  CHECK_NOTHROW(check_compatible(m, small_config()));
}

TEST_CASE("dataset: samples write and read back") {
  TempDir tmp("sample");
  const DatasetManifest m = plan_dataset(small_config());
  const SimulatedSample s = simulate_sample(m, 2);
  const SimulatedSample again = simulate_sample(m, 2);
  CHECK(s.raw.traces == again.raw.traces);
  CHECK(s.phantom.image == phantom::generate_phantom(m.grid, m.phantom, derive_seed(4, 2)).image);

  write_sample(tmp.path, m.samples[2], s);
  const SimulatedSample back = read_sample(tmp.path, m, 2);
  CHECK(back.phantom.segmentation == s.phantom.segmentation);
  CHECK(back.phantom.image == s.phantom.image);
  REQUIRE(back.mc.channels.size() == s.mc.channels.size());
  for (std::size_t i = 0; i < s.mc.channels.size(); ++i) {
    REQUIRE(back.mc.channels[i] == static_cast<double>(static_cast<float>(s.mc.channels[i])));
  }
  CHECK(to_mc(from_mc("mc", s.mc)).channels == s.mc.channels);
  CHECK(to_raw(from_raw("raw", s.raw)).traces == s.raw.traces);
}

TEST_CASE("posterior bundles round-trip exactly with their sidecar") {
  TempDir tmp("posterior");
  Rng rng(8);
  uncertainty::SampleStack stack;
  stack.nz = 4;
  stack.nx = 3;
  for (int k = 0; k < 3; ++k) {
    RealGrid a(4, 3), b(4, 3), c(4, 3);
    for (std::size_t i = 0; i < 12; ++i) {
      a[i] = uniform01(rng);
      b[i] = uniform(rng, -1.0, 2.0);
      c[i] = uniform(rng, 0.1, 1.0);
    }
    stack.mu1.push_back(a);
    stack.mu2.push_back(b);
    stack.sigma.push_back(c);
    stack.seeds.push_back(uncertainty::pass_seed(5, k));
  }
  const uncertainty::Posterior post = uncertainty::aggregate(stack);
  const fs::path file = tmp.path / "p.tnsr";
  write_posterior(file, post, stack, json{{"index", 3}});
  CHECK(fs::exists(sidecar_path(file)));
  const StoredPosterior back = read_posterior(file);
  CHECK(back.posterior.img_mean == post.img_mean);
  CHECK(back.posterior.img_unc_model == post.img_unc_model);
  CHECK(back.posterior.seg_unc == post.seg_unc);
  CHECK(back.posterior.final_seg == post.final_seg);
  CHECK(back.posterior.img_mean_masked == post.img_mean_masked);
  CHECK(back.stack.mu2[2] == stack.mu2[2]);
  CHECK(back.stack.seeds == stack.seeds);
  CHECK(back.meta.at("passes") == 3);
  CHECK(back.meta.at("source").at("index") == 3);
}
