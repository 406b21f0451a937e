#include "pabcnn/io/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pabcnn/rng.hpp"

namespace pabcnn::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDatasetFormat = "PABCNN-DATASET";

json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::size_t> index_list(const json& j) {
  return j.get<std::vector<std::size_t>>();
}

std::vector<RealGrid> unstack(const NamedArray& a) {
  if (a.shape.size() != 3) {
    throw TnsrError(TnsrError::Kind::shape_mismatch, "TNSR: map '" + a.name + "' is not 3-D");
  }
  const std::size_t plane = a.shape[1] * a.shape[2];
  std::vector<RealGrid> out;
  out.reserve(a.shape[0]);
  for (std::size_t k = 0; k < a.shape[0]; ++k) {
    const auto first = a.values.begin() + static_cast<long>(k * plane);
    out.emplace_back(a.shape[1], a.shape[2], std::vector<double>(first, first + static_cast<long>(plane)));
  }
  return out;
}

NamedArray stack(std::string name, const std::vector<RealGrid>& grids) {
  NamedArray a{std::move(name), Dtype::f64, {grids.size(), grids.front().rows(), grids.front().cols()}, {}};
  a.values.reserve(a.element_count());
  for (const auto& g : grids) a.values.insert(a.values.end(), g.raw().begin(), g.raw().end());
  return a;
}

bool has_map(const std::vector<NamedArray>& maps, std::string_view name) {
  for (const auto& m : maps) {
    if (m.name == name) return true;
  }
  return false;
}

}  // namespace

std::string sample_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu.tnsr", index);
  return buf;
}

double sample_snr_db(const DatasetConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index, 1));
  return uniform(rng, cfg.snr_min_db, cfg.snr_max_db);
}

std::uint64_t sample_noise_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, index, 2); }

DatasetManifest plan_dataset(const RunConfig& cfg) {
  cfg.validate();
  DatasetManifest m;
  m.seed = cfg.dataset.seed;
  m.grid = cfg.grid;
  m.geometry = cfg.geometry;
  m.phantom = cfg.phantom;
  m.snr_min_db = cfg.dataset.snr_min_db;
  m.snr_max_db = cfg.dataset.snr_max_db;
  m.splits = phantom::split_indices(cfg.dataset.count, cfg.dataset.seed);
  m.samples.resize(cfg.dataset.count);
  for (std::size_t i = 0; i < cfg.dataset.count; ++i) {
    m.samples[i] = {i, sample_file_name(i), sample_snr_db(cfg.dataset, i), sample_noise_seed(cfg.dataset.seed, i)};
  }
  return m;
}

SimulatedSample simulate_sample(const DatasetManifest& m, std::size_t index) {
  const SampleRecord& rec = m.samples.at(index);
  SimulatedSample s;
  s.phantom = phantom::generate_phantom(m.grid, m.phantom, derive_seed(m.seed, index));
  s.snr_db = rec.snr_db;
  s.raw = acoustics::add_noise(acoustics::forward_project(s.phantom.image, m.grid, m.geometry), rec.snr_db,
                               rec.noise_seed);
  s.mc = acoustics::mc_transform(s.raw, m.grid, m.geometry);
  return s;
}

json to_json(const DatasetManifest& m) {
  json samples = json::array();
  for (const auto& r : m.samples) {
    samples.push_back({{"index", r.index}, {"file", r.file}, {"snr_db", r.snr_db}, {"noise_seed", r.noise_seed}});
  }
  return {
      {"format", kDatasetFormat},
      {"count", m.count()},
      {"seed", m.seed},
      {"grid", to_json(m.grid)},
      {"geometry", to_json(m.geometry)},
      {"phantom", to_json(m.phantom)},
      {"snr_db", {m.snr_min_db, m.snr_max_db}},
      {"splits", {{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}}},
      {"samples", samples},
  };
}

DatasetManifest manifest_from_json(const json& j) {
  try {
    if (j.at("format") != kDatasetFormat) throw ConfigError("dataset manifest: unexpected format");
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.grid = grid_from_json(j.at("grid"));
    m.geometry = geometry_from_json(j.at("geometry"));
    m.phantom = vessel_from_json(j.at("phantom"));
    m.snr_min_db = j.at("snr_db").at(0).get<double>();
    m.snr_max_db = j.at("snr_db").at(1).get<double>();
    m.splits.train = index_list(j.at("splits").at("train"));
    m.splits.val = index_list(j.at("splits").at("val"));
    m.splits.test = index_list(j.at("splits").at("test"));
    for (const auto& r : j.at("samples")) {
      m.samples.push_back({r.at("index").get<std::size_t>(), r.at("file").get<std::string>(),
                           r.at("snr_db").get<double>(), r.at("noise_seed").get<std::uint64_t>()});
    }
    if (m.samples.size() != j.at("count").get<std::size_t>()) {
      throw ConfigError("dataset manifest: sample table does not match count");
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset manifest: ") + e.what());
  }
}

void write_manifest(const fs::path& dir, const DatasetManifest& m) {
  write_file(dir / kManifestName, to_json(m).dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& dir) { return manifest_from_json(parse_json_file(dir / kManifestName)); }

std::vector<NamedArray> sample_maps(const SimulatedSample& s) {
  return {from_mask("segmentation", s.phantom.segmentation), from_grid("image", s.phantom.image),
          from_raw("raw", s.raw, Dtype::f32), from_mc("mc", s.mc, Dtype::f32)};
}

void write_sample(const fs::path& dir, const SampleRecord& rec, const SimulatedSample& s) {
  write_bundle(dir / rec.file, sample_maps(s));
}

SimulatedSample read_sample(const fs::path& dir, const DatasetManifest& m, std::size_t index) {
  const SampleRecord& rec = m.samples.at(index);
  const auto maps = read_tnsr(dir / rec.file);
  SimulatedSample s;
  s.phantom.segmentation = to_mask(find_map(maps, "segmentation"));
  s.phantom.image = to_grid(find_map(maps, "image"));
  s.raw = to_raw(find_map(maps, "raw"));
  s.mc = to_mc(find_map(maps, "mc"));
  s.snr_db = rec.snr_db;
  if (s.mc.nz != m.grid.nz || s.mc.nx != m.grid.nx || s.mc.n_elem != m.geometry.n_elem) {
    throw TnsrError(TnsrError::Kind::shape_mismatch, (dir / rec.file).string() + ": MC volume does not match manifest");
  }
  return s;
}

void check_compatible(const DatasetManifest& m, const RunConfig& cfg) {
  if (!(m.grid == cfg.grid)) throw ConfigError("dataset grid differs from the configured grid");
  if (!(m.geometry == cfg.geometry)) throw ConfigError("dataset array geometry differs from the configured geometry");
}

nn::TrainingSet load_training_set(const fs::path& dir, const DatasetManifest& m) {
  nn::TrainingSet ts;
  ts.channels = m.geometry.n_elem;
  ts.nz = m.grid.nz;
  ts.nx = m.grid.nx;
  auto load = [&](const std::vector<std::size_t>& idx, std::vector<nn::Example>& out) {
    out.reserve(idx.size());
    for (std::size_t i : idx) {
      SimulatedSample s = read_sample(dir, m, i);
      out.push_back({nn::prepare_input(s.mc), std::move(s.phantom.segmentation), std::move(s.phantom.image)});
    }
  };
  load(m.splits.train, ts.train);
  load(m.splits.val, ts.val);
  return ts;
}

NamedArray from_raw(std::string name, const acoustics::RawChannelData& raw, Dtype dtype) {
  return {std::move(name), dtype, {raw.n_elem, raw.n_samples}, raw.traces};
}

acoustics::RawChannelData to_raw(const NamedArray& a) {
  if (a.shape.size() != 2) {
    throw TnsrError(TnsrError::Kind::shape_mismatch, "TNSR: raw map '" + a.name + "' must be elements x samples");
  }
  return {a.shape[0], a.shape[1], a.values};
}

NamedArray from_mc(std::string name, const acoustics::MCVolume& mc, Dtype dtype) {
  return {std::move(name), dtype, {mc.n_elem, mc.nz, mc.nx}, mc.channels};
}

acoustics::MCVolume to_mc(const NamedArray& a) {
  if (a.shape.size() != 3) {
    throw TnsrError(TnsrError::Kind::shape_mismatch, "TNSR: MC map '" + a.name + "' must be elements x nz x nx");
  }
  return {a.shape[0], a.shape[1], a.shape[2], a.values};
}

fs::path sidecar_path(const fs::path& bundle) {
  fs::path p = bundle;
  p += ".json";
  return p;
}

void write_posterior(const fs::path& path, const uncertainty::Posterior& post, const uncertainty::SampleStack& st,
                     json source) {
  st.validate();
  std::vector<NamedArray> maps;
  if (post.has_segmentation) {
    maps.push_back(from_grid("seg_mean", post.seg_mean));
    maps.push_back(from_grid("seg_unc", post.seg_unc));
    maps.push_back(from_grid("seg_unc_data", post.seg_unc_data));
    maps.push_back(from_grid("seg_unc_model", post.seg_unc_model));
  }
  maps.push_back(from_grid("img_mean", post.img_mean));
  maps.push_back(from_grid("img_unc", post.img_unc));
  maps.push_back(from_grid("img_unc_data", post.img_unc_data));
  maps.push_back(from_grid("img_unc_model", post.img_unc_model));
  maps.push_back(from_mask("final_seg", post.final_seg));
  maps.push_back(from_grid("img_mean_masked", post.img_mean_masked));
  maps.push_back(from_grid("img_unc_masked", post.img_unc_masked));
  if (st.has_segmentation()) maps.push_back(stack("pass_mu1", st.mu1));
  maps.push_back(stack("pass_mu2", st.mu2));
  maps.push_back(stack("pass_sigma", st.sigma));
  write_bundle(path, maps);

  json names = json::array();
  for (const auto& m : maps) names.push_back(m.name);
  const json meta = {
      {"passes", st.passes()},
      {"loss", std::string(losses::to_string(st.kind))},
      {"distribution", std::string(uncertainty::to_string(post.distribution))},
      {"has_segmentation", post.has_segmentation},
      {"seeds", st.seeds},
      {"nz", st.nz},
      {"nx", st.nx},
      {"maps", names},
      {"source", std::move(source)},
  };
  write_file(sidecar_path(path), meta.dump(2) + "\n");
}

StoredPosterior read_posterior(const fs::path& path) {
  StoredPosterior out;
  out.meta = parse_json_file(sidecar_path(path));
  const auto maps = read_tnsr(path);
  try {
    const auto kind = losses::parse_loss_kind(out.meta.at("loss").get<std::string>());
    if (!kind) throw ConfigError(sidecar_path(path).string() + ": unknown loss kind");
    auto& st = out.stack;
    st.kind = *kind;
    st.nz = out.meta.at("nz").get<std::size_t>();
    st.nx = out.meta.at("nx").get<std::size_t>();
    st.seeds = out.meta.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(sidecar_path(path).string() + ": " + e.what());
  }
  auto& st = out.stack;
  if (has_map(maps, "pass_mu1")) st.mu1 = unstack(find_map(maps, "pass_mu1"));
  st.mu2 = unstack(find_map(maps, "pass_mu2"));
  st.sigma = unstack(find_map(maps, "pass_sigma"));
  st.validate();

  auto& p = out.posterior;
  p.distribution = uncertainty::distribution_for(st.kind);
  p.passes = st.passes();
  p.has_segmentation = has_map(maps, "seg_mean");
  if (p.has_segmentation) {
    p.seg_mean = to_grid(find_map(maps, "seg_mean"));
    p.seg_unc = to_grid(find_map(maps, "seg_unc"));
    p.seg_unc_data = to_grid(find_map(maps, "seg_unc_data"));
    p.seg_unc_model = to_grid(find_map(maps, "seg_unc_model"));
  }
  p.img_mean = to_grid(find_map(maps, "img_mean"));
  p.img_unc = to_grid(find_map(maps, "img_unc"));
  p.img_unc_data = to_grid(find_map(maps, "img_unc_data"));
  p.img_unc_model = to_grid(find_map(maps, "img_unc_model"));
  p.final_seg = to_mask(find_map(maps, "final_seg"));
  p.img_mean_masked = to_grid(find_map(maps, "img_mean_masked"));
  p.img_unc_masked = to_grid(find_map(maps, "img_unc_masked"));
  return out;
}

}  // namespace pabcnn::io
