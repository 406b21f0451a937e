#include "pabcnn/io/config.hpp"

#include <fstream>
#include <set>

namespace pabcnn::io {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + path_ + "." + key + "': " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("config: unknown key '" + path_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const phantom::GridSpec& v) {
  return {{"nz", v.nz}, {"nx", v.nx}, {"dz_mm", v.dz_mm}, {"dx_mm", v.dx_mm}};
}

json to_json(const acoustics::ArrayGeometry& v) {
  return {{"n_elem", v.n_elem},         {"pitch_mm", v.pitch_mm}, {"fc_hz", v.fc_hz},
          {"fs_hz", v.fs_hz},           {"n_samples", v.n_samples}, {"c_m_s", v.c_m_s},
          {"fractional_bandwidth", v.fractional_bandwidth}};
}

json to_json(const phantom::VesselParams& v) {
  return {{"diameter_mm", {v.diameter_min_mm, v.diameter_max_mm}},
          {"vessels", {v.vessels_min, v.vessels_max}},
          {"smoothness_rad", v.smoothness_rad},
          {"fraction_band", {v.fraction_min, v.fraction_max}}};
}

json to_json(const nn::NetConfig& v) {
  return {{"depth", v.depth},
          {"base_channels", v.base_channels},
          {"kernel_size", v.kernel_size},
          {"dropout_rate", v.dropout_rate},
          {"leaky_slope", v.leaky_slope},
          {"l2_factor", v.l2_factor},
          {"head_kind", std::string(nn::to_string(v.head_kind))},
          {"sigma_floor", v.sigma_floor}};
}

json to_json(const nn::TrainConfig& v) {
  return {{"learning_rate", v.learning_rate},
          {"batch_size", v.batch_size},
          {"max_epochs", v.max_epochs},
          {"patience", v.patience},
          {"seed", v.seed}};
}

json to_json(const confidence::ConfidenceParams& v) {
  return {{"soft_threshold", v.soft_threshold},
          {"seg_rel_threshold", v.seg_rel_threshold},
          {"img_rel_threshold", v.img_rel_threshold},
          {"seg_round_threshold", v.seg_round_threshold}};
}

phantom::GridSpec grid_from_json(const json& j, const phantom::GridSpec& d) {
  phantom::GridSpec v = d;
  Section s(j, "grid");
  s.get("nz", v.nz);
  s.get("nx", v.nx);
  s.get("dz_mm", v.dz_mm);
  s.get("dx_mm", v.dx_mm);
  s.finish();
  return v;
}

acoustics::ArrayGeometry geometry_from_json(const json& j, const acoustics::ArrayGeometry& d) {
  acoustics::ArrayGeometry v = d;
  Section s(j, "geometry");
  s.get("n_elem", v.n_elem);
  s.get("pitch_mm", v.pitch_mm);
  s.get("fc_hz", v.fc_hz);
  s.get("fs_hz", v.fs_hz);
  s.get("n_samples", v.n_samples);
  s.get("c_m_s", v.c_m_s);
  s.get("fractional_bandwidth", v.fractional_bandwidth);
  s.finish();
  return v;
}

phantom::VesselParams vessel_from_json(const json& j, const phantom::VesselParams& d) {
  phantom::VesselParams v = d;
  Section s(j, "phantom");
  std::pair<double, double> diameter{v.diameter_min_mm, v.diameter_max_mm};
  std::pair<int, int> vessels{v.vessels_min, v.vessels_max};
  std::pair<double, double> band{v.fraction_min, v.fraction_max};
  s.get("diameter_mm", diameter);
  s.get("vessels", vessels);
  s.get("smoothness_rad", v.smoothness_rad);
  s.get("fraction_band", band);
  s.finish();
  std::tie(v.diameter_min_mm, v.diameter_max_mm) = diameter;
  std::tie(v.vessels_min, v.vessels_max) = vessels;
  std::tie(v.fraction_min, v.fraction_max) = band;
  return v;
}

nn::NetConfig net_from_json(const json& j, const nn::NetConfig& d) {
  nn::NetConfig v = d;
  Section s(j, "net");
  s.get("depth", v.depth);
  s.get("base_channels", v.base_channels);
  s.get("kernel_size", v.kernel_size);
  s.get("dropout_rate", v.dropout_rate);
  s.get("leaky_slope", v.leaky_slope);
  s.get("l2_factor", v.l2_factor);
  std::string head(nn::to_string(v.head_kind));
  s.get("head_kind", head);
  s.get("sigma_floor", v.sigma_floor);
  s.finish();
  const auto kind = nn::parse_head_kind(head);
  if (!kind) throw ConfigError("config: net.head_kind must be 'hybrid' or 'laplace_only', got '" + head + "'");
  v.head_kind = *kind;
  return v;
}

nn::TrainConfig train_from_json(const json& j, const nn::TrainConfig& d) {
  nn::TrainConfig v = d;
  Section s(j, "train");
  s.get("learning_rate", v.learning_rate);
  s.get("batch_size", v.batch_size);
  s.get("max_epochs", v.max_epochs);
  s.get("patience", v.patience);
  s.get("seed", v.seed);
  s.finish();
  return v;
}

confidence::ConfidenceParams confidence_from_json(const json& j, const confidence::ConfidenceParams& d) {
  confidence::ConfidenceParams v = d;
  Section s(j, "confidence");
  s.get("soft_threshold", v.soft_threshold);
  s.get("seg_rel_threshold", v.seg_rel_threshold);
  s.get("img_rel_threshold", v.img_rel_threshold);
  s.get("seg_round_threshold", v.seg_round_threshold);
  s.finish();
  return v;
}

RunConfig RunConfig::desk() { return RunConfig{}; }

RunConfig RunConfig::full_scale() {
  RunConfig c;
  c.grid = phantom::GridSpec::full_scale();
  c.geometry = acoustics::ArrayGeometry::full_scale();
  c.dataset.count = 16000;
  c.net.depth = 4;
  c.net.base_channels = 32;
  return c;
}

void RunConfig::validate() const {
  grid.validate();
  geometry.validate(grid);
  phantom.validate(grid);
  net.validate();
  net.validate_grid(grid.nz, grid.nx);
  train.validate();
  confidence.validate();
  if (!nn::compatible(net.head_kind, loss)) {
    throw ConfigError("config: loss " + std::string(losses::to_string(loss)) + " cannot train a " +
                      std::string(nn::to_string(net.head_kind)) + " head");
  }
  if (dataset.count < 10) throw ConfigError("config: dataset.count must be >= 10");
  if (!(dataset.snr_min_db <= dataset.snr_max_db)) throw ConfigError("config: dataset SNR range inverted");
  if (predict.passes < 1) throw ConfigError("config: predict.passes must be >= 1");
  if (calibration.bins < 1 || !(calibration.eps_factor > 0.0)) throw ConfigError("config: bad calibration section");
}

json to_json(const RunConfig& c) {
  return {
      {"grid", to_json(c.grid)},
      {"geometry", to_json(c.geometry)},
      {"phantom", to_json(c.phantom)},
      {"dataset",
       {{"count", c.dataset.count}, {"seed", c.dataset.seed}, {"snr_db", {c.dataset.snr_min_db, c.dataset.snr_max_db}}}},
      {"net", to_json(c.net)},
      {"train", to_json(c.train)},
      {"loss", std::string(losses::to_string(c.loss))},
      {"predict", {{"passes", c.predict.passes}, {"seed", c.predict.seed}}},
      {"calibration", {{"bins", c.calibration.bins}, {"eps_factor", c.calibration.eps_factor}, {"pooled", c.calibration.pooled}}},
      {"confidence", to_json(c.confidence)},
      {"sweep", c.sweep},
      {"paths",
       {{"dataset", c.paths.dataset},
        {"checkpoint", c.paths.checkpoint},
        {"predictions", c.paths.predictions},
        {"report", c.paths.report}}},
  };
}

RunConfig run_config_from_json(const json& j, const RunConfig& defaults) {
  RunConfig c = defaults;
  Section root(j, "config");
  if (const auto* p = root.child("grid")) c.grid = grid_from_json(*p, c.grid);
  if (const auto* p = root.child("geometry")) c.geometry = geometry_from_json(*p, c.geometry);
  if (const auto* p = root.child("phantom")) c.phantom = vessel_from_json(*p, c.phantom);
  if (const auto* p = root.child("dataset")) {
    Section s(*p, "dataset");
    std::pair<double, double> snr{c.dataset.snr_min_db, c.dataset.snr_max_db};
    s.get("count", c.dataset.count);
    s.get("seed", c.dataset.seed);
    s.get("snr_db", snr);
    s.finish();
    std::tie(c.dataset.snr_min_db, c.dataset.snr_max_db) = snr;
  }
  if (const auto* p = root.child("net")) c.net = net_from_json(*p, c.net);
  if (const auto* p = root.child("train")) c.train = train_from_json(*p, c.train);
  std::string loss(losses::to_string(c.loss));
  root.get("loss", loss);
  const auto kind = losses::parse_loss_kind(loss);
  if (!kind) throw ConfigError("config: unknown loss '" + loss + "'");
  c.loss = *kind;
  if (const auto* p = root.child("predict")) {
    Section s(*p, "predict");
    s.get("passes", c.predict.passes);
    s.get("seed", c.predict.seed);
    s.finish();
  }
  if (const auto* p = root.child("calibration")) {
    Section s(*p, "calibration");
    s.get("bins", c.calibration.bins);
    s.get("eps_factor", c.calibration.eps_factor);
    s.get("pooled", c.calibration.pooled);
    s.finish();
  }
  if (const auto* p = root.child("confidence")) c.confidence = confidence_from_json(*p, c.confidence);
  root.get("sweep", c.sweep);
  if (const auto* p = root.child("paths")) {
    Section s(*p, "paths");
    s.get("dataset", c.paths.dataset);
    s.get("checkpoint", c.paths.checkpoint);
    s.get("predictions", c.paths.predictions);
    s.get("report", c.paths.report);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig base = RunConfig::desk();
  // "preset": "full" selects the full-scale defaults before overrides are applied.
  if (j.is_object() && j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "full") {
      base = RunConfig::full_scale();
    } else if (preset != "desk") {
      throw ConfigError("config: unknown preset '" + preset + "'");
    }
    j.erase("preset");
  }
  return run_config_from_json(j, base);
}

}  // namespace pabcnn::io
