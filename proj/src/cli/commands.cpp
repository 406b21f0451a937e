#include "pabcnn/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/calibration.hpp"
#include "pabcnn/confidence.hpp"
#include "pabcnn/io/dataset_io.hpp"
#include "pabcnn/io/pgm.hpp"
#include "pabcnn/io/tnsr.hpp"
#include "pabcnn/uncertainty.hpp"

namespace pabcnn::cli {

using nlohmann::json;

namespace {

constexpr const char* kPredictionsName = "predictions.json";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw CommandError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CommandError("cannot write " + path.string());
}

const io::NamedArray& pick_map(const std::vector<io::NamedArray>& maps, std::string_view preferred,
                               const fs::path& path) {
  if (maps.size() == 1 && maps.front().name.empty()) return maps.front();
  for (const auto& m : maps) {
    if (m.name == preferred) return m;
  }
  throw CommandError(path.string() + ": no '" + std::string(preferred) + "' map");
}

void beamform_to(const io::RunConfig& cfg, const acoustics::RawChannelData& raw, const fs::path& out_dir) {
  if (raw.n_elem != cfg.geometry.n_elem) {
    throw CommandError("raw data has " + std::to_string(raw.n_elem) + " elements, geometry expects " +
                       std::to_string(cfg.geometry.n_elem));
  }
  const auto mc = acoustics::mc_transform(raw, cfg.grid, cfg.geometry);
  const RealGrid das = acoustics::das_reconstruct(mc);
  const RealGrid das_mag = acoustics::das_magnitude(mc);
  io::write_tnsr(out_dir / "mc.tnsr", io::from_mc("", mc));
  io::write_bundle(out_dir / "das.tnsr", {io::from_grid("das", das), io::from_grid("das_magnitude", das_mag)});
  io::write_pgm_db(out_dir / "das.pgm", das_mag);
}

struct PredictInput {
  std::string name;  // bundle file name in the output directory
  json source;
  std::function<acoustics::MCVolume()> load;
};

std::vector<std::size_t> split_members(const io::DatasetManifest& m, const std::string& split) {
  if (split == "train") return m.splits.train;
  if (split == "val") return m.splits.val;
  if (split == "test") return m.splits.test;
  if (split == "all") {
    std::vector<std::size_t> all(m.count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  throw CommandError("unknown split '" + split + "' (train, val, test, all)");
}

acoustics::MCVolume load_mc_file(const fs::path& path) {
  const auto maps = io::read_tnsr(path);
  return io::to_mc(pick_map(maps, "mc", path));
}

std::vector<fs::path> tnsr_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tnsr") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<PredictInput> predict_inputs(const fs::path& input, const std::string& split) {
  std::vector<PredictInput> out;
  if (!fs::exists(input)) throw CommandError("input not found: " + input.string());
  if (fs::is_directory(input) && fs::exists(input / io::kManifestName)) {
    auto manifest = std::make_shared<io::DatasetManifest>(io::read_manifest(input));
    const fs::path dir = fs::absolute(input);
    for (std::size_t i : split_members(*manifest, split)) {
      char name[40];
      std::snprintf(name, sizeof name, "posterior_%05zu.tnsr", i);
      out.push_back({name,
                     {{"dataset", dir.string()}, {"index", i}, {"file", manifest->samples.at(i).file}},
                     [manifest, dir, i] { return io::read_sample(dir, *manifest, i).mc; }});
    }
  } else if (fs::is_directory(input)) {
    for (const auto& f : tnsr_files(input)) {
      out.push_back({f.stem().string() + "_posterior.tnsr",
                     {{"file", fs::absolute(f).string()}},
                     [f] { return load_mc_file(f); }});
    }
  } else {
    out.push_back({input.stem().string() + "_posterior.tnsr",
                   {{"file", fs::absolute(input).string()}},
                   [input] { return load_mc_file(input); }});
  }
  if (out.empty()) throw CommandError("no inputs found in " + input.string());
  return out;
}

double max_value(const RealGrid& g) {
  double m = 0.0;
  for (double v : g.values()) m = std::max(m, v);
  return m;
}

double masked_mean(const RealGrid& g, const MaskGrid& mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i] != 0) {
      sum += g[i];
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Mean and sample standard deviation of the finite entries.
json summary_row(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  for (const auto& x : values) {
    if (x && std::isfinite(*x)) v.push_back(*x);
  }
  if (v.empty()) return {{"mean", nullptr}, {"sd", nullptr}, {"n", 0}};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const json sd = v.size() > 1 ? json(std::sqrt(ss / static_cast<double>(v.size() - 1))) : json(nullptr);
  return {{"mean", mean}, {"sd", sd}, {"n", v.size()}};
}

struct BundleEntry {
  fs::path bundle;
  std::optional<std::size_t> dataset_index;
};

std::vector<BundleEntry> list_bundles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CommandError("posterior directory not found: " + dir.string());
  std::vector<BundleEntry> entries;
  for (const auto& f : tnsr_files(dir)) {
    if (!fs::exists(io::sidecar_path(f))) continue;
    BundleEntry e{f, std::nullopt};
    const json meta = json::parse(io::read_file(io::sidecar_path(f)));
    if (meta.contains("source") && meta["source"].is_object() && meta["source"].contains("index")) {
      e.dataset_index = meta["source"]["index"].get<std::size_t>();
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw CommandError("no posterior bundles in " + dir.string());
  return entries;
}

struct ImageMetrics {
  std::string name;
  std::optional<std::size_t> index;
  // Always available.
  double mean_img_unc = 0.0;
  double mean_seg_unc = std::nan("");
  std::size_t segmented_pixels = 0;
  // Ground-truth metrics.
  double truth_peak = 0.0;
  double mse = 0.0;
  double das_mse = 0.0;
  std::optional<double> seg_accuracy;
  std::optional<double> seg_cc;
  calibration::ReliabilityDiagram reliability;
  calibration::CoverageReport coverage;
  std::vector<calibration::CredibilityHit> cred_hits;
};

void write_confident_outputs(const fs::path& out_dir, const std::string& stem, const RealGrid& img,
                             std::vector<fs::path>& written) {
  const fs::path t = out_dir / (stem + ".tnsr");
  const fs::path p = out_dir / (stem + ".pgm");
  io::write_tnsr(t, io::from_grid("", img));
  io::write_pgm_db(p, img);
  written.push_back(t);
  written.push_back(p);
}

std::string threshold_label(double t) {
  std::ostringstream s;
  s << std::setprecision(6) << t;
  return s.str();
}

}  // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

fs::path cmd_simulate(const io::RunConfig& cfg, const fs::path& out_dir, std::size_t jobs) {
  const io::DatasetManifest manifest = io::plan_dataset(cfg);
  ensure_dir(out_dir);
  parallel_for(manifest.count(), jobs, [&](std::size_t i) {
    io::write_sample(out_dir, manifest.samples[i], io::simulate_sample(manifest, i));
  });
  io::write_manifest(out_dir, manifest);
  return out_dir / io::kManifestName;
}

void cmd_beamform(const io::RunConfig& cfg, const fs::path& raw_file, const fs::path& out_dir) {
  cfg.geometry.validate(cfg.grid);
  const auto maps = io::read_tnsr(raw_file);
  const auto raw = io::to_raw(pick_map(maps, "raw", raw_file));
  ensure_dir(out_dir);
  beamform_to(cfg, raw, out_dir);
}

void cmd_ingest(const io::RunConfig& cfg, const fs::path& block_file, const fs::path& out_dir) {
  cfg.geometry.validate(cfg.grid);
  const auto maps = io::read_tnsr(block_file);
  const auto& block = pick_map(maps, "block", block_file);
  if (block.shape.size() != 3) {
    throw CommandError(block_file.string() + ": expected a samples x elements x fibers block");
  }
  const auto raw = acoustics::average_fibers(block.values, block.shape[0], block.shape[1], block.shape[2]);
  ensure_dir(out_dir);
  io::write_tnsr(out_dir / "raw.tnsr", io::from_raw("", raw));
  beamform_to(cfg, raw, out_dir);
}

nn::TrainResult cmd_train(const io::RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_ckpt,
                          std::ostream* progress) {
  cfg.validate();
  const io::DatasetManifest manifest = io::read_manifest(dataset_dir);
  io::check_compatible(manifest, cfg);
  const nn::TrainingSet data = io::load_training_set(dataset_dir, manifest);
  if (data.train.empty() || data.val.empty()) throw CommandError("dataset has an empty train or val split");

  if (out_ckpt.has_parent_path()) ensure_dir(out_ckpt.parent_path());
  fs::path log_path = out_ckpt;
  log_path += ".log.csv";
  std::ofstream log(log_path);
  if (!log) throw CommandError("cannot write " + log_path.string());
  log << "epoch,train_loss,val_loss,seconds\n" << std::setprecision(10);

  const nn::Checkpoint init = nn::build_network(cfg.net, data.channels, cfg.train.seed);
  nn::TrainResult result = nn::train(init, data, cfg.loss, cfg.train, [&](const nn::EpochLog& e) {
    log << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.seconds << '\n' << std::flush;
    if (progress) {
      *progress << "epoch " << e.epoch << "  train " << e.train_loss << "  val " << e.val_loss << "  ("
                << std::fixed << std::setprecision(1) << e.seconds << " s)" << std::defaultfloat << std::setprecision(6) << '\n'
                << std::flush;
    }
  });
  nn::save_checkpoint(result.best, out_ckpt);
  return result;
}

std::vector<fs::path> cmd_predict(const fs::path& ckpt_path, const fs::path& input, const PredictOptions& opts,
                                  const fs::path& out_dir) {
  if (opts.passes < 1) throw CommandError("predict: passes must be >= 1");
  const nn::Checkpoint ckpt = nn::load_checkpoint(ckpt_path);
  const auto inputs = predict_inputs(input, opts.split);
  ensure_dir(out_dir);

  std::vector<fs::path> written(inputs.size());
  parallel_for(inputs.size(), opts.jobs, [&](std::size_t i) {
    const acoustics::MCVolume mc = inputs[i].load();
    nn::validate_for_prediction(ckpt, ckpt.loss_kind, mc.n_elem, mc.nz, mc.nx);
    const auto stack = uncertainty::predict_mc(ckpt, mc, opts.passes, opts.seed);
    const auto post = uncertainty::aggregate(stack);
    written[i] = out_dir / inputs[i].name;
    io::write_posterior(written[i], post, stack, inputs[i].source);
  });

  json entries = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    entries.push_back({{"bundle", inputs[i].name}, {"source", inputs[i].source}});
  }
  const json manifest = {{"checkpoint", fs::absolute(ckpt_path).string()},
                         {"loss", std::string(losses::to_string(ckpt.loss_kind))},
                         {"passes", opts.passes},
                         {"seed", opts.seed},
                         {"entries", entries}};
  write_text(out_dir / kPredictionsName, manifest.dump(2) + "\n");
  return written;
}

json cmd_calibrate(const fs::path& posterior_dir, const fs::path& dataset_dir, const io::CalibrationConfig& cfg,
                   const fs::path& out_report, std::size_t jobs) {
  const auto entries = list_bundles(posterior_dir);

  std::optional<io::DatasetManifest> manifest;
  if (!dataset_dir.empty()) {
    if (!fs::exists(dataset_dir / io::kManifestName)) {
      throw CommandError("no dataset manifest in " + dataset_dir.string());
    }
    manifest = io::read_manifest(dataset_dir);
  }
  bool ground_truth = manifest.has_value();
  std::string missing_reason;
  if (!manifest) missing_reason = "no dataset directory given";
  for (const auto& e : entries) {
    if (ground_truth && (!e.dataset_index || *e.dataset_index >= manifest->count())) {
      ground_truth = false;
      missing_reason = e.bundle.filename().string() + " does not reference a dataset sample";
    }
  }

  std::vector<ImageMetrics> metrics(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto stored = io::read_posterior(entries[i].bundle);
    const auto& post = stored.posterior;
    ImageMetrics& m = metrics[i];
    m.name = entries[i].bundle.filename().string();
    m.index = entries[i].dataset_index;
    for (auto v : post.final_seg.values()) m.segmented_pixels += v;
    m.mean_img_unc = masked_mean(post.img_unc, post.final_seg);
    if (post.has_segmentation) {
      m.mean_seg_unc = 0.0;
      for (double v : post.seg_unc.values()) m.mean_seg_unc += v;
      m.mean_seg_unc /= static_cast<double>(post.seg_unc.size());
    }
    if (!ground_truth) return;

    const auto sample = io::read_sample(dataset_dir, *manifest, *m.index);
    const RealGrid& truth = sample.phantom.image;
    m.truth_peak = max_value(truth);
    m.mse = calibration::mean_squared_error(post.img_mean_masked, truth);
    m.das_mse =
        calibration::mean_squared_error(calibration::peak_match(acoustics::das_magnitude(sample.mc), m.truth_peak), truth);
    if (post.has_segmentation) {
      m.seg_accuracy = calibration::seg_accuracy(post.final_seg, sample.phantom.segmentation);
      m.seg_cc = calibration::seg_uncertainty_cc(post.seg_unc, post.final_seg, sample.phantom.segmentation);
    }
    const auto cred = calibration::credibility_map(stored.stack, post, cfg.eps_factor);
    m.reliability = calibration::reliability_diagram(cred, post, truth, cfg.bins);
    m.cred_hits = calibration::credibility_hits(cred, post, truth);
    if (m.segmented_pixels > 0) m.coverage = calibration::coverage_report(post, truth);
  });

  json report = {{"ground_truth", ground_truth}, {"images", metrics.size()}};
  std::ostringstream csv;
  csv << std::setprecision(10);

  if (!ground_truth) {
    report["reason"] = missing_reason;
    std::vector<std::optional<double>> img_unc, seg_unc;
    json per_image = json::array();
    csv << "bundle,segmented_pixels,mean_img_unc,mean_seg_unc\n";
    for (const auto& m : metrics) {
      img_unc.push_back(m.mean_img_unc);
      seg_unc.push_back(m.mean_seg_unc);
      per_image.push_back({{"bundle", m.name},
                           {"segmented_pixels", m.segmented_pixels},
                           {"mean_img_unc", finite_or_null(m.mean_img_unc)},
                           {"mean_seg_unc", finite_or_null(m.mean_seg_unc)}});
      csv << m.name << ',' << m.segmented_pixels << ',' << m.mean_img_unc << ',' << m.mean_seg_unc << '\n';
    }
    report["per_image"] = per_image;
    report["summary"] = {{"Mean Image Uncertainty", summary_row(img_unc)},
                         {"Mean Segmentation Uncertainty", summary_row(seg_unc)}};
  } else {
    // PSNR peak is the largest ground-truth value across the evaluated corpus.
    double peak = 0.0;
    for (const auto& m : metrics) peak = std::max(peak, m.truth_peak);
    if (!(peak > 0.0)) throw CommandError("ground truth is all zero; PSNR undefined");

    calibration::ReliabilityAccumulator pooled(cfg.bins);
    std::size_t cov_n = 0, band_n = 0;
    double cov_hits = 0.0, band_hits = 0.0;
    std::vector<std::optional<double>> psnr, das_psnr, acc, seg_cc, rel_cc, rel_slope;
    json per_image = json::array();
    csv << "bundle,index,psnr_db,das_psnr_db,seg_accuracy,seg_cc,acc_cred_cc,acc_cred_slope,coverage_2sigma\n";
    auto cell = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& m : metrics) {
      const double p = calibration::psnr_from_mse(m.mse, peak);
      const double pd = calibration::psnr_from_mse(m.das_mse, peak);
      for (const auto& h : m.cred_hits) pooled.add_pixel(h.credibility, h.hit);
      cov_hits += m.coverage.overall * static_cast<double>(m.coverage.evaluated);
      cov_n += m.coverage.evaluated;
      if (m.coverage.band) {
        band_hits += *m.coverage.band * static_cast<double>(m.coverage.band_count);
        band_n += m.coverage.band_count;
      }
      psnr.push_back(p);
      das_psnr.push_back(pd);
      acc.push_back(m.seg_accuracy);
      seg_cc.push_back(m.seg_cc);
      rel_cc.push_back(m.reliability.cc);
      rel_slope.push_back(m.reliability.slope);
      const std::optional<double> cov =
          m.coverage.evaluated > 0 ? std::optional<double>(m.coverage.overall) : std::nullopt;
      per_image.push_back({{"bundle", m.name},
                           {"index", *m.index},
                           {"psnr_db", finite_or_null(p)},
                           {"das_psnr_db", finite_or_null(pd)},
                           {"seg_accuracy", optional_number(m.seg_accuracy)},
                           {"seg_cc", optional_number(m.seg_cc)},
                           {"acc_cred_cc", optional_number(m.reliability.cc)},
                           {"acc_cred_slope", optional_number(m.reliability.slope)},
                           {"coverage_2sigma", optional_number(cov)},
                           {"segmented_pixels", m.segmented_pixels}});
      csv << m.name << ',' << *m.index << ',' << p << ',' << pd << ',' << cell(m.seg_accuracy) << ','
          << cell(m.seg_cc) << ',' << cell(m.reliability.cc) << ',' << cell(m.reliability.slope) << ','
          << cell(cov) << '\n';
    }
    const auto diagram = pooled.finish();
    json bins = json::array();
    for (const auto& b : diagram.bins) {
      bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}, {"cred", b.cred}, {"acc", b.acc}});
    }
    report["psnr_peak"] = peak;
    report["per_image"] = per_image;
    report["summary"] = {{"Segmentation Accuracy", summary_row(acc)},
                         {"Image PSNR (dB)", summary_row(psnr)},
                         {"DAS PSNR (dB)", summary_row(das_psnr)},
                         {"Segmentation CC", summary_row(seg_cc)},
                         {"ACC vs Cred CC", summary_row(rel_cc)},
                         {"ACC vs Cred Slope", summary_row(rel_slope)}};
    report["pooled"] = {
        {"ACC vs Cred CC", optional_number(diagram.cc)},
        {"ACC vs Cred Slope", optional_number(diagram.slope)},
        {"pixels", diagram.pixels},
        {"bins", bins},
        {"coverage_2sigma", cov_n > 0 ? json(cov_hits / static_cast<double>(cov_n)) : json(nullptr)},
        {"coverage_2sigma_band", band_n > 0 ? json(band_hits / static_cast<double>(band_n)) : json(nullptr)},
    };
  }

  if (out_report.has_parent_path()) ensure_dir(out_report.parent_path());
  write_text(out_report, report.dump(2) + "\n");
  fs::path csv_path = out_report;
  csv_path.replace_extension(".csv");
  write_text(csv_path, csv.str());
  return report;
}

std::vector<fs::path> cmd_confidence(const fs::path& bundle, const confidence::ConfidenceParams& params,
                                     const std::vector<double>& sweep, const fs::path& out_dir) {
  params.validate();
  const auto stored = io::read_posterior(bundle);
  const auto& post = stored.posterior;
  ensure_dir(out_dir);

  // Without a segmentation head every pixel is in the support.
  const MaskGrid conf_seg = post.has_segmentation ? confidence::confident_segmentation(post, params) : post.final_seg;
  std::vector<fs::path> written;
  io::write_tnsr(out_dir / "confident_seg.tnsr", io::from_mask("", conf_seg));
  io::write_file(out_dir / "confident_seg.pgm", io::encode_pgm_mask(conf_seg));
  written.push_back(out_dir / "confident_seg.tnsr");
  written.push_back(out_dir / "confident_seg.pgm");
  if (post.has_segmentation) {
    const RealGrid rel = confidence::relative_uncertainty(
        post.seg_mean, post.seg_unc, [&] {
          MaskGrid support(post.seg_mean.rows(), post.seg_mean.cols(), 0);
          for (std::size_t i = 0; i < support.size(); ++i) support[i] = post.seg_mean[i] > params.soft_threshold;
          return support;
        }());
    io::write_tnsr(out_dir / "relative_seg_unc.tnsr", io::from_grid("", rel));
    written.push_back(out_dir / "relative_seg_unc.tnsr");
  }

  write_confident_outputs(out_dir, "confident_img", confidence::confident_image(post, conf_seg, params), written);
  if (!sweep.empty()) {
    std::vector<double> sorted = sweep;
    std::sort(sorted.rbegin(), sorted.rend());
    const auto images = confidence::threshold_sweep(post, conf_seg, params, sorted);
    std::vector<io::NamedArray> bundle_maps;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const std::string label = "t" + threshold_label(sorted[i]);
      write_confident_outputs(out_dir, "confident_img_" + label, images[i], written);
      bundle_maps.push_back(io::from_grid(label, images[i]));
    }
    io::write_bundle(out_dir / "sweep.tnsr", bundle_maps);
    written.push_back(out_dir / "sweep.tnsr");
  }
  return written;
}

GradcheckSummary cmd_gradcheck(double tolerance, std::uint64_t seed, std::ostream& out, bool corrupt_gradient) {
  GradcheckSummary summary;
  for (auto kind : {losses::LossKind::hybrid_laplace, losses::LossKind::laplace_only, losses::LossKind::hybrid_gauss}) {
    nn::GradCheckOptions opt;
    opt.kind = kind;
    opt.tolerance = tolerance;
    opt.seed = seed;
    opt.corrupt_gradient = corrupt_gradient;
    auto report = nn::gradient_check(opt);
    out << losses::to_string(kind) << ": " << (report.passed ? "PASS" : "FAIL") << "  params "
        << report.parameter_count << "  probes " << report.probes << "  max rel error " << std::scientific
        << std::setprecision(3) << report.max_rel_error << std::defaultfloat << '\n';
    for (const auto& g : report.groups) {
      out << "  " << std::left << std::setw(24) << g.name << std::right << " probes " << std::setw(3) << g.probes
          << "  max rel error " << std::scientific << std::setprecision(3) << g.max_rel_error << std::defaultfloat
          << '\n';
    }
    summary.passed = summary.passed && report.passed;
    summary.reports.push_back(std::move(report));
  }
  return summary;
}

}  // namespace pabcnn::cli
