#include <cmath>
#include <json.hpp>

#include "pabcnn/io/config.hpp"
#include "pabcnn/io/tnsr.hpp"
#include "pabcnn/nn/model.hpp"

namespace pabcnn::nn {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "PABCNN-CKPT";

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json header = {
      {"format", kFormat},
      {"version", kCheckpointVersion},
      {"net_config", io::to_json(ckpt.net)},
      {"train_config", io::to_json(ckpt.train)},
      {"loss_kind", std::string(losses::to_string(ckpt.loss_kind))},
      {"input_channels", ckpt.input_channels},
      {"grid", {ckpt.nz, ckpt.nx}},
      {"epoch", ckpt.epoch},
      {"best_val_loss", std::isfinite(ckpt.best_val_loss) ? json(ckpt.best_val_loss) : json(nullptr)},
      {"param_count", ckpt.params.size()},
      {"adam_step", ckpt.adam.step},
      {"rng_state", ckpt.rng_state},
      {"blobs",
       json::array({{{"name", "params"}, {"count", ckpt.params.size()}},
                    {{"name", "buffers"}, {"count", ckpt.buffers.size()}},
                    {{"name", "adam_m"}, {"count", ckpt.adam.m.size()}},
                    {{"name", "adam_v"}, {"count", ckpt.adam.v.size()}}})},
  };
  std::string out = header.dump();
  out.push_back('\n');
  io::append_f64_le(out, ckpt.params);
  io::append_f64_le(out, ckpt.buffers);
  io::append_f64_le(out, ckpt.adam.m);
  io::append_f64_le(out, ckpt.adam.v);
  try {
    io::write_file(path, out);
  } catch (const io::TnsrError& e) {
    throw CheckpointError(CheckpointError::Kind::io, e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = io::read_file(path);
  } catch (const io::TnsrError& e) {
    throw CheckpointError(CheckpointError::Kind::io, e.what());
  }
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint " + path.string() + ": missing header");
  }
  json header;
  try {
    header = json::parse(std::string_view(bytes).substr(0, newline));
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::corrupt_header,
                          "checkpoint " + path.string() + ": header is not JSON: " + e.what());
  }

  Checkpoint ckpt;
  try {
    if (header.at("format") != kFormat) {
      throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint " + path.string() + ": wrong format tag");
    }
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError(CheckpointError::Kind::version_mismatch,
                            "checkpoint " + path.string() + ": version " + std::to_string(version) +
                                ", expected " + std::to_string(kCheckpointVersion));
    }
    ckpt.net = io::net_from_json(header.at("net_config"));
    ckpt.train = io::train_from_json(header.at("train_config"));
    const auto kind = losses::parse_loss_kind(header.at("loss_kind").get<std::string>());
    if (!kind) throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint: unknown loss kind");
    ckpt.loss_kind = *kind;
    ckpt.input_channels = header.at("input_channels").get<std::size_t>();
    ckpt.nz = header.at("grid").at(0).get<std::size_t>();
    ckpt.nx = header.at("grid").at(1).get<std::size_t>();
    ckpt.epoch = header.at("epoch").get<std::size_t>();
    const auto& best = header.at("best_val_loss");
    ckpt.best_val_loss = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
    ckpt.adam.step = header.at("adam_step").get<std::int64_t>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();

    std::string_view body = std::string_view(bytes).substr(newline + 1);
    std::size_t offset = 0;
    const auto& blobs = header.at("blobs");
    std::vector<double>* targets[] = {&ckpt.params, &ckpt.buffers, &ckpt.adam.m, &ckpt.adam.v};
    const char* names[] = {"params", "buffers", "adam_m", "adam_v"};
    if (blobs.size() != 4) throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint: expected 4 blobs");
    for (std::size_t b = 0; b < 4; ++b) {
      if (blobs.at(b).at("name") != names[b]) {
        throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint: unexpected blob order");
      }
      const auto count = blobs.at(b).at("count").get<std::size_t>();
      if (offset + count * 8 > body.size()) {
        throw CheckpointError(CheckpointError::Kind::corrupt_payload,
                              "checkpoint " + path.string() + ": payload truncated in blob '" + names[b] + "'");
      }
      *targets[b] = io::read_f64_le(body.substr(offset, count * 8), count);
      offset += count * 8;
    }
    if (offset != body.size()) {
      throw CheckpointError(CheckpointError::Kind::corrupt_payload, "checkpoint " + path.string() + ": trailing bytes");
    }
    if (header.at("param_count").get<std::size_t>() != ckpt.params.size()) {
      throw CheckpointError(CheckpointError::Kind::corrupt_header, "checkpoint: param_count disagrees with blob");
    }
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::corrupt_header,
                          "checkpoint " + path.string() + ": malformed header: " + e.what());
  } catch (const io::ConfigError& e) {
    throw CheckpointError(CheckpointError::Kind::corrupt_header, e.what());
  }

  const UNet probe(ckpt.net, ckpt.input_channels);
  if (probe.parameter_count() != ckpt.params.size()) {
    throw CheckpointError(CheckpointError::Kind::corrupt_payload,
                          "checkpoint: parameter count " + std::to_string(ckpt.params.size()) +
                              " does not match NetConfig (" + std::to_string(probe.parameter_count()) + ")");
  }
  return ckpt;
}

void validate_for_prediction(const Checkpoint& ckpt, losses::LossKind kind, std::size_t input_channels,
                             std::size_t nz, std::size_t nx) {
  using K = CheckpointError::Kind;
  if (!compatible(ckpt.net.head_kind, kind) || ckpt.loss_kind != kind) {
    throw CheckpointError(K::config_mismatch, "checkpoint trained with " + std::string(losses::to_string(ckpt.loss_kind)) +
                                                  " (" + std::string(to_string(ckpt.net.head_kind)) +
                                                  " head) cannot serve " + std::string(losses::to_string(kind)));
  }
  if (input_channels != ckpt.input_channels) {
    throw CheckpointError(K::config_mismatch, "input has " + std::to_string(input_channels) +
                                                  " channels, checkpoint expects " + std::to_string(ckpt.input_channels));
  }
  if (ckpt.nz != 0 && (nz != ckpt.nz || nx != ckpt.nx)) {
    throw CheckpointError(K::config_mismatch, "input grid " + std::to_string(nz) + "x" + std::to_string(nx) +
                                                  " differs from the training grid " + std::to_string(ckpt.nz) +
                                                  "x" + std::to_string(ckpt.nx));
  }
  ckpt.net.validate_grid(nz, nx);
}

}  // namespace pabcnn::nn
