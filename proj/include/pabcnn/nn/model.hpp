#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pabcnn/acoustics.hpp"
#include "pabcnn/grid.hpp"
#include "pabcnn/losses.hpp"
#include "pabcnn/nn/adam.hpp"
#include "pabcnn/nn/tensor.hpp"
#include "pabcnn/nn/unet.hpp"

namespace pabcnn::nn {

struct TrainConfig {
  double learning_rate = 5e-4;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 1000;
  std::size_t patience = 50;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Checkpoint {
  NetConfig net;
  TrainConfig train;
  losses::LossKind loss_kind = losses::LossKind::hybrid_laplace;
  std::size_t input_channels = 0;
  std::size_t nz = 0;  // grid the weights were trained on; 0 when unset
  std::size_t nx = 0;
  std::vector<double> params;
  std::vector<double> buffers;  // batchnorm running mean/var
  AdamState adam;
  std::size_t epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::string rng_state;
};

/// Initialised checkpoint; parameter count is fixed by (cfg, input_channels).
Checkpoint build_network(const NetConfig& cfg, std::size_t input_channels, std::uint64_t seed);

/// Network instance carrying the checkpoint's weights and running statistics.
UNet instantiate(const Checkpoint& ckpt);
/// Copies weights and buffers back into the checkpoint.
void store_weights(const UNet& net, Checkpoint& ckpt);

/// Scales an MC volume to unit RMS and lays it out as one C x H x W sample.
std::vector<double> prepare_input(const acoustics::MCVolume& mc);

Tensor make_batch(const std::vector<const std::vector<double>*>& inputs, std::size_t channels,
                  std::size_t nz, std::size_t nx);

/// Head maps for each sample of `x` (N x C x H x W).
std::vector<HeadMaps> forward(const Checkpoint& ckpt, const Tensor& x, Mode mode, std::uint64_t seed);

struct Example {
  std::vector<double> input;  // prepare_input layout
  MaskGrid y_seg;
  RealGrid y_img;
};

struct TrainingSet {
  std::size_t channels = 0;
  std::size_t nz = 0;
  std::size_t nx = 0;
  std::vector<Example> train;
  std::vector<Example> val;
};

struct EpochLog {
  std::size_t epoch = 0;  // 0 = before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  std::size_t epochs_run = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch)
      : std::runtime_error("training loss became non-finite at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Mean over samples of the per-image pixel-summed loss, in deterministic mode.
double evaluate_loss(UNet& net, const std::vector<Example>& examples, losses::LossKind kind,
                     std::size_t batch_size, std::size_t channels, std::size_t nz, std::size_t nx);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam with L2 penalty on convolution kernels and biases; early stopping on validation loss.
TrainResult train(const Checkpoint& init, const TrainingSet& data, losses::LossKind kind,
                  const TrainConfig& tcfg, const EpochCallback& on_epoch = {});

// Checkpoint persistence -----------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, version_mismatch, corrupt_header, corrupt_payload, config_mismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError(config_mismatch) when the checkpoint cannot serve `kind` or the input.
void validate_for_prediction(const Checkpoint& ckpt, losses::LossKind kind, std::size_t input_channels,
                             std::size_t nz, std::size_t nx);

}  // namespace pabcnn::nn
