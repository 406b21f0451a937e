#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pabcnn/nn/model.hpp"
#include "pabcnn/rng.hpp"

namespace pabcnn::nn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (patience >= max_epochs) throw std::invalid_argument("TrainConfig: patience must be < max_epochs");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
}

Checkpoint build_network(const NetConfig& cfg, std::size_t input_channels, std::uint64_t seed) {
  UNet net(cfg, input_channels);
  net.initialize(seed);
  Checkpoint ckpt;
  ckpt.net = cfg;
  ckpt.loss_kind = cfg.head_kind == HeadKind::hybrid ? losses::LossKind::hybrid_laplace
                                                     : losses::LossKind::laplace_only;
  ckpt.input_channels = input_channels;
  ckpt.params = net.store().values;
  ckpt.buffers = net.store().buffers;
  return ckpt;
}

UNet instantiate(const Checkpoint& ckpt) {
  UNet net(ckpt.net, ckpt.input_channels);
  if (net.store().values.size() != ckpt.params.size() || net.store().buffers.size() != ckpt.buffers.size()) {
    throw CheckpointError(CheckpointError::Kind::config_mismatch,
                          "checkpoint holds " + std::to_string(ckpt.params.size()) +
                              " parameters but its NetConfig implies " +
                              std::to_string(net.store().values.size()));
  }
  net.store().values = ckpt.params;
  net.store().buffers = ckpt.buffers;
  return net;
}

void store_weights(const UNet& net, Checkpoint& ckpt) {
  ckpt.params = net.store().values;
  ckpt.buffers = net.store().buffers;
}

std::vector<double> prepare_input(const acoustics::MCVolume& mc) {
  double power = 0.0;
  for (double v : mc.channels) power += v * v;
  std::vector<double> out = mc.channels;
  if (power > 0.0) {
    const double scale = 1.0 / std::sqrt(power / static_cast<double>(mc.channels.size()));
    for (double& v : out) v *= scale;
  }
  return out;
}

Tensor make_batch(const std::vector<const std::vector<double>*>& inputs, std::size_t channels,
                  std::size_t nz, std::size_t nx) {
  Tensor x(inputs.size(), channels, nz, nx);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i]->size() != x.sample_size()) throw std::invalid_argument("make_batch: input size mismatch");
    std::copy(inputs[i]->begin(), inputs[i]->end(), x.sample(i));
  }
  return x;
}

std::vector<HeadMaps> forward(const Checkpoint& ckpt, const Tensor& x, Mode mode, std::uint64_t seed) {
  UNet net = instantiate(ckpt);
  const Tensor z = net.forward(x, mode, seed);
  std::vector<HeadMaps> out;
  out.reserve(x.n);
  for (std::size_t i = 0; i < x.n; ++i) out.push_back(head_maps(z, i, ckpt.net));
  return out;
}

namespace {

double batch_loss(const Tensor& z, const std::vector<const Example*>& batch, losses::LossKind kind,
                  double sigma_floor, Tensor* grad) {
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> logits(z.sample(i), z.sample_size());
    std::span<double> g;
    if (grad != nullptr) g = std::span<double>(grad->sample(i), grad->sample_size());
    total += losses::head_loss(kind, logits, batch[i]->y_seg.values(), batch[i]->y_img.values(),
                               sigma_floor, g, scale);
  }
  return total * scale;
}

double l2_penalty(ParamStore& store, double factor, bool accumulate_grad) {
  if (factor == 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& group : store.groups) {
    if (!group.regularized) continue;
    for (std::size_t i = group.offset; i < group.offset + group.count; ++i) {
      const double w = store.values[i];
      sum += w * w;
      if (accumulate_grad) store.grads[i] += 2.0 * factor * w;
    }
  }
  return factor * sum;
}

}  // namespace

double evaluate_loss(UNet& net, const std::vector<Example>& examples, losses::LossKind kind,
                     std::size_t batch_size, std::size_t channels, std::size_t nz, std::size_t nx) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    std::vector<const std::vector<double>*> inputs;
    std::vector<const Example*> batch;
    for (std::size_t i = start; i < end; ++i) {
      inputs.push_back(&examples[i].input);
      batch.push_back(&examples[i]);
    }
    const Tensor z = net.forward(make_batch(inputs, channels, nz, nx), Mode::deterministic, 0);
    total += batch_loss(z, batch, kind, net.config().sigma_floor, nullptr) * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(const Checkpoint& init, const TrainingSet& data, losses::LossKind kind,
                  const TrainConfig& tcfg, const EpochCallback& on_epoch) {
  tcfg.validate();
  if (data.train.empty() || data.val.empty()) {
    throw std::invalid_argument("train: training and validation splits must be non-empty");
  }
  if (!compatible(init.net.head_kind, kind)) {
    throw std::invalid_argument("train: loss " + std::string(losses::to_string(kind)) +
                                " needs a " + (losses::is_hybrid(kind) ? "hybrid" : "laplace_only") +
                                " head, network has " + std::string(to_string(init.net.head_kind)));
  }
  if (data.channels != init.input_channels) {
    throw std::invalid_argument("train: dataset has " + std::to_string(data.channels) +
                                " channels, network expects " + std::to_string(init.input_channels));
  }
  init.net.validate_grid(data.nz, data.nx);

  UNet net = instantiate(init);
  AdamState adam = init.adam;
  const AdamParams hp{tcfg.learning_rate};
  const auto& cfg = init.net;

  TrainResult result;
  Checkpoint current = init;
  current.train = tcfg;
  current.loss_kind = kind;
  current.nz = data.nz;
  current.nx = data.nx;

  auto t0 = std::chrono::steady_clock::now();
  const double val0 = evaluate_loss(net, data.val, kind, tcfg.batch_size, data.channels, data.nz, data.nx);
  const double train0 =
      evaluate_loss(net, data.train, kind, tcfg.batch_size, data.channels, data.nz, data.nx) +
      l2_penalty(net.store(), cfg.l2_factor, false);
  EpochLog first{0, train0, val0,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
  result.log.push_back(first);
  if (on_epoch) on_epoch(first);

  current.epoch = 0;
  current.best_val_loss = val0;
  result.best = current;
  std::size_t best_epoch = 0;

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(tcfg.seed, epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(shuffle_rng)]);
    }

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      std::vector<const std::vector<double>*> inputs;
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < end; ++i) {
        inputs.push_back(&data.train[order[i]].input);
        batch.push_back(&data.train[order[i]]);
      }
      const Tensor x = make_batch(inputs, data.channels, data.nz, data.nx);
      const Tensor z = net.forward(x, Mode::train, derive_seed(tcfg.seed, epoch, batch_index));
      Tensor grad(z.n, z.c, z.h, z.w);
      net.store().zero_grad();
      double loss = batch_loss(z, batch, kind, cfg.sigma_floor, &grad);
      loss += l2_penalty(net.store(), cfg.l2_factor, true);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batch_index);
      net.backward(grad);
      adam_update(net.store().values, net.store().grads, adam, hp);
      epoch_loss += loss * static_cast<double>(batch.size());
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(order.size());
    entry.val_loss = evaluate_loss(net, data.val, kind, tcfg.batch_size, data.channels, data.nz, data.nx);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(entry);

    if (entry.val_loss < result.best.best_val_loss) {
      store_weights(net, current);
      current.adam = adam;
      current.epoch = epoch;
      current.best_val_loss = entry.val_loss;
      std::ostringstream rng_state;
      rng_state << shuffle_rng;
      current.rng_state = rng_state.str();
      result.best = current;
      best_epoch = epoch;
    }
    if (epoch - best_epoch >= tcfg.patience) break;
  }
  return result;
}

}  // namespace pabcnn::nn
