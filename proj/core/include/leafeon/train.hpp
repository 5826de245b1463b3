#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leafeon/lmnet.hpp"

namespace leafeon::lmnet {

struct AdamWConfig {
  double lr = 0.005;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  std::uint64_t t = 0;

  static AdamState zeros(Eigen::Index n) { return {Vec::Zero(n), Vec::Zero(n), 0}; }
};

/// One AdamW update: p <- p (1 - lr wd), then the bias-corrected Adam step.
void adamw_step(Vec& params, const Vec& grad, AdamState& state, const AdamWConfig& cfg);

struct TrainConfig {
  double lr = 0.005;
  double weight_decay = 1e-5;
  double lr_decay = 0.8;
  std::size_t decay_every = 2;  // epochs
  std::size_t batch_size = 256;
  std::size_t max_epochs = 80;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(std::size_t epoch) const;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  double dead_gate_fraction = 0.0;  // mean over all training batches
};

/// Mini-batch AdamW on samples[train] against targets (already in model
/// target space), validating on samples[val] after every epoch. The network
/// is left holding the parameters of the best validation epoch. A size-1
/// tail batch is merged into the previous batch (batch norm needs >= 2 rows).
/// Throws Diverged on a non-finite loss.
TrainReport train(LmNet& net, std::span<const features::FeatureSample> samples,
                  std::span<const double> targets, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> val_idx, const TrainConfig& cfg,
                  AdamState* optimizer = nullptr);

/// Eval-mode predictions for samples[indices], in model target space.
std::vector<double> predict(LmNet& net, std::span<const features::FeatureSample> samples,
                            std::span<const std::size_t> indices, std::size_t chunk = 512);

}  // namespace leafeon::lmnet
