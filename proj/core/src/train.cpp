#include "leafeon/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "leafeon/errors.hpp"
#include "leafeon/random.hpp"

namespace leafeon::lmnet {
namespace {

std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

void adamw_step(Vec& params, const Vec& grad, AdamState& state, const AdamWConfig& cfg) {
  if (state.m.size() != params.size()) state = AdamState::zeros(params.size());
  ++state.t;
  params *= 1.0 - cfg.lr * cfg.weight_decay;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  params.array() -= cfg.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorCode::ConfigError, "lr must be positive");
  if (batch_size < 1) throw Error(ErrorCode::ConfigError, "batch_size must be >= 1");
  if (decay_every < 1) throw Error(ErrorCode::ConfigError, "decay_every must be >= 1");
  if (!(lr_decay > 0.0)) throw Error(ErrorCode::ConfigError, "lr_decay must be positive");
  if (max_epochs < 1) throw Error(ErrorCode::ConfigError, "max_epochs must be >= 1");
}

double TrainConfig::lr_at(std::size_t epoch) const {
  return lr * std::pow(lr_decay, static_cast<double>(epoch / decay_every));
}

std::vector<double> predict(LmNet& net, std::span<const features::FeatureSample> samples,
                            std::span<const std::size_t> indices, std::size_t chunk) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += chunk) {
    const auto part = indices.subspan(start, std::min(chunk, indices.size() - start));
    const Vec p = net.forward(make_batch(samples, part, net.dims()), Mode::Eval);
    out.insert(out.end(), p.data(), p.data() + p.size());
  }
  return out;
}

TrainReport train(LmNet& net, std::span<const features::FeatureSample> samples,
                  std::span<const double> targets, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> val_idx, const TrainConfig& cfg,
                  AdamState* optimizer) {
  cfg.validate();
  if (train_idx.size() < 2) throw Error(ErrorCode::TooFewSamples, "need >= 2 training samples");
  if (val_idx.empty()) throw Error(ErrorCode::TooFewSamples, "validation split is empty");
  if (targets.size() != samples.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one target per sample required");
  }

  const std::vector<double> train_targets = gather(targets, train_idx);
  const std::vector<double> val_targets = gather(targets, val_idx);
  net.set_regression_bias(std::accumulate(train_targets.begin(), train_targets.end(), 0.0) /
                          static_cast<double>(train_targets.size()));

  AdamState local;
  AdamState& state = optimizer ? *optimizer : local;
  state = AdamState::zeros(net.params().size());

  TrainReport report;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  Vec best_params = net.params();
  Vec best_buffers = net.buffers();
  std::size_t bad_epochs = 0;
  double dead_sum = 0.0;
  std::size_t batches = 0;

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const AdamWConfig step{cfg.lr_at(epoch), cfg.weight_decay};
    Rng rng = make_rng(cfg.seed, "shuffle", {epoch});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();) {
      const std::size_t remaining = order.size() - start;
      std::size_t len = std::min(std::max<std::size_t>(cfg.batch_size, 2), remaining);
      if (remaining - len == 1) ++len;
      const std::span<const std::size_t> part(order.data() + start, len);
      std::vector<double> y;
      y.reserve(len);
      for (std::size_t i : part) y.push_back(targets[i]);
      const Gradient g = net.loss_and_gradient(make_batch(samples, part, net.dims()), y);
      if (!std::isfinite(g.loss) || !g.grad.allFinite()) {
        throw Error(ErrorCode::Diverged, fmt::format("non-finite loss in epoch {}", epoch));
      }
      adamw_step(net.params(), g.grad, state, step);
      loss_sum += g.loss * static_cast<double>(len);
      dead_sum += g.dead_gate_fraction;
      ++batches;
      start += len;
    }
    // Two or three steps per epoch leave momentum-averaged statistics far
    // behind the weights, so re-estimate them on the whole training split.
    net.refresh_batch_norm(make_batch(samples, train_idx, net.dims()));
    const double train_loss = loss_sum / static_cast<double>(order.size());
    const std::vector<double> val_pred = predict(net, samples, val_idx);
    const double val_loss = mse(val_pred, val_targets);
    if (!std::isfinite(val_loss)) {
      throw Error(ErrorCode::Diverged, fmt::format("non-finite validation loss in epoch {}", epoch));
    }
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    report.epochs_run = epoch + 1;
    spdlog::debug("epoch {:3d} lr {:.3e} train {:.5f} val {:.5f}", epoch, step.lr, train_loss,
                  val_loss);

    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_epoch = epoch;
      best_params = net.params();
      best_buffers = net.buffers();
      bad_epochs = 0;
    } else if (++bad_epochs > cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }
  net.params() = best_params;
  net.buffers() = best_buffers;
  report.dead_gate_fraction = batches ? dead_sum / static_cast<double>(batches) : 0.0;
  if (report.dead_gate_fraction > 0.0) {
    spdlog::info("both fusion weights were zero on {:.2f}% of training rows",
                 100.0 * report.dead_gate_fraction);
  }
  return report;
}

}  // namespace leafeon::lmnet
