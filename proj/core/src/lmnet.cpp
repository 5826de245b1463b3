#include "leafeon/lmnet.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "leafeon/errors.hpp"
#include "leafeon/random.hpp"

namespace leafeon::lmnet {
namespace {

using RowVec = Eigen::RowVectorXd;
using ConstMatMap = Eigen::Map<const Mat>;
using MatMap = Eigen::Map<Mat>;
using ConstRowMap = Eigen::Map<const RowVec>;
using RowMap = Eigen::Map<RowVec>;

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_mask(const Mat& pre, const Mat& grad) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::RssOnly: return "RSS_only";
    case Variant::RssPlusAng: return "RSS_plus_Ang";
    case Variant::Full: return "Full";
  }
  return "Full";
}

Variant variant_from_string(const std::string& s) {
  if (s == "RSS_only") return Variant::RssOnly;
  if (s == "RSS_plus_Ang") return Variant::RssPlusAng;
  if (s == "Full") return Variant::Full;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown model variant '{}'", s));
}

Batch make_batch(std::span<const features::FeatureSample> samples,
                 std::span<const std::size_t> indices, const Dims& dims) {
  Batch b;
  b.size = indices.size();
  const std::size_t rows = b.size * dims.iota;
  b.location.resize(static_cast<Eigen::Index>(rows), features::kLocationWidth);
  b.rss.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims.rss_width()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const features::FeatureSample& s = samples[indices[k]];
    if (s.iota != dims.iota || s.kappa != dims.kappa) {
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("sample is {}x{}, model expects {}x{}", s.iota, s.kappa, dims.iota,
                              dims.kappa));
    }
    const auto row = static_cast<Eigen::Index>(k * dims.iota);
    const auto n = static_cast<Eigen::Index>(dims.iota);
    b.location.middleRows(row, n) =
        ConstMatMap(s.location.data(), n, features::kLocationWidth);
    b.rss.middleRows(row, n) =
        ConstMatMap(s.rss.data(), n, static_cast<Eigen::Index>(dims.rss_width()));
  }
  return b;
}

std::size_t LmNet::add_group(const std::string& name, std::size_t size) {
  groups_.push_back({name, n_params_, size});
  n_params_ += size;
  return groups_.back().offset;
}

LmNet::Dense LmNet::add_dense(const std::string& name, std::size_t in, std::size_t out,
                              bool norm) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w = add_group(name + ".weight", in * out);
  d.b = add_group(name + ".bias", out);
  d.norm = norm;
  if (norm) {
    d.gamma = add_group(name + ".bn_gamma", out);
    d.beta = add_group(name + ".bn_beta", out);
    d.mean = n_buffers_;
    d.var = n_buffers_ + out;
    n_buffers_ += 2 * out;
  }
  return d;
}

LmNet::LmNet(const Dims& dims, Variant variant, std::uint64_t seed)
    : dims_(dims), variant_(variant) {
  if (dims.iota == 0 || dims.kappa == 0) {
    throw Error(ErrorCode::ShapeMismatch, "iota and kappa must be positive");
  }
  for (std::size_t i = 0; i + 1 < std::size(kLocationWidths); ++i) {
    location_.push_back(add_dense(fmt::format("location.{}", i), kLocationWidths[i],
                                  kLocationWidths[i + 1], true));
  }
  std::size_t in = dims.rss_width();
  for (std::size_t i = 0; i < std::size(kRssHidden); ++i) {
    rss_.push_back(add_dense(fmt::format("rss.{}", i), in, kRssHidden[i], true));
    in = kRssHidden[i];
  }
  for (auto [name, head] : {std::pair{"gate_location", &gate_a_}, std::pair{"gate_rss", &gate_r_}}) {
    head->push_back(add_dense(fmt::format("{}.0", name), kFeatureWidth, kGateHidden, false));
    head->push_back(add_dense(fmt::format("{}.1", name), kGateHidden, 1, false));
  }
  reg_w_ = add_group("regression.weight", dims.iota * kFeatureWidth);
  reg_b_ = add_group("regression.bias", 1);

  params_ = Vec::Zero(static_cast<Eigen::Index>(n_params_));
  buffers_ = Vec::Zero(static_cast<Eigen::Index>(n_buffers_));

  Rng rng = make_rng(seed, "init");
  auto fill_uniform = [&](std::size_t off, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) params_[static_cast<Eigen::Index>(off + i)] = u(rng);
  };
  for (auto* stack : {&location_, &rss_, &gate_a_, &gate_r_}) {
    for (const Dense& d : *stack) {
      fill_uniform(d.w, d.in * d.out, d.in);
      fill_uniform(d.b, d.out, d.in);
      if (d.norm) {
        params_.segment(static_cast<Eigen::Index>(d.gamma), static_cast<Eigen::Index>(d.out))
            .setOnes();
        buffers_.segment(static_cast<Eigen::Index>(d.var), static_cast<Eigen::Index>(d.out))
            .setOnes();
      }
    }
  }
  // Gate outputs start open; a ReLU head initialised near zero tends to stay shut.
  params_[static_cast<Eigen::Index>(gate_a_.back().b)] = 1.0;
  params_[static_cast<Eigen::Index>(gate_r_.back().b)] = 1.0;
  fill_uniform(reg_w_, dims.iota * kFeatureWidth, dims.iota * kFeatureWidth);
  fill_uniform(reg_b_, 1, dims.iota * kFeatureWidth);
}

void LmNet::set_regression_bias(double b) { params_[static_cast<Eigen::Index>(reg_b_)] = b; }

Mat LmNet::run_stack(const std::vector<Dense>& stack, const Mat& x, Mode mode, bool update_stats,
                     std::vector<LayerCache>* cache) {
  Mat a = x;
  if (cache) cache->resize(stack.size());
  for (std::size_t l = 0; l < stack.size(); ++l) {
    const Dense& d = stack[l];
    const auto in = static_cast<Eigen::Index>(d.in);
    const auto out = static_cast<Eigen::Index>(d.out);
    Mat z = a * ConstMatMap(params_.data() + d.w, in, out);
    z.rowwise() += ConstRowMap(params_.data() + d.b, out);
    Mat pre;
    Mat xhat;
    RowVec inv_std;
    if (d.norm) {
      RowMap run_mean(buffers_.data() + d.mean, out);
      RowMap run_var(buffers_.data() + d.var, out);
      if (mode == Mode::Train) {
        const auto n = static_cast<double>(z.rows());
        RowVec mu, var;
        xhat = normalize_batch(z, mu, var, inv_std);
        if (update_stats) {
          run_mean = (1.0 - momentum_) * run_mean + momentum_ * mu;
          const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
          run_var = (1.0 - momentum_) * run_var + momentum_ * unbias * var;
        }
      } else {
        inv_std = (run_var.array() + kBatchNormEps).rsqrt();
        z.rowwise() -= run_mean;
        xhat = z * inv_std.asDiagonal();
      }
      pre = xhat * ConstRowMap(params_.data() + d.gamma, out).asDiagonal();
      pre.rowwise() += ConstRowMap(params_.data() + d.beta, out);
    } else {
      pre = std::move(z);
    }
    Mat next = relu(pre);
    if (track_pattern_) {
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        signature_ = (signature_ ^ (pre.data()[i] > 0.0 ? 1U : 0U)) * 0x100000001b3ULL;
      }
    }
    if (cache) {
      LayerCache& c = (*cache)[l];
      c.input = std::move(a);
      c.xhat = std::move(xhat);
      c.inv_std = std::move(inv_std);
      c.pre = std::move(pre);
      c.out = next;
    }
    a = std::move(next);
  }
  return a;
}

Vec LmNet::gate(const std::vector<Dense>& head, const Mat& f, std::vector<LayerCache>* cache) {
  const Mat w = run_stack(head, f, Mode::Train, false, cache);
  return w.col(0);
}

Vec LmNet::run(const Batch& batch, Mode mode, bool update_stats, Cache* cache) {
  const auto rows = static_cast<Eigen::Index>(batch.size * dims_.iota);
  if (batch.location.rows() != rows || batch.rss.rows() != rows ||
      batch.location.cols() != static_cast<Eigen::Index>(features::kLocationWidth) ||
      batch.rss.cols() != static_cast<Eigen::Index>(dims_.rss_width())) {
    throw Error(ErrorCode::ShapeMismatch, "batch shape does not match the model dimensions");
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  signature_ = 0xcbf29ce484222325ULL;
  const bool keep = cache != nullptr;

  c.fr = run_stack(rss_, batch.rss, mode, update_stats, keep ? &c.rss : nullptr);
  if (variant_ == Variant::RssOnly) {
    c.fm = c.fr;
    c.omega_a = Vec::Zero(rows);
    c.omega_r = Vec::Ones(rows);
  } else {
    c.fa = run_stack(location_, batch.location, mode, update_stats,
                     keep ? &c.location : nullptr);
    if (variant_ == Variant::RssPlusAng) {
      c.omega_a = Vec::Ones(rows);
      c.omega_r = Vec::Ones(rows);
    } else {
      c.omega_a = override_.location ? Vec::Constant(rows, *override_.location)
                                     : gate(gate_a_, c.fa, keep ? &c.gate_a : nullptr);
      c.omega_r = override_.rss ? Vec::Constant(rows, *override_.rss)
                                : gate(gate_r_, c.fr, keep ? &c.gate_r : nullptr);
    }
    c.fm = fuse(c.fa, c.fr, c.omega_a, c.omega_r);
  }
  last_omega_a_ = c.omega_a;
  last_omega_r_ = c.omega_r;

  const auto flat = static_cast<Eigen::Index>(dims_.iota * kFeatureWidth);
  const ConstMatMap fm_flat(c.fm.data(), static_cast<Eigen::Index>(batch.size), flat);
  Vec pred = fm_flat * Eigen::Map<const Vec>(params_.data() + reg_w_, flat);
  pred.array() += params_[static_cast<Eigen::Index>(reg_b_)];
  return pred;
}

Vec LmNet::forward(const Batch& batch, Mode mode, bool update_running_stats) {
  return run(batch, mode, update_running_stats, nullptr);
}

void LmNet::refresh_batch_norm(const Batch& batch) {
  momentum_ = 1.0;
  run(batch, Mode::Train, true, nullptr);
  momentum_ = kBatchNormMomentum;
}

Mat LmNet::back_stack(const std::vector<Dense>& stack, const std::vector<LayerCache>& cache,
                      Mat grad, Vec& out) {
  for (std::size_t l = stack.size(); l-- > 0;) {
    const Dense& d = stack[l];
    const LayerCache& c = cache[l];
    const auto in = static_cast<Eigen::Index>(d.in);
    const auto width = static_cast<Eigen::Index>(d.out);
    Mat dpre = relu_mask(c.pre, grad);
    Mat dz;
    if (d.norm) {
      const auto n = static_cast<double>(dpre.rows());
      RowMap(out.data() + d.gamma, width) = (dpre.array() * c.xhat.array()).colwise().sum();
      RowMap(out.data() + d.beta, width) = dpre.colwise().sum();
      const Mat dxhat = dpre * ConstRowMap(params_.data() + d.gamma, width).asDiagonal();
      const RowVec sum_dxhat = dxhat.colwise().sum();
      const RowVec sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).colwise().sum();
      dz = n * dxhat;
      dz.rowwise() -= sum_dxhat;
      dz -= c.xhat * sum_dxhat_xhat.asDiagonal();
      dz = dz * (c.inv_std / n).asDiagonal();
    } else {
      dz = std::move(dpre);
    }
    MatMap(out.data() + d.w, in, width).noalias() = c.input.transpose() * dz;
    RowMap(out.data() + d.b, width) = dz.colwise().sum();
    grad = dz * ConstMatMap(params_.data() + d.w, in, width).transpose();
  }
  return grad;
}

Gradient LmNet::loss_and_gradient(const Batch& batch, std::span<const double> targets,
                                  bool update_running_stats) {
  if (targets.size() != batch.size) {
    throw Error(ErrorCode::ShapeMismatch, "target count differs from batch size");
  }
  Cache c;
  const Vec pred = run(batch, Mode::Train, update_running_stats, &c);
  const Eigen::Map<const Vec> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
  const Vec diff = pred - y;
  const auto bsz = static_cast<double>(batch.size);

  Gradient g;
  g.loss = diff.squaredNorm() / bsz;
  g.grad = Vec::Zero(params_.size());
  const Vec dpred = 2.0 * diff / bsz;

  const auto flat = static_cast<Eigen::Index>(dims_.iota * kFeatureWidth);
  const auto rows = static_cast<Eigen::Index>(batch.size * dims_.iota);
  const auto width = static_cast<Eigen::Index>(kFeatureWidth);
  const ConstMatMap fm_flat(c.fm.data(), static_cast<Eigen::Index>(batch.size), flat);
  Eigen::Map<Vec>(g.grad.data() + reg_w_, flat) = fm_flat.transpose() * dpred;
  g.grad[static_cast<Eigen::Index>(reg_b_)] = dpred.sum();

  Mat dfm(rows, width);
  MatMap(dfm.data(), static_cast<Eigen::Index>(batch.size), flat) =
      dpred * Eigen::Map<const Vec>(params_.data() + reg_w_, flat).transpose();

  if (variant_ == Variant::RssOnly) {
    back_stack(rss_, c.rss, dfm, g.grad);
  } else {
    Mat dfa = c.omega_a.asDiagonal() * dfm;
    Mat dfr = c.omega_r.asDiagonal() * dfm;
    if (variant_ == Variant::Full) {
      if (!override_.location) {
        const Mat domega = (dfm.array() * c.fa.array()).rowwise().sum().matrix();
        dfa += back_stack(gate_a_, c.gate_a, domega, g.grad);
      }
      if (!override_.rss) {
        const Mat domega = (dfm.array() * c.fr.array()).rowwise().sum().matrix();
        dfr += back_stack(gate_r_, c.gate_r, domega, g.grad);
      }
    }
    back_stack(location_, c.location, std::move(dfa), g.grad);
    back_stack(rss_, c.rss, std::move(dfr), g.grad);
  }
  g.dead_gate_fraction =
      static_cast<double>(((c.omega_a.array() == 0.0) && (c.omega_r.array() == 0.0)).count()) /
      static_cast<double>(rows);
  return g;
}

Mat normalize_batch(const Mat& z, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& var,
                    Eigen::RowVectorXd& inv_std) {
  const auto n = static_cast<double>(z.rows());
  mean = z.colwise().mean();
  Mat centred = z.rowwise() - mean;
  var = centred.array().square().colwise().sum() / n;
  inv_std = (var.array() + kBatchNormEps).rsqrt();
  return centred * inv_std.asDiagonal();
}

Mat fuse(const Mat& fa, const Mat& fr, const Vec& omega_a, const Vec& omega_r) {
  return omega_a.asDiagonal() * fa + omega_r.asDiagonal() * fr;
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "length mismatch");
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace leafeon::lmnet
