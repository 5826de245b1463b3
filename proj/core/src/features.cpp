#include "leafeon/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "leafeon/errors.hpp"
#include "leafeon/random.hpp"

namespace leafeon::features {
namespace {

constexpr double kAngleTolerance = 1e-9;

long long level_key(double rwc) { return std::llround(rwc * 1000.0); }

std::vector<double> flatten(const FeatureSample& s) {
  std::vector<double> v(s.location);
  v.insert(v.end(), s.rss.begin(), s.rss.end());
  return v;
}

void unflatten(std::span<const double> v, FeatureSample& s) {
  std::copy_n(v.begin(), s.location.size(), s.location.begin());
  std::copy(v.begin() + static_cast<std::ptrdiff_t>(s.location.size()), v.end(), s.rss.begin());
}

double yeo_johnson(double y, double lambda) {
  if (y >= 0.0) {
    if (std::abs(lambda) < 1e-12) return std::log1p(y);
    return (std::pow(y + 1.0, lambda) - 1.0) / lambda;
  }
  if (std::abs(lambda - 2.0) < 1e-12) return -std::log1p(-y);
  return -(std::pow(1.0 - y, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

double yeo_johnson_inverse(double x, double lambda) {
  if (x >= 0.0) {
    if (std::abs(lambda) < 1e-12) return std::expm1(x);
    return std::pow(x * lambda + 1.0, 1.0 / lambda) - 1.0;
  }
  if (std::abs(lambda - 2.0) < 1e-12) return -std::expm1(-x);
  return 1.0 - std::pow(-(2.0 - lambda) * x + 1.0, 1.0 / (2.0 - lambda));
}

}  // namespace

std::string to_string(LeafType t) {
  switch (t) {
    case LeafType::Avocado: return "Avocado";
    case LeafType::Rubra: return "Rubra";
    case LeafType::BullBay: return "BullBay";
  }
  return "Avocado";
}

LeafType leaf_type_from_string(const std::string& s) {
  if (s == "Avocado") return LeafType::Avocado;
  if (s == "Rubra") return LeafType::Rubra;
  if (s == "BullBay") return LeafType::BullBay;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown leaf type '{}'", s));
}

void Dataset::validate() const {
  for (const FeatureSample& s : samples) {
    if (s.iota != manifest.iota || s.kappa != manifest.kappa ||
        s.location.size() != s.iota * kLocationWidth ||
        s.rss.size() != s.iota * s.kappa * kZoneBins) {
      throw Error(ErrorCode::ShapeMismatch, "sample dimensions disagree with the manifest");
    }
  }
  if (manifest.samples != samples.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("manifest lists {} samples, dataset holds {}", manifest.samples,
                            samples.size()));
  }
}

double rwc_from_weights(double fresh_weight, double turgid_weight) {
  if (!(turgid_weight > 0.0)) {
    throw Error(ErrorCode::InvalidWeight, fmt::format("turgid weight {} <= 0", turgid_weight));
  }
  if (!(fresh_weight >= 0.0 && fresh_weight <= turgid_weight)) {
    throw Error(ErrorCode::InvalidWeight,
                fmt::format("fresh weight {} outside [0, {}]", fresh_weight, turgid_weight));
  }
  return fresh_weight / turgid_weight * 100.0;
}

AngleCapture extract_capture(const radar::RangeProfile& profile, const radar::ChirpConfig& cfg,
                             double steering_deg, double distance_hint,
                             const beam::AoaGrid& grid) {
  const std::array<std::size_t, 3> zone = radar::leaf_zone(profile, distance_hint);
  AngleCapture cap;
  cap.steering_deg = steering_deg;
  cap.range_m = static_cast<double>(zone[1]) * profile.bin_width;
  for (std::size_t z = 0; z < kZoneBins; ++z) {
    const beam::AoaSpectrum spec = beam::aoa_estimate(
        profile.snapshots(zone[z]), cfg.effective_rx_spacing(), cfg.wavelength(), grid);
    cap.aoa_deg[z] = spec.aoa;
  }
  cap.rss_dbfs.reserve(profile.n_rx * kZoneBins);
  for (std::size_t r = 0; r < profile.n_rx; ++r) {
    for (std::size_t z = 0; z < kZoneBins; ++z) cap.rss_dbfs.push_back(profile.dbfs(r, zone[z]));
  }
  return cap;
}

FeatureSample build_sample(std::vector<AngleCapture> captures,
                           std::span<const double> expected_angles, double distance, double rwc,
                           std::uint32_t group) {
  if (expected_angles.empty()) throw Error(ErrorCode::MissingAngle, "no steering angles expected");
  for (double eta : expected_angles) {
    const auto hits = std::count_if(captures.begin(), captures.end(), [&](const AngleCapture& c) {
      return std::abs(c.steering_deg - eta) < kAngleTolerance;
    });
    if (hits != 1) {
      throw Error(ErrorCode::MissingAngle,
                  fmt::format("steering angle {} deg captured {} times", eta, hits));
    }
  }
  if (captures.size() != expected_angles.size()) {
    throw Error(ErrorCode::MissingAngle, "captures contain unexpected steering angles");
  }
  std::sort(captures.begin(), captures.end(),
            [](const AngleCapture& a, const AngleCapture& b) { return a.steering_deg < b.steering_deg; });

  FeatureSample s;
  s.iota = captures.size();
  s.kappa = captures.front().rss_dbfs.size() / kZoneBins;
  s.rwc = rwc;
  s.distance = distance;
  s.group = group;
  for (const AngleCapture& c : captures) {
    if (c.rss_dbfs.size() != s.kappa * kZoneBins) {
      throw Error(ErrorCode::ShapeMismatch, "captures disagree on the Rx count");
    }
    s.location.insert(s.location.end(),
                      {c.steering_deg, c.aoa_deg[0], c.aoa_deg[1], c.aoa_deg[2], c.range_m});
    s.rss.insert(s.rss.end(), c.rss_dbfs.begin(), c.rss_dbfs.end());
  }
  return s;
}

FeatureSample select_angles(const FeatureSample& s, std::span<const double> angles) {
  FeatureSample out;
  out.kappa = s.kappa;
  out.rwc = s.rwc;
  out.distance = s.distance;
  out.group = s.group;
  std::vector<double> sorted(angles.begin(), angles.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rss_row = s.kappa * kZoneBins;
  for (double eta : sorted) {
    std::size_t i = 0;
    while (i < s.iota && std::abs(s.steering_deg(i) - eta) >= kAngleTolerance) ++i;
    if (i == s.iota) {
      throw Error(ErrorCode::MissingAngle, fmt::format("sample has no {} deg capture", eta));
    }
    auto loc = s.location.begin() + static_cast<std::ptrdiff_t>(i * kLocationWidth);
    out.location.insert(out.location.end(), loc, loc + kLocationWidth);
    auto rss = s.rss.begin() + static_cast<std::ptrdiff_t>(i * rss_row);
    out.rss.insert(out.rss.end(), rss, rss + static_cast<std::ptrdiff_t>(rss_row));
  }
  out.iota = sorted.size();
  return out;
}

namespace {

// Kept out of line: GCC 11 at -O3 SLP-vectorises paired double->float->double
// round trips into no-ops.
[[gnu::noinline]] double to_float_precision(double v) {
  return static_cast<double>(static_cast<float>(v));
}

}  // namespace

void round_to_storage(FeatureSample& s) {
  s.rwc = to_float_precision(s.rwc);
  s.distance = to_float_precision(s.distance);
  for (double& v : s.location) v = to_float_precision(v);
  for (double& v : s.rss) v = to_float_precision(v);
}

double PowerTransform::forward(double y) const {
  return (yeo_johnson(y, lambda) - mean) / stddev;
}

double PowerTransform::inverse(double z) const {
  return yeo_johnson_inverse(z * stddev + mean, lambda);
}

PowerTransform PowerTransform::fit(std::span<const double> y) {
  if (y.size() < 2) throw Error(ErrorCode::TooFewSamples, "power transform needs >= 2 targets");
  const auto n = static_cast<double>(y.size());
  double log_jacobian = 0.0;
  for (double v : y) log_jacobian += std::copysign(std::log1p(std::abs(v)), v);

  auto moments = [&](double lambda) {
    double mean = 0.0;
    for (double v : y) mean += yeo_johnson(v, lambda);
    mean /= n;
    double var = 0.0;
    for (double v : y) {
      const double d = yeo_johnson(v, lambda) - mean;
      var += d * d;
    }
    return std::pair{mean, var / n};
  };
  auto neg_log_likelihood = [&](double lambda) {
    const double var = moments(lambda).second;
    if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
    return 0.5 * n * std::log(var) - (lambda - 1.0) * log_jacobian;
  };
  const auto [lambda, nll] =
      boost::math::tools::brent_find_minima(neg_log_likelihood, -3.0, 3.0, 40);
  (void)nll;
  const auto [mean, var] = moments(lambda);
  return {lambda, mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

FeatureSample Scaler::apply(const FeatureSample& s) const {
  std::vector<double> v = flatten(s);
  if (v.size() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "scaler width mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mean[i]) / stddev[i];
  FeatureSample out = s;
  unflatten(v, out);
  return out;
}

FeatureSample Scaler::invert(const FeatureSample& s) const {
  std::vector<double> v = flatten(s);
  if (v.size() != mean.size()) throw Error(ErrorCode::ShapeMismatch, "scaler width mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] * stddev[i] + mean[i];
  FeatureSample out = s;
  unflatten(v, out);
  return out;
}

Scaler fit_scaler(std::span<const FeatureSample> samples,
                  std::span<const std::size_t> train_indices, bool power_transform_target) {
  if (train_indices.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "scaler needs at least two training samples");
  }
  const std::size_t width = samples[train_indices.front()].input_size();
  const auto n = static_cast<double>(train_indices.size());
  Scaler sc;
  sc.mean.assign(width, 0.0);
  sc.stddev.assign(width, 0.0);
  sc.degenerate.assign(width, false);
  sc.fitted_on.assign(train_indices.begin(), train_indices.end());

  for (std::size_t idx : train_indices) {
    const std::vector<double> v = flatten(samples[idx]);
    if (v.size() != width) throw Error(ErrorCode::ShapeMismatch, "ragged feature widths");
    for (std::size_t i = 0; i < width; ++i) sc.mean[i] += v[i];
  }
  for (double& m : sc.mean) m /= n;
  for (std::size_t idx : train_indices) {
    const std::vector<double> v = flatten(samples[idx]);
    for (std::size_t i = 0; i < width; ++i) {
      const double d = v[i] - sc.mean[i];
      sc.stddev[i] += d * d;
    }
  }
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < width; ++i) {
    sc.stddev[i] = std::sqrt(sc.stddev[i] / n);
    if (!(sc.stddev[i] > 1e-12 * std::max(1.0, std::abs(sc.mean[i])))) {
      sc.degenerate[i] = true;
      sc.mean[i] = 0.0;
      sc.stddev[i] = 1.0;
      ++flagged;
    }
  }
  if (flagged > 0) {
    spdlog::info("scaler: {} of {} features have zero variance and pass through unscaled",
                 flagged, width);
  }
  if (power_transform_target) {
    std::vector<double> y;
    for (std::size_t idx : train_indices) y.push_back(samples[idx].rwc);
    sc.target = PowerTransform::fit(y);
  }
  return sc;
}

std::vector<Fold> kfold_split(std::span<const FeatureSample> samples, std::size_t k,
                              std::uint64_t seed) {
  if (k < 2 || k > samples.size()) {
    throw Error(ErrorCode::TooFewSamples,
                fmt::format("cannot split {} samples into {} folds", samples.size(), k));
  }
  std::map<long long, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < samples.size(); ++i) by_level[level_key(samples[i].rwc)].push_back(i);

  std::vector<std::size_t> fold_of(samples.size());
  std::size_t cursor = 0;
  for (auto& [level, idx] : by_level) {
    Rng rng = make_rng(seed, "kfold", {static_cast<std::uint64_t>(level)});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) fold_of[i] = cursor++ % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].label = fmt::format("fold{}", f);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
    }
  }
  return folds;
}

std::vector<Fold> logo_split(std::span<const FeatureSample> samples) {
  std::map<long long, std::vector<std::size_t>> by_distance;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_distance[std::llround(samples[i].distance * 1e6)].push_back(i);
  }
  if (by_distance.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "leave-one-group-out needs at least two distances");
  }
  std::vector<Fold> folds;
  for (const auto& [key, members] : by_distance) {
    Fold f;
    f.label = fmt::format("d={:.3f}m", static_cast<double>(key) * 1e-6);
    f.test = members;
    for (const auto& [other, idx] : by_distance) {
      if (other != key) f.train.insert(f.train.end(), idx.begin(), idx.end());
    }
    std::sort(f.train.begin(), f.train.end());
    folds.push_back(std::move(f));
  }
  return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::span<const FeatureSample> samples, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed) {
  std::map<long long, std::vector<std::size_t>> by_level;
  for (std::size_t i : pool) by_level[level_key(samples[i].rwc)].push_back(i);
  std::vector<std::size_t> train, val;
  double carry = 0.0;
  for (auto& [level, idx] : by_level) {
    Rng rng = make_rng(seed, "holdout", {static_cast<std::uint64_t>(level)});
    std::shuffle(idx.begin(), idx.end(), rng);
    carry += fraction * static_cast<double>(idx.size());
    auto take = static_cast<std::size_t>(std::floor(carry));
    take = std::min(take, idx.size() > 1 ? idx.size() - 1 : std::size_t{0});
    carry -= static_cast<double>(take);
    val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  if (val.empty() && train.size() > 1) {
    val.push_back(train.back());
    train.pop_back();
  }
  return {train, val};
}

}  // namespace leafeon::features
