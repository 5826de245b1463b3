#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leafeon/beam.hpp"
#include "leafeon/radar.hpp"

namespace leafeon::features {

enum class LeafType { Avocado, Rubra, BullBay };

std::string to_string(LeafType t);
LeafType leaf_type_from_string(const std::string& s);

inline constexpr std::size_t kLocationWidth = 5;  // eta, aoa(t-1), aoa(t), aoa(t+1), d_t
inline constexpr std::size_t kZoneBins = 3;

/// Everything one steering angle contributes to a sample.
struct AngleCapture {
  double steering_deg = 0.0;
  std::array<double, kZoneBins> aoa_deg{};  // bins t-1, t, t+1
  std::vector<double> rss_dbfs;             // [rx][zone bin], kappa x 3
  double range_m = 0.0;                     // centre of bin t
};

/// One training example. location is iota x 5 and rss is iota x kappa x 3,
/// both row-major with the steering angles ascending.
struct FeatureSample {
  std::size_t iota = 0;
  std::size_t kappa = 0;
  std::vector<double> location;
  std::vector<double> rss;
  double rwc = 0.0;
  double distance = 0.0;
  std::uint32_t group = 0;

  std::size_t input_size() const { return location.size() + rss.size(); }
  double steering_deg(std::size_t i) const { return location[i * kLocationWidth]; }
};

struct DatasetManifest {
  std::size_t samples = 0;
  LeafType leaf_type = LeafType::Avocado;
  std::vector<double> rwc_levels;
  std::size_t placements_per_level = 0;
  std::vector<double> distances;
  std::vector<double> steering_angles;
  std::size_t iota = 0;
  std::size_t kappa = 0;
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<FeatureSample> samples;

  /// Throws ShapeMismatch if any sample disagrees with the manifest dims.
  void validate() const;
};

/// RWC = fresh / turgid * 100. InvalidWeight when turgid <= 0 or the fresh
/// weight is negative or exceeds the turgid weight.
double rwc_from_weights(double fresh_weight, double turgid_weight);

/// Range FFT output of one steering angle -> leaf zone, Capon AoA of each of
/// the three bins over the chirp snapshots, and the kappa x 3 dBFS block.
AngleCapture extract_capture(const radar::RangeProfile& profile, const radar::ChirpConfig& cfg,
                             double steering_deg, double distance_hint,
                             const beam::AoaGrid& grid = {});

/// Orders captures by steering angle and flattens them. Every angle in
/// `expected_angles` must appear exactly once (MissingAngle otherwise).
FeatureSample build_sample(std::vector<AngleCapture> captures,
                           std::span<const double> expected_angles, double distance, double rwc,
                           std::uint32_t group = 0);

/// Keeps only the listed steering angles of a sample (angle-count sweeps).
FeatureSample select_angles(const FeatureSample& s, std::span<const double> angles);

/// Rounds every feature and label to float32 precision, the precision of the
/// dataset container.
void round_to_storage(FeatureSample& s);

/// Yeo-Johnson transform with lambda fitted by maximum likelihood, followed
/// by standardisation.
struct PowerTransform {
  double lambda = 1.0;
  double mean = 0.0;
  double stddev = 1.0;

  double forward(double y) const;
  double inverse(double z) const;
  static PowerTransform fit(std::span<const double> y);
};

/// Per-feature z-score fitted on a training split.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> degenerate;        // zero variance, passed through
  std::vector<std::size_t> fitted_on;  // provenance: sample indices used
  std::optional<PowerTransform> target;

  FeatureSample apply(const FeatureSample& s) const;
  FeatureSample invert(const FeatureSample& s) const;
  double transform_target(double rwc) const { return target ? target->forward(rwc) : rwc; }
  double inverse_target(double z) const { return target ? target->inverse(z) : z; }
};

/// Fits on samples[train_indices] only. Needs at least two samples
/// (TooFewSamples). Zero-variance features are flagged and logged.
Scaler fit_scaler(std::span<const FeatureSample> samples,
                  std::span<const std::size_t> train_indices, bool power_transform_target = false);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::string label;
};

/// Stratified (by RWC level) k-fold partition, deterministic under seed.
std::vector<Fold> kfold_split(std::span<const FeatureSample> samples, std::size_t k,
                              std::uint64_t seed);

/// One fold per distinct distance; each test fold is one unseen distance.
std::vector<Fold> logo_split(std::span<const FeatureSample> samples);

/// Stratified hold-out of roughly `fraction` of `pool` for validation.
/// Returns {train, validation}.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::span<const FeatureSample> samples, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed);

}  // namespace leafeon::features
