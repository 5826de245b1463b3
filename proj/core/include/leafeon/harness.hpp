#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafeon/beam.hpp"
#include "leafeon/features.hpp"
#include "leafeon/leaf.hpp"
#include "leafeon/lmnet.hpp"
#include "leafeon/radar.hpp"
#include "leafeon/raw_adc.hpp"
#include "leafeon/train.hpp"

namespace leafeon::harness {

enum class Split { KFold, LogoDistance };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Leaf geometry and surface presets: Avocado large and smooth, Rubra small
/// and smooth, BullBay rough (RMS height well above lambda / 32).
leaf::LeafSpec leaf_preset(features::LeafType type);

struct ExperimentConfig {
  features::LeafType leaf_type = features::LeafType::Avocado;
  leaf::LeafSpec leaf = leaf_preset(features::LeafType::Avocado);
  std::vector<double> rwc_levels{50, 60, 70, 80, 90, 100};
  std::size_t placements_per_level = 20;
  std::vector<double> distances{0.6};
  std::vector<double> steering_angles = beam::default_steering_angles();
  double placement_jitter_deg = 5.0;  // offset and aspect drawn from +-jitter
  double snr_db = 30.0;
  std::vector<radar::BackgroundReflector> background;
  radar::ChirpConfig chirp;
  beam::AoaGrid aoa_grid;
  std::uint64_t seed = 1;

  lmnet::TrainConfig train;
  Split split = Split::KFold;
  std::size_t folds = 10;
  double validation_fraction = 0.1;
  bool power_transform_target = false;
  std::vector<lmnet::Variant> variants{lmnet::Variant::Full};
  std::vector<std::size_t> angle_counts{1, 3, 5, 7, 9, 11};

  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> raw_dump;
  bool save_checkpoints = true;

  std::size_t expected_samples() const {
    return rwc_levels.size() * placements_per_level * distances.size();
  }
  void validate() const;
};

/// Reads a JSON config on top of the defaults. "leaf_type" selects the preset
/// first; a "leaf" object then overrides individual preset fields. Unknown
/// keys raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Mean |pred - target|. EmptyInput on empty input, ShapeMismatch on unequal lengths.
double mae(std::span<const double> pred, std::span<const double> target);

struct BucketMae {
  double lo = 0.0;
  double hi = 0.0;  // exclusive except for the last bucket
  std::size_t count = 0;
  double mae = 0.0;
};

/// 10 % RWC buckets [50,60) ... [90,100].
std::vector<BucketMae> bucket_mae(std::span<const double> pred, std::span<const double> target);

/// Synthesises every (level, placement, distance) capture and extracts its
/// features. When `dump` is set, every frame is also written to it.
features::Dataset simulate_dataset(const ExperimentConfig& cfg,
                                   radar::RawAdcWriter* dump = nullptr);

/// Runs the simulation feature pipeline over the frames of a raw capture.
features::Dataset ingest_raw(const std::filesystem::path& raw, const ExperimentConfig& cfg);

/// Mean leaf-bin (centre zone bin) dBFS per RWC level and its least-squares
/// slope in dB per % RWC.
struct RssTrend {
  std::vector<double> levels;
  std::vector<double> mean_dbfs;
  double slope = 0.0;
};
RssTrend rss_trend(const features::Dataset& ds);

struct FoldResult {
  std::string label;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  double mae = 0.0;
  lmnet::TrainReport train;
};

struct VariantResult {
  lmnet::Variant variant = lmnet::Variant::Full;
  std::size_t iota = 0;
  double overall_mae = 0.0;
  std::vector<BucketMae> buckets;
  std::vector<FoldResult> folds;
  std::vector<double> predictions;  // per sample, from the fold that held it out
  std::vector<double> targets;
};

/// Cross-validates one model variant. For each fold a stratified validation
/// set is held out of the training part, the scaler is fitted on what
/// remains, and the best-validation model predicts the test fold.
VariantResult cross_validate(const features::Dataset& ds, lmnet::Variant variant,
                             const ExperimentConfig& cfg,
                             const std::optional<std::filesystem::path>& checkpoint_dir = {});

struct AnglePoint {
  std::size_t count = 0;
  std::vector<double> angles;
  double mae = 0.0;
};

struct MetricsReport {
  features::DatasetManifest dataset;
  Split split = Split::KFold;
  std::uint64_t seed = 0;
  std::vector<VariantResult> variants;
  std::vector<AnglePoint> angle_sweep;
};

nlohmann::json report_to_json(const MetricsReport& r);
/// Writes report.json plus predictions.csv, learning_curves.csv and, when
/// present, angle_sweep.csv into `dir`.
void write_report(const std::filesystem::path& dir, const MetricsReport& r);

// Subcommands. Each writes its artefacts under cfg.out_dir.
features::Dataset cmd_simulate(const ExperimentConfig& cfg);
MetricsReport cmd_train(const features::Dataset& ds, const ExperimentConfig& cfg);
MetricsReport cmd_angle_sweep(const features::Dataset& ds, const ExperimentConfig& cfg);
features::Dataset cmd_ingest(const std::filesystem::path& raw, const ExperimentConfig& cfg);
nlohmann::json cmd_eval(const std::filesystem::path& checkpoint, const features::Dataset& ds,
                        const ExperimentConfig& cfg);

}  // namespace leafeon::harness
