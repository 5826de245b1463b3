#include "leafeon/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "leafeon/checkpoint.hpp"
#include "leafeon/dataset_io.hpp"
#include "leafeon/errors.hpp"
#include "leafeon/random.hpp"
#include "leafeon/raw_adc.hpp"

namespace leafeon::harness {
namespace {

using nlohmann::json;
using features::Dataset;
using features::FeatureSample;

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::ConfigError, fmt::format("{} must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::ConfigError, fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::ofstream open_text(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

features::DatasetManifest manifest_for(const ExperimentConfig& cfg, std::size_t samples) {
  features::DatasetManifest m;
  m.samples = samples;
  m.leaf_type = cfg.leaf_type;
  m.rwc_levels = cfg.rwc_levels;
  m.placements_per_level = cfg.placements_per_level;
  m.distances = cfg.distances;
  m.steering_angles = cfg.steering_angles;
  std::sort(m.steering_angles.begin(), m.steering_angles.end());
  m.iota = cfg.steering_angles.size();
  m.kappa = cfg.chirp.rx_count;
  m.seed = cfg.seed;
  return m;
}

void write_dataset_files(const std::filesystem::path& dir, const std::string& stem,
                         const Dataset& ds) {
  features::write_dataset(dir / (stem + ".lfds"), ds);
  features::write_manifest_json(dir / (stem + ".manifest.json"), ds.manifest);
  features::write_dataset_csv(dir / (stem + ".csv"), ds);
}

json buckets_to_json(const std::vector<BucketMae>& buckets) {
  json out = json::array();
  for (const BucketMae& b : buckets) {
    out.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mae", b.mae}});
  }
  return out;
}

}  // namespace

std::string to_string(Split s) { return s == Split::KFold ? "kfold" : "logo_distance"; }

Split split_from_string(const std::string& s) {
  if (s == "kfold" || s == "kfold10") return Split::KFold;
  if (s == "logo_distance") return Split::LogoDistance;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown split '{}'", s));
}

leaf::LeafSpec leaf_preset(features::LeafType type) {
  leaf::LeafSpec s;
  switch (type) {
    case features::LeafType::Avocado:
      s.length = 0.15;
      s.width = 0.06;
      s.roughness_sigma = 0.05e-3;
      s.correlation_length = 8e-3;
      break;
    case features::LeafType::Rubra:
      s.length = 0.08;
      s.width = 0.04;
      s.roughness_sigma = 0.08e-3;
      s.correlation_length = 6e-3;
      break;
    case features::LeafType::BullBay:
      s.length = 0.18;
      s.width = 0.08;
      s.roughness_sigma = 0.45e-3;
      s.correlation_length = 3e-3;
      break;
  }
  return s;
}

void ExperimentConfig::validate() const {
  leaf.validate();
  chirp.validate();
  train.validate();
  if (rwc_levels.empty() || distances.empty() || steering_angles.empty()) {
    throw Error(ErrorCode::ConfigError, "rwc_levels, distances and steering_angles must be nonempty");
  }
  if (placements_per_level < 1) throw Error(ErrorCode::ConfigError, "placements_per_level < 1");
  for (double r : rwc_levels) {
    if (!(r >= 0.0 && r <= 100.0)) throw Error(ErrorCode::ConfigError, fmt::format("RWC level {} outside [0, 100]", r));
  }
  if (std::set<double>(steering_angles.begin(), steering_angles.end()).size() != steering_angles.size()) {
    throw Error(ErrorCode::ConfigError, "duplicate steering angles");
  }
  if (!(placement_jitter_deg >= 0.0 && placement_jitter_deg <= 10.0)) {
    throw Error(ErrorCode::ConfigError, "placement_jitter_deg must lie in [0, 10]");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "validation_fraction must lie in (0, 1)");
  }
  if (variants.empty()) throw Error(ErrorCode::ConfigError, "no model variants requested");
  for (std::size_t c : angle_counts) {
    if (c < 1) throw Error(ErrorCode::ConfigError, "angle counts must be >= 1");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    check_keys(j, "config",
               {"leaf_type", "leaf", "rwc_levels", "placements_per_level", "distances",
                "steering_angles", "placement_jitter_deg", "snr_db", "background", "chirp",
                "aoa_grid", "seed", "train", "split", "folds", "validation_fraction",
                "power_transform_target", "variants", "angle_counts", "out_dir", "raw_dump",
                "save_checkpoints"});
    if (j.contains("leaf_type")) {
      cfg.leaf_type = features::leaf_type_from_string(j.at("leaf_type").get<std::string>());
      cfg.leaf = leaf_preset(cfg.leaf_type);
    }
    if (j.contains("leaf")) {
      const json& l = j.at("leaf");
      check_keys(l, "leaf",
                 {"length", "width", "total_thickness", "palisade_fraction", "roughness_sigma",
                  "correlation_length", "turgid_water_fraction_palisade", "backing"});
      read(l, "length", cfg.leaf.length);
      read(l, "width", cfg.leaf.width);
      read(l, "total_thickness", cfg.leaf.total_thickness);
      read(l, "palisade_fraction", cfg.leaf.palisade_fraction);
      read(l, "roughness_sigma", cfg.leaf.roughness_sigma);
      read(l, "correlation_length", cfg.leaf.correlation_length);
      read(l, "turgid_water_fraction_palisade", cfg.leaf.turgid_water_fraction_palisade);
      if (l.contains("backing")) {
        const auto b = l.at("backing").get<std::array<double, 2>>();
        cfg.leaf.backing = {b[0], b[1]};
      }
    }
    read(j, "rwc_levels", cfg.rwc_levels);
    read(j, "placements_per_level", cfg.placements_per_level);
    read(j, "distances", cfg.distances);
    read(j, "steering_angles", cfg.steering_angles);
    read(j, "placement_jitter_deg", cfg.placement_jitter_deg);
    if (j.contains("snr_db")) {
      cfg.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                            : j.at("snr_db").get<double>();
    }
    if (j.contains("background")) {
      for (const json& b : j.at("background")) {
        check_keys(b, "background", {"range_m", "rcs_dbsm"});
        cfg.background.push_back({b.at("range_m").get<double>(), b.value("rcs_dbsm", -30.0)});
      }
    }
    if (j.contains("chirp")) {
      const json& c = j.at("chirp");
      check_keys(c, "chirp",
                 {"f_start", "bandwidth", "slope", "idle_time", "ramp_start", "ramp_end",
                  "adc_samples", "sample_rate", "n_chirps", "chirp_time", "frame_length",
                  "tx_count", "rx_count", "rx_spacing", "tx_spacings", "tx_gain", "rx_gain",
                  "tx_amplitude"});
      radar::ChirpConfig& ch = cfg.chirp;
      read(c, "f_start", ch.f_start);
      read(c, "bandwidth", ch.bandwidth);
      read(c, "slope", ch.slope);
      read(c, "idle_time", ch.idle_time);
      read(c, "ramp_start", ch.ramp_start);
      read(c, "ramp_end", ch.ramp_end);
      read(c, "adc_samples", ch.adc_samples);
      read(c, "sample_rate", ch.sample_rate);
      read(c, "n_chirps", ch.n_chirps);
      read(c, "chirp_time", ch.chirp_time);
      read(c, "frame_length", ch.frame_length);
      read(c, "tx_count", ch.tx_count);
      read(c, "rx_count", ch.rx_count);
      read(c, "rx_spacing", ch.rx_spacing);
      read(c, "tx_spacings", ch.tx_spacings);
      read(c, "tx_gain", ch.tx_gain);
      read(c, "rx_gain", ch.rx_gain);
      read(c, "tx_amplitude", ch.tx_amplitude);
    }
    if (j.contains("aoa_grid")) {
      const json& g = j.at("aoa_grid");
      check_keys(g, "aoa_grid", {"start_deg", "stop_deg", "step_deg"});
      read(g, "start_deg", cfg.aoa_grid.start_deg);
      read(g, "stop_deg", cfg.aoa_grid.stop_deg);
      read(g, "step_deg", cfg.aoa_grid.step_deg);
    }
    read(j, "seed", cfg.seed);
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train",
                 {"lr", "weight_decay", "lr_decay", "decay_every", "batch_size", "max_epochs",
                  "patience"});
      read(t, "lr", cfg.train.lr);
      read(t, "weight_decay", cfg.train.weight_decay);
      read(t, "lr_decay", cfg.train.lr_decay);
      read(t, "decay_every", cfg.train.decay_every);
      read(t, "batch_size", cfg.train.batch_size);
      read(t, "max_epochs", cfg.train.max_epochs);
      read(t, "patience", cfg.train.patience);
    }
    if (j.contains("split")) cfg.split = split_from_string(j.at("split").get<std::string>());
    read(j, "folds", cfg.folds);
    read(j, "validation_fraction", cfg.validation_fraction);
    read(j, "power_transform_target", cfg.power_transform_target);
    if (j.contains("variants")) {
      cfg.variants.clear();
      for (const json& v : j.at("variants")) {
        cfg.variants.push_back(lmnet::variant_from_string(v.get<std::string>()));
      }
    }
    read(j, "angle_counts", cfg.angle_counts);
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("raw_dump") && !j.at("raw_dump").is_null()) {
      cfg.raw_dump = j.at("raw_dump").get<std::string>();
    }
    read(j, "save_checkpoints", cfg.save_checkpoints);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("bad config value: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("{}: {}", path.string(), e.what()));
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  const leaf::LeafSpec& l = cfg.leaf;
  const radar::ChirpConfig& c = cfg.chirp;
  json variants = json::array();
  for (lmnet::Variant v : cfg.variants) variants.push_back(lmnet::to_string(v));
  json background = json::array();
  for (const auto& b : cfg.background) background.push_back({{"range_m", b.range_m}, {"rcs_dbsm", b.rcs_dbsm}});
  return {
      {"leaf_type", features::to_string(cfg.leaf_type)},
      {"leaf",
       {{"length", l.length},
        {"width", l.width},
        {"total_thickness", l.total_thickness},
        {"palisade_fraction", l.palisade_fraction},
        {"roughness_sigma", l.roughness_sigma},
        {"correlation_length", l.correlation_length},
        {"turgid_water_fraction_palisade", l.turgid_water_fraction_palisade},
        {"backing", {l.backing.real_part, l.backing.imag_part}}}},
      {"rwc_levels", cfg.rwc_levels},
      {"placements_per_level", cfg.placements_per_level},
      {"distances", cfg.distances},
      {"steering_angles", cfg.steering_angles},
      {"placement_jitter_deg", cfg.placement_jitter_deg},
      {"snr_db", std::isfinite(cfg.snr_db) ? json(cfg.snr_db) : json(nullptr)},
      {"background", background},
      {"chirp",
       {{"f_start", c.f_start},
        {"bandwidth", c.bandwidth},
        {"slope", c.slope},
        {"idle_time", c.idle_time},
        {"ramp_start", c.ramp_start},
        {"ramp_end", c.ramp_end},
        {"adc_samples", c.adc_samples},
        {"sample_rate", c.sample_rate},
        {"n_chirps", c.n_chirps},
        {"chirp_time", c.chirp_time},
        {"frame_length", c.frame_length},
        {"tx_count", c.tx_count},
        {"rx_count", c.rx_count},
        {"rx_spacing", c.rx_spacing},
        {"tx_spacings", c.tx_spacings},
        {"tx_gain", c.tx_gain},
        {"rx_gain", c.rx_gain},
        {"tx_amplitude", c.tx_amplitude}}},
      {"aoa_grid",
       {{"start_deg", cfg.aoa_grid.start_deg},
        {"stop_deg", cfg.aoa_grid.stop_deg},
        {"step_deg", cfg.aoa_grid.step_deg}}},
      {"seed", cfg.seed},
      {"train",
       {{"lr", cfg.train.lr},
        {"weight_decay", cfg.train.weight_decay},
        {"lr_decay", cfg.train.lr_decay},
        {"decay_every", cfg.train.decay_every},
        {"batch_size", cfg.train.batch_size},
        {"max_epochs", cfg.train.max_epochs},
        {"patience", cfg.train.patience}}},
      {"split", to_string(cfg.split)},
      {"folds", cfg.folds},
      {"validation_fraction", cfg.validation_fraction},
      {"power_transform_target", cfg.power_transform_target},
      {"variants", variants},
      {"angle_counts", cfg.angle_counts},
      {"out_dir", cfg.out_dir.string()},
      {"raw_dump", cfg.raw_dump ? json(cfg.raw_dump->string()) : json(nullptr)},
      {"save_checkpoints", cfg.save_checkpoints},
  };
}

double mae(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw Error(ErrorCode::EmptyInput, "MAE of an empty list");
  if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "MAE length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

std::vector<BucketMae> bucket_mae(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "MAE length mismatch");
  std::vector<BucketMae> buckets;
  for (int lo = 50; lo < 100; lo += 10) buckets.push_back({double(lo), double(lo + 10), 0, 0.0});
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = target[i];
    if (!(t >= 50.0 && t <= 100.0)) continue;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>((t - 50.0) / 10.0), buckets.size() - 1);
    buckets[k].count += 1;
    buckets[k].mae += std::abs(pred[i] - t);
  }
  for (BucketMae& b : buckets) {
    if (b.count > 0) b.mae /= static_cast<double>(b.count);
  }
  return buckets;
}

Dataset simulate_dataset(const ExperimentConfig& cfg, radar::RawAdcWriter* dump) {
  cfg.validate();
  Dataset ds;
  ds.manifest = manifest_for(cfg, cfg.expected_samples());
  ds.samples.reserve(cfg.expected_samples());
  std::uint32_t sample_index = 0;
  for (std::size_t li = 0; li < cfg.rwc_levels.size(); ++li) {
    const double rwc = cfg.rwc_levels[li];
    const leaf::LeafState state = leaf::LeafState::at(cfg.leaf, rwc);
    for (std::size_t p = 0; p < cfg.placements_per_level; ++p) {
      for (std::size_t di = 0; di < cfg.distances.size(); ++di) {
        const double d = cfg.distances[di];
        const std::uint64_t scene_seed = derive_seed(cfg.seed, "scene", {li, p, di});
        Rng rng = make_rng(scene_seed, "placement");
        std::uniform_real_distribution<double> jitter(-cfg.placement_jitter_deg,
                                                      cfg.placement_jitter_deg);
        radar::Scene scene;
        scene.leaf = state;
        scene.distance = d;
        scene.azimuth_offset_deg = jitter(rng);
        scene.aspect_deg = jitter(rng);
        scene.background = cfg.background;
        scene.snr_db = cfg.snr_db;

        std::vector<features::AngleCapture> captures;
        for (double eta : cfg.steering_angles) {
          const radar::RadarFrame frame = radar::synth_frame(cfg.chirp, scene, eta, scene_seed);
          if (dump) {
            dump->write(frame, {0, sample_index, eta, d, static_cast<float>(rwc),
                                static_cast<std::uint32_t>(di)});
          }
          const radar::RangeProfile profile = radar::range_fft(frame, cfg.chirp);
          captures.push_back(features::extract_capture(profile, cfg.chirp, eta, d, cfg.aoa_grid));
        }
        FeatureSample s = features::build_sample(std::move(captures), cfg.steering_angles, d, rwc,
                                                 static_cast<std::uint32_t>(di));
        features::round_to_storage(s);
        ds.samples.push_back(std::move(s));
        ++sample_index;
      }
    }
    spdlog::debug("simulated RWC level {} ({} samples so far)", rwc, ds.samples.size());
  }
  ds.validate();
  return ds;
}

Dataset ingest_raw(const std::filesystem::path& raw, const ExperimentConfig& cfg) {
  cfg.validate();
  radar::RawAdcReader reader(raw, cfg.chirp);
  Dataset ds;
  std::vector<features::AngleCapture> captures;
  std::optional<radar::RawFrameInfo> current;
  auto flush = [&] {
    if (!current) return;
    FeatureSample s = features::build_sample(std::move(captures), cfg.steering_angles,
                                             current->distance_m, current->rwc, current->group);
    features::round_to_storage(s);
    ds.samples.push_back(std::move(s));
    captures.clear();
  };
  while (auto next = reader.next()) {
    auto& [info, frame] = *next;
    if (current && info.sample_index != current->sample_index) flush();
    current = info;
    const radar::RangeProfile profile = radar::range_fft(frame, cfg.chirp);
    captures.push_back(features::extract_capture(profile, cfg.chirp, info.steering_deg,
                                                 info.distance_m, cfg.aoa_grid));
  }
  flush();
  ds.manifest = manifest_for(cfg, ds.samples.size());
  ds.validate();
  return ds;
}

RssTrend rss_trend(const Dataset& ds) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const FeatureSample& s : ds.samples) {
    double leaf_bin = 0.0;
    const std::size_t rows = s.iota * s.kappa;
    for (std::size_t r = 0; r < rows; ++r) leaf_bin += s.rss[r * features::kZoneBins + 1];
    auto& [sum, n] = acc[s.rwc];
    sum += leaf_bin / static_cast<double>(rows);
    ++n;
  }
  RssTrend t;
  for (const auto& [level, v] : acc) {
    t.levels.push_back(level);
    t.mean_dbfs.push_back(v.first / static_cast<double>(v.second));
  }
  if (t.levels.size() >= 2) {
    const auto n = static_cast<double>(t.levels.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
      mx += t.levels[i];
      my += t.mean_dbfs[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
      sxy += (t.levels[i] - mx) * (t.mean_dbfs[i] - my);
      sxx += (t.levels[i] - mx) * (t.levels[i] - mx);
    }
    t.slope = sxy / sxx;
  }
  return t;
}

VariantResult cross_validate(const Dataset& ds, lmnet::Variant variant,
                             const ExperimentConfig& cfg,
                             const std::optional<std::filesystem::path>& checkpoint_dir) {
  ds.validate();
  const std::vector<FeatureSample>& samples = ds.samples;
  const std::vector<features::Fold> folds =
      cfg.split == Split::KFold
          ? features::kfold_split(samples, cfg.folds, derive_seed(cfg.seed, "kfold"))
          : features::logo_split(samples);
  const lmnet::Dims dims{ds.manifest.iota, ds.manifest.kappa};

  VariantResult out;
  out.variant = variant;
  out.iota = dims.iota;
  out.predictions.assign(samples.size(), std::numeric_limits<double>::quiet_NaN());

  for (std::size_t fi = 0; fi < folds.size(); ++fi) {
    const features::Fold& fold = folds[fi];
    const auto [train_idx, val_idx] = features::holdout_split(
        samples, fold.train, cfg.validation_fraction, derive_seed(cfg.seed, "holdout", {fi}));
    const features::Scaler scaler =
        features::fit_scaler(samples, train_idx, cfg.power_transform_target);
    std::vector<FeatureSample> scaled;
    std::vector<double> targets;
    scaled.reserve(samples.size());
    targets.reserve(samples.size());
    for (const FeatureSample& s : samples) {
      scaled.push_back(scaler.apply(s));
      targets.push_back(scaler.transform_target(s.rwc));
    }

    lmnet::LmNet net(dims, variant, derive_seed(cfg.seed, "init", {fi}));
    lmnet::TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "shuffle", {fi});
    lmnet::AdamState adam;
    FoldResult fr;
    fr.label = fold.label;
    fr.n_train = train_idx.size();
    fr.n_val = val_idx.size();
    fr.n_test = fold.test.size();
    fr.train = lmnet::train(net, scaled, targets, train_idx, val_idx, tc, &adam);

    const std::vector<double> raw = lmnet::predict(net, scaled, fold.test);
    std::vector<double> pred, truth;
    for (std::size_t k = 0; k < fold.test.size(); ++k) {
      const double p = scaler.inverse_target(raw[k]);
      out.predictions[fold.test[k]] = p;
      pred.push_back(p);
      truth.push_back(samples[fold.test[k]].rwc);
    }
    fr.mae = mae(pred, truth);
    spdlog::info("{} iota={} {}: MAE {:.3f} (best epoch {}, {} epochs)", lmnet::to_string(variant),
                 dims.iota, fold.label, fr.mae, fr.train.best_epoch, fr.train.epochs_run);
    if (checkpoint_dir) {
      lmnet::write_checkpoint(
          *checkpoint_dir / fmt::format("{}_iota{}_{}.lfnn", lmnet::to_string(variant), dims.iota,
                                        fold.label),
          net, &scaler, &adam);
    }
    out.folds.push_back(std::move(fr));
  }

  for (const FeatureSample& s : samples) out.targets.push_back(s.rwc);
  out.overall_mae = mae(out.predictions, out.targets);
  out.buckets = bucket_mae(out.predictions, out.targets);
  return out;
}

json report_to_json(const MetricsReport& r) {
  json variants = json::array();
  json ablation = json::array();
  for (const VariantResult& v : r.variants) {
    json folds = json::array();
    for (const FoldResult& f : v.folds) {
      folds.push_back({{"label", f.label},
                       {"n_train", f.n_train},
                       {"n_val", f.n_val},
                       {"n_test", f.n_test},
                       {"mae", f.mae},
                       {"best_epoch", f.train.best_epoch},
                       {"epochs_run", f.train.epochs_run},
                       {"stopped_early", f.train.stopped_early},
                       {"best_val_loss", f.train.best_val_loss},
                       {"dead_gate_fraction", f.train.dead_gate_fraction}});
    }
    variants.push_back({{"variant", lmnet::to_string(v.variant)},
                        {"iota", v.iota},
                        {"overall_mae", v.overall_mae},
                        {"bucket_mae", buckets_to_json(v.buckets)},
                        {"folds", folds}});
    ablation.push_back({{"variant", lmnet::to_string(v.variant)}, {"mae", v.overall_mae}});
  }
  json sweep = json::array();
  for (const AnglePoint& p : r.angle_sweep) {
    sweep.push_back({{"count", p.count}, {"angles", p.angles}, {"mae", p.mae}});
  }
  return {{"dataset", features::manifest_to_json(r.dataset)},
          {"split", to_string(r.split)},
          {"seed", r.seed},
          {"variants", variants},
          {"ablation", ablation},
          {"angle_sweep", sweep}};
}

void write_report(const std::filesystem::path& dir, const MetricsReport& r) {
  open_text(dir / "report.json") << report_to_json(r).dump(2) << '\n';
  if (!r.variants.empty()) {
    std::ofstream preds = open_text(dir / "predictions.csv");
    preds << "variant,iota,sample,rwc,prediction\n";
    std::ofstream curves = open_text(dir / "learning_curves.csv");
    curves << "variant,iota,fold,epoch,train_loss,val_loss\n";
    for (const VariantResult& v : r.variants) {
      const std::string name = lmnet::to_string(v.variant);
      for (std::size_t i = 0; i < v.predictions.size(); ++i) {
        preds << fmt::format("{},{},{},{},{}\n", name, v.iota, i, v.targets[i],
                             v.predictions[i]);
      }
      for (const FoldResult& f : v.folds) {
        for (std::size_t e = 0; e < f.train.train_loss.size(); ++e) {
          curves << fmt::format("{},{},{},{},{},{}\n", name, v.iota, f.label, e,
                                f.train.train_loss[e], f.train.val_loss[e]);
        }
      }
    }
  }
  if (!r.angle_sweep.empty()) {
    std::ofstream sweep = open_text(dir / "angle_sweep.csv");
    sweep << "count,mae\n";
    for (const AnglePoint& p : r.angle_sweep) sweep << fmt::format("{},{}\n", p.count, p.mae);
  }
}

Dataset cmd_simulate(const ExperimentConfig& cfg) {
  Dataset ds;
  if (cfg.raw_dump) {
    radar::RawAdcWriter writer(*cfg.raw_dump, cfg.chirp);
    ds = simulate_dataset(cfg, &writer);
    writer.close();
  } else {
    ds = simulate_dataset(cfg);
  }
  write_dataset_files(cfg.out_dir, "dataset", ds);
  return ds;
}

MetricsReport cmd_train(const Dataset& ds, const ExperimentConfig& cfg) {
  MetricsReport r;
  r.dataset = ds.manifest;
  r.split = cfg.split;
  r.seed = cfg.seed;
  std::optional<std::filesystem::path> ckpt;
  if (cfg.save_checkpoints) ckpt = cfg.out_dir / "checkpoints";
  for (lmnet::Variant v : cfg.variants) r.variants.push_back(cross_validate(ds, v, cfg, ckpt));
  write_report(cfg.out_dir, r);
  return r;
}

MetricsReport cmd_angle_sweep(const Dataset& ds, const ExperimentConfig& cfg) {
  MetricsReport r;
  r.dataset = ds.manifest;
  r.split = cfg.split;
  r.seed = cfg.seed;
  for (std::size_t count : cfg.angle_counts) {
    if (count < 1 || count > ds.manifest.iota) {
      throw Error(ErrorCode::ConfigError,
                  fmt::format("angle count {} not in [1, {}]", count, ds.manifest.iota));
    }
    const std::vector<double> angles = beam::centered_subset(ds.manifest.steering_angles, count);
    Dataset sub;
    sub.manifest = ds.manifest;
    sub.manifest.iota = count;
    sub.manifest.steering_angles = angles;
    for (const FeatureSample& s : ds.samples) sub.samples.push_back(features::select_angles(s, angles));
    const VariantResult v = cross_validate(sub, lmnet::Variant::Full, cfg);
    r.angle_sweep.push_back({count, angles, v.overall_mae});
  }
  write_report(cfg.out_dir, r);
  return r;
}

Dataset cmd_ingest(const std::filesystem::path& raw, const ExperimentConfig& cfg) {
  Dataset ds = ingest_raw(raw, cfg);
  write_dataset_files(cfg.out_dir, "ingested", ds);
  return ds;
}

json cmd_eval(const std::filesystem::path& checkpoint, const Dataset& ds,
              const ExperimentConfig& cfg) {
  lmnet::Checkpoint ck = lmnet::read_checkpoint(checkpoint);
  if (!ck.scaler) throw Error(ErrorCode::ConfigError, "checkpoint carries no feature scaler");
  std::vector<FeatureSample> scaled;
  for (const FeatureSample& s : ds.samples) scaled.push_back(ck.scaler->apply(s));
  std::vector<std::size_t> idx(scaled.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::vector<double> raw = lmnet::predict(ck.net, scaled, idx);
  std::vector<double> pred, truth;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    pred.push_back(ck.scaler->inverse_target(raw[i]));
    truth.push_back(ds.samples[i].rwc);
  }
  json out = {{"checkpoint", checkpoint.string()},
              {"variant", lmnet::to_string(ck.net.variant())},
              {"samples", pred.size()},
              {"mae", mae(pred, truth)},
              {"bucket_mae", buckets_to_json(bucket_mae(pred, truth))}};
  open_text(cfg.out_dir / "eval.json") << out.dump(2) << '\n';
  return out;
}

}  // namespace leafeon::harness
