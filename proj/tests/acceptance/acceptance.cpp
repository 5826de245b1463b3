// Acceptance suite: one [PASS]/[FAIL] line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "gradcheck.hpp"
#include "leafeon/beam.hpp"
#include "leafeon/dataset_io.hpp"
#include "leafeon/em.hpp"
#include "leafeon/errors.hpp"
#include "leafeon/features.hpp"
#include "leafeon/harness.hpp"
#include "leafeon/leaf.hpp"
#include "leafeon/lmnet.hpp"
#include "leafeon/radar.hpp"
#include "snapshots.hpp"

using namespace leafeon;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  json metrics = json::object();
};

double deg2rad(double d) { return d * em::kPi / 180.0; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Datasets shared between criteria, simulated on first use.
class Workspace {
 public:
  explicit Workspace(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  // Smooth leaf, three distances, 360 samples, 11 steering angles.
  harness::ExperimentConfig smooth_config() const {
    harness::ExperimentConfig cfg;
    cfg.leaf_type = features::LeafType::Avocado;
    cfg.leaf = harness::leaf_preset(cfg.leaf_type);
    cfg.distances = {0.4, 0.6, 0.8};
    cfg.save_checkpoints = false;
    return cfg;
  }

  harness::ExperimentConfig rough_config() const {
    harness::ExperimentConfig cfg = smooth_config();
    cfg.leaf_type = features::LeafType::BullBay;
    cfg.leaf = harness::leaf_preset(cfg.leaf_type);
    return cfg;
  }

  const features::Dataset& smooth() { return cached(smooth_, smooth_config(), "smooth"); }
  const features::Dataset& rough() { return cached(rough_, rough_config(), "rough"); }

  // 10-fold Full at iota = 11 on the smooth set, shared by C7, C9 and C11.
  const harness::VariantResult& smooth_kfold_full() {
    if (!smooth_kfold_) {
      harness::ExperimentConfig cfg = smooth_config();
      smooth_kfold_ = harness::cross_validate(smooth(), lmnet::Variant::Full, cfg);
    }
    return *smooth_kfold_;
  }

 private:
  const features::Dataset& cached(std::optional<features::Dataset>& slot,
                                  const harness::ExperimentConfig& cfg, const char* name) {
    if (!slot) {
      const auto t0 = std::chrono::steady_clock::now();
      slot = harness::simulate_dataset(cfg);
      features::write_dataset(dir_ / fmt::format("{}.lfds", name), *slot);
      spdlog::info("simulated {} dataset ({} samples) in {:.1f} s", name, slot->samples.size(),
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return *slot;
  }

  fs::path dir_;
  std::optional<features::Dataset> smooth_, rough_;
  std::optional<harness::VariantResult> smooth_kfold_;
};

Outcome c1_gradient_oracle(Workspace&) {
  const double h = 1e-4;
  Outcome out;
  double worst = 0.0;
  std::string worst_group;
  std::size_t checked = 0, skipped = 0, empty_groups = 0, groups = 0;
  for (lmnet::Variant v : {lmnet::Variant::Full, lmnet::Variant::RssPlusAng, lmnet::Variant::RssOnly}) {
    const lmnet::Dims dims{1, 4};
    lmnet::LmNet net(dims, v, 101);
    const lmnet::Batch batch = testing::random_batch(dims, 8, 202);
    std::mt19937_64 rng(303);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> targets(8);
    for (double& t : targets) t = g(rng);
    const testing::GradCheckResult r = testing::gradient_check(net, batch, targets, h, 64, 404);
    for (const testing::GroupCheck& gc : r.groups) {
      ++groups;
      if (gc.checked == 0) ++empty_groups;
      if (gc.rel_error > worst) {
        worst = gc.rel_error;
        worst_group = lmnet::to_string(v) + ":" + gc.name;
      }
    }
    checked += r.checked;
    skipped += r.skipped;
  }
  out.pass = worst <= 1e-4 && empty_groups == 0;
  out.detail = fmt::format(
      "max rel error {:.2e} ({}) over {} groups, {} entries checked, {} skipped at ReLU kinks, "
      "{} groups unchecked",
      worst, worst_group, groups, checked, skipped, empty_groups);
  out.metrics = {{"max_rel_error", worst}, {"checked", checked}, {"skipped", skipped},
                 {"unchecked_groups", empty_groups}};
  return out;
}

Outcome c2_em_identities(Workspace&) {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  expect(em::refractive_index_real(em::kVacuum) == 1.0, "vacuum n = 1");
  expect(em::fresnel_normal(1.0) == 0.0, "r(n=1) = 0");
  expect(std::abs(em::fresnel_normal(3.0) - 0.5) < 1e-15, "r(n=3) = 0.5");
  const double brewster = std::atan(1.5);
  expect(std::abs(em::fresnel_oblique(1.0, 1.5, brewster, em::Polarization::TM)) < 1e-10,
         "Brewster |r_TM| < 1e-10");
  expect(em::snell_refract(1.0, 1.5, 0.0) == 0.0, "normal incidence passes straight");
  bool tir = false;
  try {
    em::snell_refract(1.5, 1.0, deg2rad(60.0));
  } catch (const Error& e) {
    tir = e.code() == ErrorCode::TotalInternalReflection;
  }
  expect(tir, "total internal reflection raised");
  Outcome out;
  out.pass = failed.empty();
  out.detail = failed.empty() ? "6 identities hold"
                              : fmt::format("failed: {}", fmt::join(failed, "; "));
  return out;
}

Outcome c3_capon_recovery(Workspace&) {
  const radar::ChirpConfig chirp;
  const double lambda = chirp.wavelength();
  const double spacing = chirp.effective_rx_spacing();
  const beam::AoaGrid grid;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(-16.0, 16.0);
  std::size_t hits = 0;
  double worst_err = 0.0, worst_resp = 0.0;
  const int trials = 100;
  for (int s = 0; s < trials; ++s) {
    const double xi0 = angle(rng);
    const Eigen::MatrixXcd x = testing::source_snapshots(xi0, 20.0, chirp.rx_count, chirp.n_chirps,
                                                         spacing, lambda, 5000 + s);
    const beam::AoaSpectrum sp = beam::aoa_estimate(x, spacing, lambda, grid);
    const double err = std::abs(sp.aoa - xi0);
    worst_err = std::max(worst_err, err);
    if (err <= 2.0) ++hits;
    const Eigen::MatrixXcd r = beam::loaded_covariance(x);
    for (double look : grid.angles()) {
      const Eigen::VectorXcd a = beam::steering_vector(look, chirp.rx_count, spacing, lambda);
      const em::cplx resp = beam::capon_weights(r, a).dot(a);
      worst_resp = std::max(worst_resp, std::abs(resp - em::cplx{1.0, 0.0}));
    }
  }
  Outcome out;
  out.pass = hits == static_cast<std::size_t>(trials) && worst_resp <= 1e-10;
  out.detail = fmt::format("{}/{} within 2 deg at 20 dB (worst {:.2f} deg), max |w^H a - 1| {:.1e}",
                           hits, trials, worst_err, worst_resp);
  out.metrics = {{"hits", hits}, {"worst_error_deg", worst_err}, {"max_distortion", worst_resp}};
  return out;
}

Outcome c4_range_pipeline(Workspace&) {
  const radar::ChirpConfig cfg;
  auto scene = [](double d) {
    radar::Scene s;
    s.leaf = leaf::LeafState::at(leaf::LeafSpec{}, 100.0);
    s.distance = d;
    s.snr_db = std::numeric_limits<double>::infinity();
    return s;
  };
  auto rx_power = [](const radar::RangeProfile& p, std::size_t b) {
    double sum = 0.0;
    for (std::size_t r = 0; r < p.n_rx; ++r) sum += std::norm(p.bin(r, b));
    return sum;
  };
  const double d_res = radar::range_resolution(cfg);
  const radar::RangeProfile p06 = radar::range_fft(radar::synth_frame(cfg, scene(0.6), 0.0, 1), cfg);
  std::size_t peak = 0;
  for (std::size_t b = 1; b < p06.n_bins; ++b) {
    if (rx_power(p06, b) > rx_power(p06, peak)) peak = b;
  }
  // Worst case over placement seeds.
  double worst = 0.0, worst_delta = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto peak_db = [&](double d) {
      const radar::RangeProfile p =
          radar::range_fft(radar::synth_frame(cfg, scene(d), 0.0, seed), cfg);
      return 10.0 * std::log10(rx_power(p, radar::leaf_zone(p, d)[1]));
    };
    const double delta = peak_db(0.8) - peak_db(0.4);
    if (std::abs(delta + 6.02) >= worst) {
      worst = std::abs(delta + 6.02);
      worst_delta = delta;
    }
  }
  const bool res_ok = std::abs(d_res - 0.039972) < 5e-7;
  Outcome out;
  out.pass = peak == 15 && res_ok && worst <= 0.5;
  out.detail = fmt::format(
      "d_res {:.6f} m, 0.6 m peak in bin {}, 0.8 m vs 0.4 m worst {:+.3f} dB over 50 placements",
      d_res, peak, worst_delta);
  out.metrics = {{"d_res", d_res}, {"peak_bin", peak}, {"worst_delta_db", worst_delta}};
  return out;
}

Outcome c5_scattering_trends(Workspace&) {
  const double f = radar::ChirpConfig{}.center_frequency();
  const leaf::LeafSpec spec;
  const leaf::ScatterResult wet = leaf::rcs(leaf::LeafState::at(spec, 100.0), 0.0, f);
  const leaf::ScatterResult dry = leaf::rcs(leaf::LeafState::at(spec, 50.0), 0.0, f);
  leaf::LeafSpec smooth = spec;
  smooth.roughness_sigma = 0.0;
  double prev = -std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int r = 50; r <= 100; ++r) {
    const double cur = leaf::rcs(leaf::LeafState::at(smooth, r), 0.0, f).rcs_total;
    if (cur < prev) ++violations;
    prev = cur;
  }
  Outcome out;
  out.pass = wet.rcs_surface > wet.rcs_volumetric && dry.rcs_volumetric >= dry.rcs_surface &&
             violations == 0;
  out.detail = fmt::format(
      "RWC 100 surface {:.1f} > volumetric {:.1f} dBsm; RWC 50 volumetric {:.1f} >= surface "
      "{:.1f} dBsm; smooth-leaf total monotone ({} decreases over 51 steps)",
      wet.rcs_surface, wet.rcs_volumetric, dry.rcs_volumetric, dry.rcs_surface, violations);
  return out;
}

Outcome c6_rss_trend(Workspace& ws) {
  const harness::RssTrend smooth = harness::rss_trend(ws.smooth());
  const harness::RssTrend rough = harness::rss_trend(ws.rough());
  bool increasing = true;
  for (std::size_t i = 1; i < smooth.mean_dbfs.size(); ++i) {
    increasing = increasing && smooth.mean_dbfs[i] > smooth.mean_dbfs[i - 1];
  }
  const double ratio = std::abs(rough.slope) / std::abs(smooth.slope);
  Outcome out;
  out.pass = increasing && smooth.slope > 0.0 && ratio < 0.3;
  std::vector<std::string> levels;
  for (double v : smooth.mean_dbfs) levels.push_back(fmt::format("{:.2f}", v));
  out.detail = fmt::format(
      "smooth leaf-bin dBFS by level [{}] {}; slope {:.4f} dB/%, rough slope {:.4f} dB/% "
      "({:.1f}% of smooth)",
      fmt::join(levels, ", "), increasing ? "strictly increasing" : "NOT strictly increasing",
      smooth.slope, rough.slope, 100.0 * ratio);
  out.metrics = {{"smooth_mean_dbfs", smooth.mean_dbfs}, {"smooth_slope", smooth.slope},
                 {"rough_slope", rough.slope}, {"ratio", ratio}};
  return out;
}

Outcome c7_angle_ablation(Workspace& ws) {
  const double mae11 = ws.smooth_kfold_full().overall_mae;
  const features::Dataset& ds = ws.smooth();
  const std::vector<double> zero{0.0};
  features::Dataset one;
  one.manifest = ds.manifest;
  one.manifest.iota = 1;
  one.manifest.steering_angles = zero;
  for (const auto& s : ds.samples) one.samples.push_back(features::select_angles(s, zero));
  const double mae1 = harness::cross_validate(one, lmnet::Variant::Full, ws.smooth_config()).overall_mae;
  Outcome out;
  out.pass = mae11 <= 0.8 * mae1;
  out.detail = fmt::format("{} samples, 10-fold Full MAE {:.2f}% with 11 angles vs {:.2f}% with 1 "
                           "({:.1f}% reduction, need >= 20%)",
                           ds.samples.size(), mae11, mae1, 100.0 * (1.0 - mae11 / mae1));
  out.metrics = {{"mae_11", mae11}, {"mae_1", mae1}};
  return out;
}

Outcome c8_module_ablation(Workspace& ws) {
  const harness::ExperimentConfig cfg = ws.rough_config();
  std::map<lmnet::Variant, double> m;
  for (lmnet::Variant v : {lmnet::Variant::RssOnly, lmnet::Variant::RssPlusAng, lmnet::Variant::Full}) {
    m[v] = harness::cross_validate(ws.rough(), v, cfg).overall_mae;
  }
  const double full = m[lmnet::Variant::Full];
  const double rss = m[lmnet::Variant::RssOnly];
  const double both = m[lmnet::Variant::RssPlusAng];
  const double best_partial = std::min(rss, both);
  Outcome out;
  out.pass = full <= rss && full <= 1.05 * best_partial;
  out.detail = fmt::format("rough leaf 10-fold MAE: RSS_only {:.2f}%, RSS_plus_Ang {:.2f}%, Full "
                           "{:.2f}% (Full / best partial = {:.3f}, limit 1.05)",
                           rss, both, full, full / best_partial);
  out.metrics = {{"RSS_only", rss}, {"RSS_plus_Ang", both}, {"Full", full}};
  return out;
}

Outcome c9_unseen_distance(Workspace& ws) {
  const double known = ws.smooth_kfold_full().overall_mae;
  harness::ExperimentConfig cfg = ws.smooth_config();
  cfg.split = harness::Split::LogoDistance;
  const harness::VariantResult logo = harness::cross_validate(ws.smooth(), lmnet::Variant::Full, cfg);
  std::vector<std::string> per;
  for (const auto& f : logo.folds) per.push_back(fmt::format("{} {:.2f}%", f.label, f.mae));
  Outcome out;
  out.pass = std::isfinite(logo.overall_mae) && logo.overall_mae > known &&
             logo.overall_mae < 3.0 * known;
  out.detail = fmt::format("leave-one-distance-out MAE {:.2f}% ({}) vs known-distance {:.2f}% "
                           "(ratio {:.2f}, need (1, 3))",
                           logo.overall_mae, fmt::join(per, ", "), known, logo.overall_mae / known);
  out.metrics = {{"logo_mae", logo.overall_mae}, {"kfold_mae", known}};
  return out;
}

Outcome c10_determinism(Workspace& ws) {
  harness::ExperimentConfig cfg;
  cfg.steering_angles = {-2.0, 0.0, 2.0};
  cfg.placements_per_level = 4;
  cfg.distances = {0.4, 0.6};
  cfg.train.max_epochs = 4;
  cfg.folds = 4;
  cfg.save_checkpoints = false;
  std::vector<std::string> failed;
  std::string lfds[2], report[2];
  features::Dataset sim;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = ws.dir() / fmt::format("determinism_{}", run);
    fs::remove_all(dir);
    fs::create_directories(dir);
    cfg.out_dir = dir;
    cfg.raw_dump = dir / "capture.lfrd";
    sim = harness::cmd_simulate(cfg);
    harness::cmd_train(sim, cfg);
    lfds[run] = slurp(dir / "dataset.lfds");
    report[run] = slurp(dir / "report.json");
  }
  if (lfds[0].empty() || lfds[0] != lfds[1]) failed.emplace_back("dataset files differ");
  if (report[0].empty() || report[0] != report[1]) failed.emplace_back("report JSON differs");
  const features::Dataset ing = harness::ingest_raw(*cfg.raw_dump, cfg);
  std::size_t mismatched = 0;
  if (ing.samples.size() != sim.samples.size()) {
    failed.emplace_back("ingest sample count differs");
  } else {
    for (std::size_t i = 0; i < sim.samples.size(); ++i) {
      const auto& a = sim.samples[i];
      const auto& b = ing.samples[i];
      if (a.location != b.location || a.rss != b.rss || a.rwc != b.rwc || a.distance != b.distance) {
        ++mismatched;
      }
    }
  }
  if (mismatched) failed.push_back(fmt::format("{} ingested samples differ", mismatched));
  Outcome out;
  out.pass = failed.empty();
  out.detail = failed.empty()
                   ? fmt::format("two runs byte-identical (dataset {} B, report {} B); ingest of "
                                 "the raw dump matches all {} samples exactly",
                                 lfds[0].size(), report[0].size(), sim.samples.size())
                   : fmt::format("{}", fmt::join(failed, "; "));
  return out;
}

Outcome c11_end_to_end(Workspace& ws) {
  const harness::VariantResult& r = ws.smooth_kfold_full();
  std::vector<std::string> buckets;
  for (const auto& b : r.buckets) buckets.push_back(fmt::format("[{:.0f},{:.0f}) {:.2f}", b.lo, b.hi, b.mae));
  Outcome out;
  out.pass = r.overall_mae <= 5.0;
  out.detail = fmt::format("smooth-leaf 10-fold Full MAE {:.2f}% (limit 5%); buckets {}",
                           r.overall_mae, fmt::join(buckets, ", "));
  out.metrics = {{"mae", r.overall_mae}};
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(Workspace&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leafeon acceptance suite"};
  std::vector<int> only;
  std::string work_dir = (fs::temp_directory_path() / "leafeon_acceptance").string();
  bool verbose = false;
  app.add_option("--only", only, "Run only these criterion numbers");
  app.add_option("--work-dir", work_dir, "Scratch directory for datasets and reports");
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  const std::vector<Criterion> criteria{
      {1, "gradient oracle", c1_gradient_oracle},
      {2, "EM identities", c2_em_identities},
      {3, "Capon recovery", c3_capon_recovery},
      {4, "range pipeline", c4_range_pipeline},
      {5, "scattering trends", c5_scattering_trends},
      {6, "RSS vs RWC trend", c6_rss_trend},
      {7, "steering-angle ablation", c7_angle_ablation},
      {8, "module ablation", c8_module_ablation},
      {9, "unseen-distance degradation", c9_unseen_distance},
      {10, "determinism and round trip", c10_determinism},
      {11, "end-to-end sanity", c11_end_to_end},
  };

  Workspace ws(work_dir);
  json summary = json::object();
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ws);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << fmt::format("[{}] C{} {}: {} ({:.1f} s)", o.pass ? "PASS" : "FAIL", c.id, c.name,
                             o.detail, secs)
              << std::endl;
    summary[fmt::format("C{}", c.id)] = {
        {"name", c.name}, {"pass", o.pass}, {"detail", o.detail}, {"seconds", secs},
        {"metrics", o.metrics}};
  }
  std::ofstream(fs::path(work_dir) / "acceptance.json") << summary.dump(2) << '\n';
  std::cout << fmt::format("{} criteria failed", failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
