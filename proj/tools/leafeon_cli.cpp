#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "leafeon/dataset_io.hpp"
#include "leafeon/errors.hpp"
#include "leafeon/harness.hpp"

namespace {

using nlohmann::json;
namespace hs = leafeon::harness;

int fail(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return exit_code;
}

json summarize(const hs::MetricsReport& r) {
  json out = {{"split", hs::to_string(r.split)}};
  for (const auto& v : r.variants) {
    out["mae"][leafeon::lmnet::to_string(v.variant)] = v.overall_mae;
  }
  for (const auto& p : r.angle_sweep) out["angle_sweep"][std::to_string(p.count)] = p.mae;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leaf water content from simulated mmWave radar captures"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string log_level = "warn";
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--seed", seed, "Experiment seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Synthesise a feature dataset");
  std::optional<std::string> raw_dump;
  simulate->add_option("--raw-dump", raw_dump, "Also write every raw ADC frame to this file");

  auto* train = app.add_subcommand("train", "Cross-validate LM-Net on a dataset");
  std::optional<std::string> dataset_path;
  std::optional<std::string> split;
  std::vector<std::string> variants;
  bool no_checkpoints = false;
  train->add_option("--dataset", dataset_path, "Dataset file (default <out>/dataset.lfds)");
  train->add_option("--split", split, "kfold or logo_distance");
  train->add_option("--variant", variants, "RSS_only, RSS_plus_Ang or Full (repeatable)");
  train->add_flag("--no-checkpoints", no_checkpoints, "Skip writing per-fold checkpoints");

  auto* sweep = app.add_subcommand("angle-sweep", "MAE against the number of steering angles");
  std::vector<std::size_t> counts;
  sweep->add_option("--dataset", dataset_path, "Dataset file (default <out>/dataset.lfds)");
  sweep->add_option("--counts", counts, "Subset sizes, e.g. 1 3 5 11");

  auto* ingest = app.add_subcommand("ingest", "Extract features from a raw ADC capture");
  std::string raw_path;
  ingest->add_option("--raw", raw_path, "Raw capture file")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string checkpoint_path;
  eval->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  eval->add_option("--dataset", dataset_path, "Dataset file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), e.get_exit_code() == 0 ? 2 : e.get_exit_code());
  }

  try {
    spdlog::set_default_logger(spdlog::stderr_color_mt("leafeon"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    hs::ExperimentConfig cfg = config_path ? hs::load_config(*config_path) : hs::ExperimentConfig{};
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (raw_dump) cfg.raw_dump = *raw_dump;
    if (split) cfg.split = hs::split_from_string(*split);
    if (!variants.empty()) {
      cfg.variants.clear();
      for (const std::string& v : variants) cfg.variants.push_back(leafeon::lmnet::variant_from_string(v));
    }
    if (!counts.empty()) cfg.angle_counts = counts;
    if (no_checkpoints) cfg.save_checkpoints = false;
    cfg.validate();
    const auto dataset_file = [&] {
      return dataset_path ? std::filesystem::path(*dataset_path) : cfg.out_dir / "dataset.lfds";
    };

    json summary;
    if (*simulate) {
      const auto ds = hs::cmd_simulate(cfg);
      const auto trend = hs::rss_trend(ds);
      summary = {{"samples", ds.samples.size()},
                 {"dataset", (cfg.out_dir / "dataset.lfds").string()},
                 {"rss_slope_db_per_rwc", trend.slope}};
    } else if (*train) {
      summary = summarize(hs::cmd_train(leafeon::features::read_dataset(dataset_file()), cfg));
    } else if (*sweep) {
      summary = summarize(hs::cmd_angle_sweep(leafeon::features::read_dataset(dataset_file()), cfg));
    } else if (*ingest) {
      const auto ds = hs::cmd_ingest(raw_path, cfg);
      summary = {{"samples", ds.samples.size()},
                 {"dataset", (cfg.out_dir / "ingested.lfds").string()}};
    } else if (*eval) {
      summary = hs::cmd_eval(checkpoint_path, leafeon::features::read_dataset(dataset_file()), cfg);
    }
    std::cout << summary.dump(2) << '\n';
  } catch (const leafeon::Error& e) {
    return fail(std::string(leafeon::to_string(e.code())), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 1);
  }
  return EXIT_SUCCESS;
}
