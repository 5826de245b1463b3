#include <limits>

#include <benchmark/benchmark.h>

#include "leafeon/beam.hpp"
#include "leafeon/leaf.hpp"
#include "leafeon/radar.hpp"

namespace {

using namespace leafeon;

radar::Scene leaf_scene(double snr_db) {
  radar::Scene s;
  s.leaf = leaf::LeafState::at(leaf::LeafSpec{}, 80.0);
  s.distance = 0.6;
  s.snr_db = snr_db;
  return s;
}

void BM_SynthFrame(benchmark::State& state) {
  const radar::ChirpConfig cfg;
  const radar::Scene scene = leaf_scene(30.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(radar::synth_frame(cfg, scene, 0.0, ++seed));
}
BENCHMARK(BM_SynthFrame)->Unit(benchmark::kMillisecond);

void BM_RangeFft(benchmark::State& state) {
  const radar::ChirpConfig cfg;
  const radar::RadarFrame frame = radar::synth_frame(cfg, leaf_scene(30.0), 0.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(radar::range_fft(frame, cfg));
}
BENCHMARK(BM_RangeFft)->Unit(benchmark::kMillisecond);

void BM_AoaEstimate(benchmark::State& state) {
  const radar::ChirpConfig cfg;
  const radar::RangeProfile p = radar::range_fft(radar::synth_frame(cfg, leaf_scene(30.0), 0.0, 1), cfg);
  const Eigen::MatrixXcd x = p.snapshots(radar::leaf_zone(p, 0.6)[1]);
  const beam::AoaGrid grid;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        beam::aoa_estimate(x, cfg.effective_rx_spacing(), cfg.wavelength(), grid));
  }
}
BENCHMARK(BM_AoaEstimate)->Unit(benchmark::kMicrosecond);

void BM_LeafRcs(benchmark::State& state) {
  const leaf::LeafState leaf = leaf::LeafState::at(leaf::LeafSpec{}, 80.0);
  const double f = radar::ChirpConfig{}.center_frequency();
  for (auto _ : state) benchmark::DoNotOptimize(leaf::rcs(leaf, 0.1, f));
}
BENCHMARK(BM_LeafRcs);

}  // namespace
