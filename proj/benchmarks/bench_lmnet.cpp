#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "leafeon/lmnet.hpp"

namespace {

using namespace leafeon;

lmnet::Batch random_batch(const lmnet::Dims& dims, std::size_t size) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  lmnet::Batch b;
  b.size = size;
  b.location = lmnet::Mat(size * dims.iota, features::kLocationWidth);
  b.rss = lmnet::Mat(size * dims.iota, dims.rss_width());
  for (Eigen::Index i = 0; i < b.location.size(); ++i) b.location.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.rss.size(); ++i) b.rss.data()[i] = g(rng);
  return b;
}

void BM_LmNetForward(benchmark::State& state) {
  const lmnet::Dims dims{static_cast<std::size_t>(state.range(0)), 4};
  lmnet::LmNet net(dims, lmnet::Variant::Full, 1);
  const lmnet::Batch batch = random_batch(dims, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(batch, lmnet::Mode::Eval));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_LmNetForward)->Args({1, 256})->Args({11, 256})->Unit(benchmark::kMillisecond);

void BM_LmNetGradient(benchmark::State& state) {
  const lmnet::Dims dims{static_cast<std::size_t>(state.range(0)), 4};
  lmnet::LmNet net(dims, lmnet::Variant::Full, 1);
  const auto n = static_cast<std::size_t>(state.range(1));
  const lmnet::Batch batch = random_batch(dims, n);
  const std::vector<double> targets(n, 75.0);
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradient(batch, targets));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_LmNetGradient)->Args({1, 256})->Args({11, 256})->Unit(benchmark::kMillisecond);

}  // namespace
