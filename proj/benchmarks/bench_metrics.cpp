#include <benchmark/benchmark.h>

#include "ksgan/metrics.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/targets.hpp"

namespace {

using namespace ksgan;

void BM_Mmd2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  const Tensor a = targets::sample_target(targets::Source::Moons, n, rng).points;
  const Tensor b = targets::sample_target(targets::Source::Moons, n, rng).points;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::mmd2(a, b, 1.0, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(4 * n * n));
}
BENCHMARK(BM_Mmd2)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_MedianBandwidth(benchmark::State& state) {
  Rng rng(7);
  const Tensor a = targets::sample_target(targets::Source::Rings, 65536, rng).points;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::median_heuristic_bandwidth(a, 0));
}
BENCHMARK(BM_MedianBandwidth)->Unit(benchmark::kMillisecond);

void BM_Ks1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(8);
  std::vector<double> a(n), b(n);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ks_two_sample_1d(a, b));
}
BENCHMARK(BM_Ks1d)->Arg(65536);

}  // namespace
