#include <benchmark/benchmark.h>

#include "ksgan/losses.hpp"
#include "ksgan/nn.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/targets.hpp"

namespace {

using namespace ksgan;

void BM_GeneratorLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const bool max_mode = state.range(1) != 0;
  Rng rng(3);
  Tensor cf({n}), cg({n});
  for (double& v : cf.data()) v = rng.normal();
  for (double& v : cg.data()) v = rng.normal() + 0.3;
  losses::GeneratorLossOptions opt;
  opt.mode = max_mode ? losses::Aggregation::Max : losses::Aggregation::Mean;
  for (auto _ : state) {
    ad::Graph g;
    const ad::Var f = g.leaf(cf, true);
    const ad::Var c = g.leaf(cg, true);
    const auto parts = losses::generator_loss(f, c, opt);
    benchmark::DoNotOptimize(ad::grad_values(parts.total, {c}));
  }
}
BENCHMARK(BM_GeneratorLoss)->Args({256, 0})->Args({256, 1})->Args({512, 0})->Unit(benchmark::kMillisecond);

void BM_ScorePenaltyStep(benchmark::State& state) {
  const nn::MlpSpec spec{2, {128, 128, 128}, 1, nn::Activation::LeakyRelu, true, false};
  Rng rng(4);
  nn::ParamStore store = nn::init(spec, rng);
  const Tensor x_f = targets::sample_target(targets::Source::EightGaussians, 256, rng).points;
  const Tensor x_g = targets::sample_latent(256, 2, rng).points;
  for (auto _ : state) {
    ad::Graph g;
    const nn::Bound bound = nn::bind(g, store, true);
    const auto critic = [&](const ad::Var& x) { return nn::forward(spec, store, bound, x); };
    const auto out = losses::critic_with_score_penalty(g, critic, x_f, x_g);
    const ad::Var objective = ad::sub(out.penalty, losses::critic_loss(out.c_F, out.c_G));
    benchmark::DoNotOptimize(nn::gradients(objective, bound));
  }
}
BENCHMARK(BM_ScorePenaltyStep)->Unit(benchmark::kMillisecond);

void BM_GksFromValues(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<double> a(n), b(n);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(losses::gks_from_values(a, b));
}
BENCHMARK(BM_GksFromValues)->Arg(4096)->Arg(65536);

}  // namespace
