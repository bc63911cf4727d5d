#include <benchmark/benchmark.h>

#include "ksgan/autodiff.hpp"
#include "ksgan/nn.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/targets.hpp"

namespace {

using namespace ksgan;

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a({n, n}), b({n, n});
  for (double& v : a.data()) v = rng.normal();
  for (double& v : b.data()) v = rng.normal();
  for (auto _ : state) {
    ad::Graph g;
    ad::NoGradGuard guard(g);
    benchmark::DoNotOptimize(ad::matmul(g.constant(a), g.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(128)->Arg(256)->Arg(512);

// Forward and backward through a desk-scale critic.
void BM_CriticForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const nn::MlpSpec spec{2, {width, width, width}, 1, nn::Activation::LeakyRelu, true, false};
  Rng rng(2);
  nn::ParamStore store = nn::init(spec, rng);
  const Tensor x = targets::sample_target(targets::Source::EightGaussians, 256, rng).points;
  for (auto _ : state) {
    ad::Graph g;
    const nn::Bound bound = nn::bind(g, store, true);
    const ad::Var loss = ad::mean(nn::forward(spec, store, bound, g.constant(x)));
    benchmark::DoNotOptimize(nn::gradients(loss, bound));
  }
}
BENCHMARK(BM_CriticForwardBackward)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
