#include <benchmark/benchmark.h>

#include "jumplab/chain.hpp"

using namespace jumplab;

static void BM_JumpDraw(benchmark::State& state) {
  const JumpSampler S(isotropic_stable(static_cast<int>(state.range(0)), 1.0));
  RandomStream rng(1, 0);
  GridPoint x;
  for (auto _ : state) {
    if (auto y = S.draw(x, rng)) x = *y;
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_JumpDraw)->Arg(1)->Arg(2);

static void BM_SamplePath(benchmark::State& state) {
  const auto n = static_cast<double>(state.range(0));
  const JumpSampler S(scale_conductivity(isotropic_stable(1, 1.0), n));
  std::uint64_t i = 0;
  std::size_t jumps = 0;
  for (auto _ : state) {
    const auto p = sample_path(S, GridPoint{}, 1.0, 7, i++);
    jumps += p.events.size();
    benchmark::DoNotOptimize(p.events.data());
  }
  state.counters["jumps_per_path"] = static_cast<double>(jumps) / static_cast<double>(state.iterations());
}
BENCHMARK(BM_SamplePath)->Arg(1)->Arg(4)->Arg(16);

static void BM_SamplerSetup(benchmark::State& state) {
  const auto C = isotropic_stable(2, 1.0);
  for (auto _ : state) {
    JumpSampler S(C);
    benchmark::DoNotOptimize(S.near_radius());
  }
}
BENCHMARK(BM_SamplerSetup)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
