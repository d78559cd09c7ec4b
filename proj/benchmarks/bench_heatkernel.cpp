#include <benchmark/benchmark.h>

#include "jumplab/heatkernel.hpp"

using namespace jumplab;

static void BM_Generator(benchmark::State& state) {
  const auto C = isotropic_stable(1, 1.0);
  const auto w = Window::centered(1, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generator_matrix(C, w).rates.nonZeros());
}
BENCHMARK(BM_Generator)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_HeatKernelColumn(benchmark::State& state) {
  const auto G = generator_matrix(isotropic_stable(1, 1.0), Window::centered(1, state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(heat_kernel(G, {0.5, 1.0, 2.0}, GridPoint{}).values.size());
}
BENCHMARK(BM_HeatKernelColumn)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_Resolvent(benchmark::State& state) {
  GeneratorOptions o;
  o.boundary = Boundary::FullRateKilled;
  const auto G = generator_matrix(isotropic_stable(1, 1.0), Window::centered(1, state.range(0)), o);
  std::vector<double> f(G.size(), 0.0);
  f[G.size() / 2] = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(resolvent_check(G, f, f, 1.0).lhs);
}
BENCHMARK(BM_Resolvent)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
