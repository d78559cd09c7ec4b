#include <benchmark/benchmark.h>

#include "jumplab/conductivity.hpp"

using namespace jumplab;

// Fresh field per iteration so the cell-integral cache starts cold.
static void BM_CellPair(benchmark::State& state) {
  const auto k = isotropic_kernel(2, 1.0);
  std::int64_t a = 2;
  for (auto _ : state) {
    const auto C = build_from_kernel(k, 2.0);
    benchmark::DoNotOptimize(C.evaluate(GridPoint(0, 0), GridPoint(a, 1)));
    a = a % 40 + 2;
  }
}
BENCHMARK(BM_CellPair)->Unit(benchmark::kMicrosecond);

static void BM_ConeKernelCells(benchmark::State& state) {
  const auto k = cone_kernel(1.0, 1.0);
  for (auto _ : state) {
    const auto C = build_from_kernel(k, 1.0);
    double s = 0.0;
    for (std::int64_t i = 2; i < 10; ++i) s += C.evaluate(GridPoint(0, 0), GridPoint(i, i / 2));
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ConeKernelCells)->Unit(benchmark::kMillisecond);

static void BM_TotalRate(benchmark::State& state) {
  const auto C = double_cone({});
  for (auto _ : state) benchmark::DoNotOptimize(total_rate(C, GridPoint(1, 2)).value);
}
BENCHMARK(BM_TotalRate)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
