#include <benchmark/benchmark.h>

#include <cmath>

#include "stoctrl/interp.hpp"
#include "stoctrl/rng.hpp"

using namespace stoctrl;

namespace {

GridFunction make_grid(int n, InterpMethod method, std::uint64_t seed) {
  SplitMix rng(seed);
  Mat sites(n, 1), values(n, 1);
  for (int i = 0; i < n; ++i) {
    sites(i, 0) = rng.uniform(0.0, 2.0);
    values(i, 0) = std::sin(sites(i, 0)) + rng.uniform(-0.05, 0.05);
  }
  return GridFunction(std::move(sites), std::move(values), {method, 0.0});
}

void BM_eval_linear(benchmark::State& state) {
  const GridFunction g = make_grid(static_cast<int>(state.range(0)), InterpMethod::linear1d, 1);
  SplitMix rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.eval1(rng.uniform(0.0, 2.0)));
  }
}
BENCHMARK(BM_eval_linear)->Arg(200)->Arg(1000);

void BM_eval_kernel(benchmark::State& state) {
  const GridFunction g = make_grid(static_cast<int>(state.range(0)), InterpMethod::kernel, 1);
  SplitMix rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.eval1(rng.uniform(0.0, 2.0)));
  }
}
BENCHMARK(BM_eval_kernel)->Arg(200)->Arg(1000);

void BM_eval_nearest(benchmark::State& state) {
  const GridFunction g = make_grid(static_cast<int>(state.range(0)), InterpMethod::nearest, 1);
  SplitMix rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.eval1(rng.uniform(0.0, 2.0)));
  }
}
BENCHMARK(BM_eval_nearest)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
