#include <benchmark/benchmark.h>

#include "stoctrl/dam.hpp"
#include "stoctrl/sdp.hpp"

using namespace stoctrl;

namespace {

void BM_sdp_dam(benchmark::State& state) {
  const DamConfig cfg = DamConfig::defaults();
  const ProblemModel model = build_dam_model(cfg);
  const ScenarioSet scenarios =
      draw_scenarios(dam_noise_model(cfg), static_cast<int>(state.range(0)), 1);
  const StateGridSpec grid =
      StateGridSpec::uniform(cfg.x_min, cfg.x_max, static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_sdp(model, scenarios, grid, {InterpMethod::linear1d, 0.0}));
  }
}
BENCHMARK(BM_sdp_dam)->Args({50, 50})->Args({200, 200})->Unit(benchmark::kMillisecond);

}  // namespace
