#include <benchmark/benchmark.h>

#include "stoctrl/dam.hpp"
#include "stoctrl/particle.hpp"

using namespace stoctrl;

namespace {

/// One full projected-gradient iteration at the given scenario count:
/// forward propagation plus the fused backward/gradient sweep.
void BM_particle_iteration(benchmark::State& state) {
  const DamConfig cfg = DamConfig::defaults();
  const ProblemModel model = build_dam_model(cfg);
  const ScenarioSet scenarios =
      draw_scenarios(dam_noise_model(cfg), static_cast<int>(state.range(0)), 1);
  AlgoConfig config;
  config.max_iterations = 1;
  config.tolerance = 1e-12;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(model, scenarios, config));
  }
}
BENCHMARK(BM_particle_iteration)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
