#include "stoctrl/sim.hpp"

#include <cmath>

#include "stoctrl/parallel.hpp"

namespace stoctrl {

SimulationReport simulate_policy(const ProblemModel& model, const Policy& policy,
                                 const ScenarioSet& scenarios) {
  model.validate();
  scenarios.validate();
  if (policy.horizon() != model.horizon)
    throw InvalidArgument("simulate_policy: policy must define every stage");
  if (scenarios.horizon != model.horizon)
    throw InvalidArgument("simulate_policy: scenario horizon mismatch");
  if (model.state_dims[0] != model.noise_dims[0])
    throw InvalidArgument("simulate_policy: stage-0 noise must carry the initial state");

  const int N = scenarios.count;
  const int T = model.horizon;
  SimulationReport report;
  report.costs.assign(static_cast<size_t>(N), 0.0);
  report.states.assign(static_cast<size_t>(N), {});
  report.controls.assign(static_cast<size_t>(N), {});

  parallel_for(0, N, [&](int k) {
    auto& xs = report.states[static_cast<size_t>(k)];
    auto& us = report.controls[static_cast<size_t>(k)];
    xs.resize(static_cast<size_t>(T) + 1);
    us.resize(static_cast<size_t>(T));
    xs[0] = scenarios.at(k, 0);
    double cost = 0.0;
    for (int t = 0; t < T; ++t) {
      const Vec u = project_box(policy.eval(t, xs[static_cast<size_t>(t)]),
                                model.control_bounds[static_cast<size_t>(t)]);
      us[static_cast<size_t>(t)] = u;
      const Vec& w = scenarios.at(k, t + 1);
      cost += model.stage_cost(t, xs[static_cast<size_t>(t)], u, w);
      xs[static_cast<size_t>(t) + 1] = model.dynamics(t, xs[static_cast<size_t>(t)], u, w);
      if (!xs[static_cast<size_t>(t) + 1].allFinite())
        throw NumericalError("simulate_policy: non-finite trajectory at scenario " +
                             std::to_string(k) + ", stage " + std::to_string(t + 1));
    }
    cost += model.final_cost(xs[static_cast<size_t>(T)]);
    report.costs[static_cast<size_t>(k)] = cost;
  });

  double mean = 0.0;
  for (double c : report.costs) mean += c;
  mean /= static_cast<double>(N);
  double var = 0.0;
  for (double c : report.costs) var += (c - mean) * (c - mean);
  var = N > 1 ? var / static_cast<double>(N - 1) : 0.0;
  report.mean = mean;
  report.std_error = std::sqrt(var / static_cast<double>(N));
  return report;
}

ComparisonReport compare(const std::vector<std::vector<ScatterPoint>>& scatter_per_stage,
                         const Policy& reference) {
  if (static_cast<int>(scatter_per_stage.size()) != reference.horizon())
    throw InvalidArgument("compare: scatter must cover every reference stage");
  ComparisonReport report;
  for (int t = 0; t < reference.horizon(); ++t) {
    const auto& pts = scatter_per_stage[static_cast<size_t>(t)];
    StageComparison sc;
    sc.stage = t;
    sc.count = static_cast<int>(pts.size());
    if (pts.empty()) {
      sc.missing = true;
      report.stages.push_back(sc);
      continue;
    }
    double mass = 0.0, acc = 0.0;
    for (const ScatterPoint& p : pts) {
      const Vec ref = reference.eval(t, p.state);
      acc += p.weight * (p.control - ref).squaredNorm();
      mass += p.weight;
    }
    sc.rms = std::sqrt(acc / mass);
    report.stages.push_back(sc);
  }
  return report;
}

double pooled_rms(const std::vector<std::vector<ScatterPoint>>& scatter,
                  const Policy& reference, int first, int last) {
  double mass = 0.0, acc = 0.0;
  for (int t = first; t <= last; ++t) {
    for (const ScatterPoint& p : scatter[static_cast<size_t>(t)]) {
      const Vec ref = reference.eval(t, p.state);
      acc += p.weight * (p.control - ref).squaredNorm();
      mass += p.weight;
    }
  }
  if (mass <= 0.0) throw InvalidArgument("pooled_rms: no scatter in the stage range");
  return std::sqrt(acc / mass);
}

}  // namespace stoctrl
