#pragma once

#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/interp.hpp"
#include "stoctrl/model.hpp"
#include "stoctrl/sampling.hpp"

namespace stoctrl {

/// Closed-loop evaluation of a policy on held-out scenarios.
struct SimulationReport {
  std::vector<double> costs;   // per scenario
  double mean = 0.0;
  double std_error = 0.0;      // sample std / sqrt(N)
  std::vector<std::vector<Vec>> states;    // [scenario][stage 0..T]
  std::vector<std::vector<Vec>> controls;  // [scenario][stage 0..T-1]
};

/// Simulates x' = f_t(x, clamp(phi_t(x)), w) along every scenario and sums
/// the stage and final costs. Synthesized feedback can overshoot the box
/// slightly, so controls are re-clamped before use.
SimulationReport simulate_policy(const ProblemModel& model, const Policy& policy,
                                 const ScenarioSet& scenarios);

/// Probability-weighted RMS deviation of scattered (state, control) pairs
/// from a reference feedback law, per stage.
struct StageComparison {
  int stage = 0;
  int count = 0;
  double rms = 0.0;
  bool missing = false;  // no scatter at this stage: flagged, not an error
};

struct ComparisonReport {
  std::vector<StageComparison> stages;
};

ComparisonReport compare(const std::vector<std::vector<ScatterPoint>>& scatter_per_stage,
                         const Policy& reference);

/// RMS pooled over a stage range [first, last] (weights carried across
/// stages), the aggregate used for late-stage variance comparisons.
double pooled_rms(const std::vector<std::vector<ScatterPoint>>& scatter,
                  const Policy& reference, int first, int last);

}  // namespace stoctrl
