#pragma once

#include <utility>
#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/interp.hpp"
#include "stoctrl/model.hpp"
#include "stoctrl/sampling.hpp"

namespace stoctrl {

/// Per-scenario particle arrays indexed [scenario][stage].
using ParticleArray = std::vector<std::vector<Vec>>;

/// Tuning of the adaptive-mesh projected-gradient run.
struct AlgoConfig {
  double step_size = 0.1;    // rho
  bool halve_on_increase = true;
  int max_halvings = 20;
  int max_iterations = 500;
  double tolerance = 1e-4;   // relative l2 change of the stacked controls
  InterpConfig costate_interp{InterpMethod::kernel, 0.0};
  InterpConfig feedback_interp{InterpMethod::linear1d, 0.0};
  double smoothing_c = 0.01;  // smoothing used by the model, recorded with runs
  int divergence_patience = 10;

  void validate() const;
};

struct IterationReport {
  int iteration = 0;
  double cost = 0.0;            // Monte-Carlo estimate on the training scenarios
  double grad_norm = 0.0;       // mean gradient-particle norm
  double control_change = 0.0;  // relative l2 change of the stacked controls
  double seconds = 0.0;
};

/// Fitted co-state maps for stages 0..T-1; the stage-T map is the final
/// cost derivative and needs no fit.
struct CostateMaps {
  std::vector<GridFunction> fitted;

  int stages() const { return static_cast<int>(fitted.size()); }
};

/// Evaluates the stage-t co-state map, dispatching to K' at t == T.
Vec costate_eval(const ProblemModel& model, const CostateMaps& maps, int t, const Vec& x);

/// The adaptive mesh: per-scenario state, control and co-state particles
/// plus the per-stage co-state maps they induce.
struct TrajectoryBundle {
  ParticleArray states;    // [k][0..T]
  ParticleArray controls;  // [k][0..T-1]
  ParticleArray costates;  // [k][0..T]
  CostateMaps costate_maps;
};

/// Propagates every scenario forward through the dynamics from its stage-0
/// noise; particles do not interact.
ParticleArray forward_states(const ProblemModel& model, const ScenarioSet& scenarios,
                             const ParticleArray& controls);

/// Backward co-state sweep: each particle averages the adjoint right-hand
/// side over all sampled noises, using the regression fit of the next
/// stage's co-state particles; returns the particles and the fitted maps.
std::pair<ParticleArray, CostateMaps> backward_costates(const ProblemModel& model,
                                                        const ScenarioSet& scenarios,
                                                        const ParticleArray& states,
                                                        const ParticleArray& controls,
                                                        const InterpConfig& interp);

/// Gradient particles from the fitted co-state maps.
ParticleArray gradient_particles(const ProblemModel& model, const ScenarioSet& scenarios,
                                 const ParticleArray& states, const ParticleArray& controls,
                                 const CostateMaps& maps);

/// Monte-Carlo cost of the controls on the scenarios (states must be the
/// matching forward propagation).
double mc_cost(const ProblemModel& model, const ScenarioSet& scenarios,
               const ParticleArray& states, const ParticleArray& controls);

/// Stage-box midpoint controls for every particle: the default feasible,
/// symmetric, reproducible starting point.
ParticleArray midpoint_controls(const ProblemModel& model, int count);

struct RunResult {
  TrajectoryBundle bundle;
  Policy policy;
  std::vector<IterationReport> reports;
};

/// Iterates forward / backward / gradient / projected control update until
/// the relative control change drops below tolerance or the iteration cap
/// is hit, then synthesizes the per-stage feedback laws by regression of
/// the final (state, control) particle grids.
RunResult run(const ProblemModel& model, const ScenarioSet& scenarios, const AlgoConfig& config,
              ParticleArray initial_controls = {});

}  // namespace stoctrl
