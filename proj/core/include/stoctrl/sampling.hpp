#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stoctrl/common.hpp"

namespace stoctrl {

/// White-noise specification: the stage-0 draw is the initial state (uniform
/// over a box); every later stage is a mean vector plus an independent
/// symmetric discrete disturbance per component, uniform over `levels`
/// evenly spaced values in [-delta, +delta] (zero-mean by symmetry).
struct NoiseModel {
  int horizon = 0;       // T
  Vec initial_lo;        // stage-0 uniform law bounds
  Vec initial_hi;
  std::vector<Vec> stage_means;  // entry t-1 holds the stage-t mean, t = 1..T
  Vec delta;                     // disturbance half-width per component
  int levels = 3;                // number of discrete disturbance values
  Vec support_lo;                // hard lower bounds the samples must respect

  int stage_dim(int t) const;
  void validate() const;
};

/// N sampled noise trajectories over stages 0..T; the sole a-priori
/// discretization of the toolkit. Immutable after creation.
struct ScenarioSet {
  enum class Role { train, test };

  int count = 0;    // N
  int horizon = 0;  // T
  std::vector<std::vector<Vec>> values;  // [scenario][stage]
  std::uint64_t seed = 0;
  Role role = Role::train;
  std::optional<NoiseModel> source;

  const Vec& at(int scenario, int stage) const { return values[scenario][stage]; }
  void validate() const;
};

/// Draws N i.i.d. trajectories. Each scalar entry is a pure function of
/// (seed, scenario, stage, component), so per-scenario parallel generation
/// is identical to sequential generation.
ScenarioSet draw_scenarios(const NoiseModel& model, int count, std::uint64_t seed);

/// Returns the input (role train, unchanged) plus a fresh test set drawn
/// from the same noise model under a seed stream independent of the
/// training one.
std::pair<ScenarioSet, ScenarioSet> split(const ScenarioSet& scenarios, std::uint64_t seed);

}  // namespace stoctrl
