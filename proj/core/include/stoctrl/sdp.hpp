#pragma once

#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/interp.hpp"
#include "stoctrl/model.hpp"
#include "stoctrl/sampling.hpp"

namespace stoctrl {

/// Fixed, evenly spaced scalar state grids, one per stage.
struct StateGridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<int> points;  // per stage 0..T; a single entry applies to all

  static StateGridSpec uniform(double lo, double hi, int n);
  int points_at(int stage) const;
  void validate(int horizon) const;
};

/// Inner minimization over the scalar control box: coarse scan followed by
/// golden-section refinement.
struct InnerOptSpec {
  int scan_points = 33;
  double golden_tol = 1e-6;
};

/// Bellman function traces per stage: v[t][i] over the grid x[t][i].
struct BellmanTable {
  std::vector<Vec> states;  // stage 0..T
  std::vector<Vec> values;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

struct SdpResult {
  BellmanTable table;
  Policy policy;
};

/// Backward dynamic programming over the fixed grid: at every grid point the
/// value and control realize the minimum over the box of the empirical mean
/// of stage cost plus interpolated next-stage value. Scalar state and
/// control only; grid points within a stage are processed independently.
SdpResult solve_sdp(const ProblemModel& model, const ScenarioSet& scenarios,
                    const StateGridSpec& grid, const InterpConfig& interp,
                    const InnerOptSpec& opt = {});

/// Interpolated Bellman function of one stage.
GridFunction value_function(const BellmanTable& table, int stage, const InterpConfig& interp);

/// Empirical mean of L_t(x,u,w) + V_next(f_t(x,u,w)) over the scenarios'
/// stage-(t+1) noises; the quantity minimized by the recursion.
double bellman_objective(const ProblemModel& model, const ScenarioSet& scenarios,
                         const GridFunction& value_next, int stage, double x, double u);

/// Law of the initial state used to aggregate the stage-0 Bellman values.
struct InitialLaw {
  enum class Kind { uniform, point };
  Kind kind = Kind::uniform;
  double lo = 0.0;  // uniform support
  double hi = 1.0;
  double x = 0.0;   // point mass location

  static InitialLaw uniform_law(double lo, double hi);
  static InitialLaw point_mass(double x);
};

/// Integral of the interpolated stage-0 value against the initial law
/// (trapezoid rule on the stage-0 grid for the uniform law).
double expected_initial_cost(const BellmanTable& table, const InitialLaw& law);

}  // namespace stoctrl
