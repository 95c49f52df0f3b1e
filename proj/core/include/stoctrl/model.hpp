#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stoctrl/common.hpp"

namespace stoctrl {

/// Axis-aligned box of admissible controls.
struct BoxSet {
  Vec lo;
  Vec hi;

  BoxSet() = default;
  BoxSet(Vec lo_, Vec hi_);
  static BoxSet scalar(double lo, double hi);
  static BoxSet unbounded(int dim);

  int dim() const { return static_cast<int>(lo.size()); }
  Vec midpoint() const;
  bool contains(const Vec& v, double slack = 0.0) const;
};

/// C1 approximation of min(x, y) with smoothing half-width c. Exact outside
/// the band |x - y| <= c; the largest gap to the true min is c/4, attained
/// at x == y.
double smooth_min(double x, double y, double c);

/// Partial derivatives (d/dx, d/dy) of smooth_min; continuous across the
/// branch seams.
std::pair<double, double> smooth_min_grad(double x, double y, double c);

/// Componentwise clamp of v into the box. Idempotent and non-expansive.
Vec project_box(const Vec& v, const BoxSet& box);

/// A discrete-time controlled system on stages t = 0..T. Stage costs L_t and
/// dynamics f_t consume the stage-(t+1) noise (decision-hazard indexing);
/// the stage-0 noise carries the initial state.
///
/// All callbacks must be deterministic pure functions; derivative callbacks
/// are analytic and can be audited against check_derivatives below.
struct ProblemModel {
  int horizon = 0;                 // T
  std::vector<int> state_dims;     // size T+1
  std::vector<int> control_dims;   // size T
  std::vector<int> noise_dims;     // size T+1

  using DynamicsFn = std::function<Vec(int t, const Vec& x, const Vec& u, const Vec& w)>;
  using JacobianFn = std::function<Mat(int t, const Vec& x, const Vec& u, const Vec& w)>;
  using StageCostFn = std::function<double(int t, const Vec& x, const Vec& u, const Vec& w)>;
  using StageGradFn = std::function<Vec(int t, const Vec& x, const Vec& u, const Vec& w)>;

  DynamicsFn dynamics;             // f_t -> state at t+1
  JacobianFn dynamics_dx;          // (state_dims[t+1] x state_dims[t])
  JacobianFn dynamics_du;          // (state_dims[t+1] x control_dims[t])
  StageCostFn stage_cost;          // L_t
  StageGradFn stage_cost_dx;
  StageGradFn stage_cost_du;
  std::function<double(const Vec&)> final_cost;   // K
  std::function<Vec(const Vec&)> final_cost_dx;   // K'

  std::vector<BoxSet> control_bounds;  // size T

  /// Value and derivatives of one stage, written into caller-owned storage
  /// so hot loops run allocation-free.
  struct StageEval {
    Vec f;
    Mat fx;
    Mat fu;
    double cost = 0.0;
    Vec cost_dx;
    Vec cost_du;
  };

  /// Optional single-pass evaluator filling a StageEval; implementations
  /// must agree exactly with the individual callbacks. Solvers fall back to
  /// composing the callbacks when absent.
  using FusedFn = std::function<void(int t, const Vec& x, const Vec& u, const Vec& w,
                                     StageEval& out)>;
  FusedFn fused_stage_eval;

  void validate() const;
};

/// Evaluates stage t through the fused callback when present, otherwise
/// through the individual callbacks.
void eval_stage(const ProblemModel& model, int t, const Vec& x, const Vec& u, const Vec& w,
                ProblemModel::StageEval& out);

/// Draws one (x, u, w) test point for stage t of a model, used by the
/// finite-difference audit.
using PointSampler = std::function<void(int t, Vec& x, Vec& u, Vec& w)>;

/// Uniform sampler over per-variable ranges; noise ranges apply to the
/// stage-(t+1) noise the callbacks consume.
PointSampler box_point_sampler(const ProblemModel& model, double x_lo, double x_hi,
                               double u_lo, double u_hi, double w_lo, double w_hi,
                               std::uint64_t seed);

struct DerivativeCheckReport {
  double max_rel_error = 0.0;
  int points_checked = 0;
};

/// Central finite-difference audit of every analytic derivative callback
/// (testing aid; solvers never use finite differences).
DerivativeCheckReport check_derivatives(const ProblemModel& model, const PointSampler& sample,
                                        int points_per_stage, double step = 1e-5);

}  // namespace stoctrl
