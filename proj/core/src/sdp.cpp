#include "stoctrl/sdp.hpp"

#include <algorithm>
#include <cmath>

#include "stoctrl/parallel.hpp"

namespace stoctrl {

StateGridSpec StateGridSpec::uniform(double lo, double hi, int n) {
  StateGridSpec g;
  g.lo = lo;
  g.hi = hi;
  g.points = {n};
  return g;
}

int StateGridSpec::points_at(int stage) const {
  if (points.size() == 1) return points[0];
  return points[static_cast<size_t>(stage)];
}

void StateGridSpec::validate(int horizon) const {
  if (!(lo < hi)) throw InvalidArgument("StateGridSpec: lo must be < hi");
  if (points.empty() ||
      (points.size() != 1 && static_cast<int>(points.size()) != horizon + 1))
    throw InvalidArgument("StateGridSpec: need one point count, or one per stage 0..T");
  for (int n : points)
    if (n < 2) throw InvalidArgument("StateGridSpec: need at least 2 grid points per stage");
}

namespace {

Vec even_grid(double lo, double hi, int n) {
  Vec g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

constexpr double kUnboundedBelow = -1e12;

void guard_value(double v, int stage, double x, double u) {
  if (!std::isfinite(v) || v < kUnboundedBelow)
    throw NumericalError("solve_sdp: inner problem unbounded or non-finite at stage " +
                         std::to_string(stage) + ", x=" + std::to_string(x) +
                         ", u=" + std::to_string(u));
}

/// Coarse scan plus golden-section refinement of a scalar function on
/// [lo, hi]. Returns (argmin, min).
template <typename F>
std::pair<double, double> scan_golden_min(const F& f, double lo, double hi, int scan_points,
                                          double tol) {
  double best_u = lo;
  double best_v = f(lo);
  int best_i = 0;
  for (int i = 1; i < scan_points; ++i) {
    const double u =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    const double v = f(u);
    if (v < best_v) {
      best_v = v;
      best_u = u;
      best_i = i;
    }
  }
  const double h = (hi - lo) / static_cast<double>(scan_points - 1);
  double a = std::max(lo, best_u - h);
  double b = std::min(hi, best_u + h);
  (void)best_i;

  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
    if (f1 < best_v) {
      best_v = f1;
      best_u = x1;
    }
    if (f2 < best_v) {
      best_v = f2;
      best_u = x2;
    }
  }
  return {best_u, best_v};
}

}  // namespace

GridFunction value_function(const BellmanTable& table, int stage, const InterpConfig& interp) {
  const Vec& x = table.states[static_cast<size_t>(stage)];
  Mat sites(x.size(), 1), values(x.size(), 1);
  sites.col(0) = x;
  values.col(0) = table.values[static_cast<size_t>(stage)];
  return GridFunction(std::move(sites), std::move(values), interp);
}

double bellman_objective(const ProblemModel& model, const ScenarioSet& scenarios,
                         const GridFunction& value_next, int stage, double x, double u) {
  const Vec xv = scalar_vec(x);
  const Vec uv = scalar_vec(u);
  double acc = 0.0;
  for (int k = 0; k < scenarios.count; ++k) {
    const Vec& w = scenarios.at(k, stage + 1);
    acc += model.stage_cost(stage, xv, uv, w);
    acc += value_next.eval1(model.dynamics(stage, xv, uv, w)[0]);
  }
  return acc / static_cast<double>(scenarios.count);
}

SdpResult solve_sdp(const ProblemModel& model, const ScenarioSet& scenarios,
                    const StateGridSpec& grid, const InterpConfig& interp,
                    const InnerOptSpec& opt) {
  model.validate();
  scenarios.validate();
  if (scenarios.horizon != model.horizon)
    throw InvalidArgument("solve_sdp: scenario horizon does not match the model");
  grid.validate(model.horizon);
  for (int d : model.state_dims)
    if (d != 1)
      throw InvalidArgument(
          "solve_sdp: only scalar states are supported (fixed grids do not scale with "
          "state dimension)");
  for (int d : model.control_dims)
    if (d != 1) throw InvalidArgument("solve_sdp: only scalar controls are supported");
  if (opt.scan_points < 3) throw InvalidArgument("solve_sdp: scan_points must be >= 3");

  const int T = model.horizon;
  SdpResult result;
  result.table.states.resize(static_cast<size_t>(T) + 1);
  result.table.values.resize(static_cast<size_t>(T) + 1);
  result.policy.stages.resize(static_cast<size_t>(T));

  for (int t = 0; t <= T; ++t)
    result.table.states[static_cast<size_t>(t)] = even_grid(grid.lo, grid.hi, grid.points_at(t));

  // Stage T: exact trace of the final cost.
  {
    const Vec& xs = result.table.states[static_cast<size_t>(T)];
    Vec vs(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) vs[i] = model.final_cost(scalar_vec(xs[i]));
    result.table.values[static_cast<size_t>(T)] = vs;
  }

  for (int t = T - 1; t >= 0; --t) {
    const GridFunction vnext = value_function(result.table, t + 1, interp);
    const Vec& xs = result.table.states[static_cast<size_t>(t)];
    const BoxSet& box = model.control_bounds[static_cast<size_t>(t)];
    // Infinite control boxes get a wide artificial scan range; a minimizer
    // escaping to it trips the divergence guard below.
    const double u_lo = std::isfinite(box.lo[0]) ? box.lo[0] : -1e8;
    const double u_hi = std::isfinite(box.hi[0]) ? box.hi[0] : 1e8;

    Vec vs(xs.size()), us(xs.size());
    parallel_for(0, static_cast<int>(xs.size()), [&](int i) {
      const double x = xs[i];
      auto objective = [&](double u) {
        const double v = bellman_objective(model, scenarios, vnext, t, x, u);
        guard_value(v, t, x, u);
        return v;
      };
      const auto [u_best, v_best] = scan_golden_min(objective, u_lo, u_hi, opt.scan_points,
                                                    opt.golden_tol);
      vs[i] = v_best;
      us[i] = u_best;
    });

    result.table.values[static_cast<size_t>(t)] = vs;
    Mat sites(xs.size(), 1), controls(xs.size(), 1);
    sites.col(0) = xs;
    controls.col(0) = us;
    result.policy.stages[static_cast<size_t>(t)] = GridFunction(sites, controls, interp);
  }
  return result;
}

InitialLaw InitialLaw::uniform_law(double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("InitialLaw: lo must be < hi");
  InitialLaw law;
  law.kind = Kind::uniform;
  law.lo = lo;
  law.hi = hi;
  return law;
}

InitialLaw InitialLaw::point_mass(double x) {
  InitialLaw law;
  law.kind = Kind::point;
  law.x = x;
  return law;
}

double expected_initial_cost(const BellmanTable& table, const InitialLaw& law) {
  if (table.states.empty() || table.states[0].size() == 0)
    throw InvalidArgument("expected_initial_cost: empty stage-0 grid");
  const GridFunction v0 = value_function(table, 0, {InterpMethod::linear1d, 0.0});
  if (law.kind == InitialLaw::Kind::point) return v0.eval1(law.x);

  // Trapezoid over the grid nodes covering [lo, hi]; exact for the
  // piecewise-linear interpolant.
  const Vec& xs = table.states[0];
  std::vector<double> knots;
  knots.push_back(law.lo);
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    if (xs[i] > law.lo && xs[i] < law.hi) knots.push_back(xs[i]);
  knots.push_back(law.hi);

  double integral = 0.0;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i], b = knots[i + 1];
    integral += 0.5 * (v0.eval1(a) + v0.eval1(b)) * (b - a);
  }
  return integral / (law.hi - law.lo);
}

}  // namespace stoctrl
