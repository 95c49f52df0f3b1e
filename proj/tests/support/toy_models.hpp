#pragma once

// Shared toy problems and closed-form oracles for the test suites. The
// oracles are deliberately independent of the library's solver paths.

#include <cmath>
#include <vector>

#include "stoctrl/model.hpp"
#include "stoctrl/rng.hpp"
#include "stoctrl/sampling.hpp"

namespace testsupport {

using stoctrl::BoxSet;
using stoctrl::Mat;
using stoctrl::ProblemModel;
using stoctrl::ScenarioSet;
using stoctrl::Vec;
using stoctrl::scalar_vec;

/// Random scalar model with smooth trigonometric/quadratic mixes and exact
/// analytic derivatives.
inline ProblemModel random_smooth_model(int horizon, std::uint64_t seed) {
  stoctrl::SplitMix rng(seed);
  struct Coef {
    double a, b, c, d, e;     // dynamics
    double q, r, s, p;        // stage cost
  };
  std::vector<Coef> coef(static_cast<size_t>(horizon));
  for (auto& cf : coef) {
    cf.a = rng.uniform(0.5, 1.1);
    cf.b = rng.uniform(0.5, 1.0);
    cf.c = rng.uniform(0.3, 0.8);
    cf.d = rng.uniform(0.1, 0.3);
    cf.e = rng.uniform(0.05, 0.2);
    cf.q = rng.uniform(0.5, 1.5);
    cf.r = rng.uniform(0.5, 1.5);
    cf.s = rng.uniform(0.1, 0.3);
    cf.p = rng.uniform(0.1, 0.4);
  }
  const double kk = rng.uniform(0.5, 1.5);
  const double km = rng.uniform(0.1, 0.3);

  ProblemModel m;
  m.horizon = horizon;
  m.state_dims.assign(static_cast<size_t>(horizon) + 1, 1);
  m.control_dims.assign(static_cast<size_t>(horizon), 1);
  m.noise_dims.assign(static_cast<size_t>(horizon) + 1, 1);
  m.dynamics = [coef](int t, const Vec& x, const Vec& u, const Vec& w) {
    const auto& c = coef[static_cast<size_t>(t)];
    return scalar_vec(c.a * x[0] + c.b * u[0] + c.c * w[0] + c.d * std::sin(x[0]) +
                      c.e * x[0] * u[0]);
  };
  m.dynamics_dx = [coef](int t, const Vec& x, const Vec& u, const Vec&) {
    const auto& c = coef[static_cast<size_t>(t)];
    Mat J(1, 1);
    J(0, 0) = c.a + c.d * std::cos(x[0]) + c.e * u[0];
    return J;
  };
  m.dynamics_du = [coef](int t, const Vec& x, const Vec&, const Vec&) {
    const auto& c = coef[static_cast<size_t>(t)];
    Mat J(1, 1);
    J(0, 0) = c.b + c.e * x[0];
    return J;
  };
  m.stage_cost = [coef](int t, const Vec& x, const Vec& u, const Vec& w) {
    const auto& c = coef[static_cast<size_t>(t)];
    return 0.5 * c.q * x[0] * x[0] + 0.5 * c.r * u[0] * u[0] + c.s * x[0] * u[0] +
           c.p * std::cos(w[0]) * u[0];
  };
  m.stage_cost_dx = [coef](int t, const Vec& x, const Vec& u, const Vec&) {
    const auto& c = coef[static_cast<size_t>(t)];
    return scalar_vec(c.q * x[0] + c.s * u[0]);
  };
  m.stage_cost_du = [coef](int t, const Vec& x, const Vec& u, const Vec& w) {
    const auto& c = coef[static_cast<size_t>(t)];
    return scalar_vec(c.r * u[0] + c.s * x[0] + c.p * std::cos(w[0]));
  };
  m.final_cost = [kk, km](const Vec& x) { return 0.5 * kk * x[0] * x[0] + km * std::sin(x[0]); };
  m.final_cost_dx = [kk, km](const Vec& x) { return scalar_vec(kk * x[0] + km * std::cos(x[0])); };
  m.control_bounds.assign(static_cast<size_t>(horizon), BoxSet::scalar(-5.0, 5.0));
  return m;
}

/// Scalar linear-quadratic model: f = x + u + w, L = (x^2 + u^2)/2,
/// K = x^2/2, effectively unconstrained controls.
inline ProblemModel lq_model(int horizon, double box = 1e9) {
  ProblemModel m;
  m.horizon = horizon;
  m.state_dims.assign(static_cast<size_t>(horizon) + 1, 1);
  m.control_dims.assign(static_cast<size_t>(horizon), 1);
  m.noise_dims.assign(static_cast<size_t>(horizon) + 1, 1);
  m.dynamics = [](int, const Vec& x, const Vec& u, const Vec& w) {
    return scalar_vec(x[0] + u[0] + w[0]);
  };
  m.dynamics_dx = [](int, const Vec&, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
  m.dynamics_du = [](int, const Vec&, const Vec&, const Vec&) { return Mat::Identity(1, 1); };
  m.stage_cost = [](int, const Vec& x, const Vec& u, const Vec&) {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  m.stage_cost_dx = [](int, const Vec& x, const Vec&, const Vec&) { return scalar_vec(x[0]); };
  m.stage_cost_du = [](int, const Vec&, const Vec& u, const Vec&) { return scalar_vec(u[0]); };
  m.final_cost = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  m.final_cost_dx = [](const Vec& x) { return scalar_vec(x[0]); };
  m.control_bounds.assign(static_cast<size_t>(horizon), BoxSet::scalar(-box, box));
  return m;
}

/// Backward Riccati recursion for the scalar LQ model above:
/// P_T = 1, K_t = P_{t+1} / (1 + P_{t+1}), P_t = 1 + P_{t+1} (1 - K_t).
struct RiccatiSolution {
  std::vector<double> p;     // P_0..P_T
  std::vector<double> gain;  // K_0..K_{T-1}; optimal feedback u = -K_t x
};

inline RiccatiSolution riccati(int horizon) {
  RiccatiSolution sol;
  sol.p.assign(static_cast<size_t>(horizon) + 1, 0.0);
  sol.gain.assign(static_cast<size_t>(horizon), 0.0);
  sol.p[static_cast<size_t>(horizon)] = 1.0;
  for (int t = horizon - 1; t >= 0; --t) {
    const double pn = sol.p[static_cast<size_t>(t) + 1];
    const double k = pn / (1.0 + pn);
    sol.gain[static_cast<size_t>(t)] = k;
    sol.p[static_cast<size_t>(t)] = 1.0 + pn * (1.0 - k);
  }
  return sol;
}

/// Hand-built scenario set over raw trajectories [k][t].
inline ScenarioSet make_set(int horizon, std::vector<std::vector<Vec>> values) {
  ScenarioSet set;
  set.count = static_cast<int>(values.size());
  set.horizon = horizon;
  set.values = std::move(values);
  set.validate();
  return set;
}

/// N scenarios with stage-0 noise equal to the given initial states and all
/// later noises zero: the deterministic multi-start reduction.
inline ScenarioSet zero_noise_set(int horizon, const std::vector<double>& initial_states) {
  std::vector<std::vector<Vec>> values;
  for (double x0 : initial_states) {
    std::vector<Vec> traj(static_cast<size_t>(horizon) + 1, scalar_vec(0.0));
    traj[0] = scalar_vec(x0);
    values.push_back(std::move(traj));
  }
  return make_set(horizon, std::move(values));
}

}  // namespace testsupport
