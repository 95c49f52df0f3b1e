#include "stoctrl/particle.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>

#include "stoctrl/parallel.hpp"

namespace stoctrl {

void AlgoConfig::validate() const {
  if (!(step_size > 0.0)) throw InvalidArgument("AlgoConfig: step size must be positive");
  if (!(tolerance > 0.0)) throw InvalidArgument("AlgoConfig: tolerance must be positive");
  if (max_iterations < 0) throw InvalidArgument("AlgoConfig: max_iterations must be >= 0");
  if (max_halvings < 0) throw InvalidArgument("AlgoConfig: max_halvings must be >= 0");
  if (divergence_patience < 1) throw InvalidArgument("AlgoConfig: divergence_patience must be >= 1");
}

Vec costate_eval(const ProblemModel& model, const CostateMaps& maps, int t, const Vec& x) {
  if (t == model.horizon) return model.final_cost_dx(x);
  return maps.fitted[static_cast<size_t>(t)].eval(x);
}

namespace {

std::atomic<bool> g_degenerate_warned{false};

void check_shapes(const ProblemModel& model, const ScenarioSet& scenarios,
                  const ParticleArray& controls) {
  if (static_cast<int>(controls.size()) != scenarios.count)
    throw InvalidArgument("particle: controls must have one row per scenario");
  for (const auto& row : controls)
    if (static_cast<int>(row.size()) != model.horizon)
      throw InvalidArgument("particle: controls must have T stage entries");
  if (model.state_dims[0] != model.noise_dims[0])
    throw InvalidArgument("particle: stage-0 noise must carry the initial state");
}

/// One backward stage: for every particle k, average the adjoint terms over
/// all noise samples j through the stage-(t+1) co-state map. Fills any of
/// costate_out / grad_out that are non-null. next_map == nullptr selects the
/// analytic final-cost derivative.
void stage_costate_gradient(const ProblemModel& model, const ScenarioSet& scenarios,
                            const ParticleArray& states, const ParticleArray& controls, int t,
                            const GridFunction* next_map, std::vector<Vec>* costate_out,
                            std::vector<Vec>* grad_out) {
  const int N = scenarios.count;
  const double inv_n = 1.0 / static_cast<double>(N);
  const bool scalar_state = model.state_dims[t] == 1 && model.state_dims[t + 1] == 1;
  const bool scalar_control = model.control_dims[t] == 1;
  const bool fast = scalar_state && scalar_control &&
                    (next_map == nullptr || (next_map->input_dim() == 1 && next_map->output_dim() == 1));

  parallel_for(0, N, [&](int k) {
    ProblemModel::StageEval ev;
    const Vec& x = states[static_cast<size_t>(k)][static_cast<size_t>(t)];
    const Vec& u = controls[static_cast<size_t>(k)][static_cast<size_t>(t)];
    if (fast) {
      double lam = 0.0, grad = 0.0;
      for (int j = 0; j < N; ++j) {
        const Vec& w = scenarios.at(j, t + 1);
        eval_stage(model, t, x, u, w, ev);
        const double lnext = next_map != nullptr ? next_map->eval_scalar(ev.f[0])
                                                 : model.final_cost_dx(ev.f)[0];
        lam += ev.cost_dx[0] + ev.fx(0, 0) * lnext;
        grad += ev.cost_du[0] + ev.fu(0, 0) * lnext;
      }
      if (costate_out) (*costate_out)[static_cast<size_t>(k)] = scalar_vec(lam * inv_n);
      if (grad_out) (*grad_out)[static_cast<size_t>(k)] = scalar_vec(grad * inv_n);
    } else {
      Vec lam = Vec::Zero(model.state_dims[t]);
      Vec grad = Vec::Zero(model.control_dims[t]);
      for (int j = 0; j < N; ++j) {
        const Vec& w = scenarios.at(j, t + 1);
        eval_stage(model, t, x, u, w, ev);
        const Vec lnext = next_map != nullptr ? next_map->eval(ev.f) : model.final_cost_dx(ev.f);
        lam += ev.cost_dx;
        lam.noalias() += ev.fx.transpose() * lnext;
        grad += ev.cost_du;
        grad.noalias() += ev.fu.transpose() * lnext;
      }
      if (costate_out) (*costate_out)[static_cast<size_t>(k)] = lam * inv_n;
      if (grad_out) (*grad_out)[static_cast<size_t>(k)] = grad * inv_n;
    }
  });
}

/// Regression of the stage-t co-state particles over the stage-t states.
GridFunction fit_costate_map(const ParticleArray& states, const std::vector<Vec>& lam, int t,
                             const InterpConfig& interp) {
  const int N = static_cast<int>(states.size());
  const int sdim = static_cast<int>(states[0][static_cast<size_t>(t)].size());
  Mat sites(N, sdim), values(N, sdim);
  for (int k = 0; k < N; ++k) {
    sites.row(k) = states[static_cast<size_t>(k)][static_cast<size_t>(t)].transpose();
    values.row(k) = lam[static_cast<size_t>(k)].transpose();
  }
  GridFunction map(std::move(sites), std::move(values), interp);
  if (map.degenerate() && N > 1 && !g_degenerate_warned.exchange(true))
    std::cerr << "[stoctrl] warning: co-state regression sites all identical at stage " << t
              << ", falling back to the mean value\n";
  return map;
}

}  // namespace

ParticleArray forward_states(const ProblemModel& model, const ScenarioSet& scenarios,
                             const ParticleArray& controls) {
  model.validate();
  scenarios.validate();
  check_shapes(model, scenarios, controls);
  const int N = scenarios.count;
  const int T = model.horizon;

  ParticleArray states(static_cast<size_t>(N));
  parallel_for(0, N, [&](int k) {
    auto& traj = states[static_cast<size_t>(k)];
    traj.resize(static_cast<size_t>(T) + 1);
    traj[0] = scenarios.at(k, 0);
    for (int t = 0; t < T; ++t) {
      traj[static_cast<size_t>(t) + 1] =
          model.dynamics(t, traj[static_cast<size_t>(t)],
                         controls[static_cast<size_t>(k)][static_cast<size_t>(t)],
                         scenarios.at(k, t + 1));
      if (!traj[static_cast<size_t>(t) + 1].allFinite())
        throw NumericalError("forward_states: non-finite state at scenario " + std::to_string(k) +
                             ", stage " + std::to_string(t + 1));
    }
  });
  return states;
}

std::pair<ParticleArray, CostateMaps> backward_costates(const ProblemModel& model,
                                                        const ScenarioSet& scenarios,
                                                        const ParticleArray& states,
                                                        const ParticleArray& controls,
                                                        const InterpConfig& interp) {
  check_shapes(model, scenarios, controls);
  const int N = scenarios.count;
  const int T = model.horizon;

  ParticleArray costates(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    costates[static_cast<size_t>(k)].resize(static_cast<size_t>(T) + 1);
    costates[static_cast<size_t>(k)][static_cast<size_t>(T)] =
        model.final_cost_dx(states[static_cast<size_t>(k)][static_cast<size_t>(T)]);
  }

  CostateMaps maps;
  maps.fitted.resize(static_cast<size_t>(T));
  std::vector<Vec> lam(static_cast<size_t>(N));
  const GridFunction* next_map = nullptr;  // stage T: analytic K'
  for (int t = T - 1; t >= 0; --t) {
    stage_costate_gradient(model, scenarios, states, controls, t, next_map, &lam, nullptr);
    for (int k = 0; k < N; ++k)
      costates[static_cast<size_t>(k)][static_cast<size_t>(t)] = lam[static_cast<size_t>(k)];
    maps.fitted[static_cast<size_t>(t)] = fit_costate_map(states, lam, t, interp);
    next_map = &maps.fitted[static_cast<size_t>(t)];
  }
  return {std::move(costates), std::move(maps)};
}

ParticleArray gradient_particles(const ProblemModel& model, const ScenarioSet& scenarios,
                                 const ParticleArray& states, const ParticleArray& controls,
                                 const CostateMaps& maps) {
  check_shapes(model, scenarios, controls);
  const int N = scenarios.count;
  const int T = model.horizon;
  if (maps.stages() != T) throw InvalidArgument("gradient_particles: need T co-state maps");

  ParticleArray grads(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) grads[static_cast<size_t>(k)].resize(static_cast<size_t>(T));
  std::vector<Vec> g(static_cast<size_t>(N));
  for (int t = 0; t < T; ++t) {
    const GridFunction* next_map = t + 1 <= T - 1 ? &maps.fitted[static_cast<size_t>(t) + 1] : nullptr;
    stage_costate_gradient(model, scenarios, states, controls, t, next_map, nullptr, &g);
    for (int k = 0; k < N; ++k)
      grads[static_cast<size_t>(k)][static_cast<size_t>(t)] = g[static_cast<size_t>(k)];
  }
  return grads;
}

double mc_cost(const ProblemModel& model, const ScenarioSet& scenarios,
               const ParticleArray& states, const ParticleArray& controls) {
  check_shapes(model, scenarios, controls);
  const int N = scenarios.count;
  const int T = model.horizon;
  std::vector<double> per_scenario(static_cast<size_t>(N), 0.0);
  parallel_for(0, N, [&](int k) {
    double acc = 0.0;
    for (int t = 0; t < T; ++t)
      acc += model.stage_cost(t, states[static_cast<size_t>(k)][static_cast<size_t>(t)],
                              controls[static_cast<size_t>(k)][static_cast<size_t>(t)],
                              scenarios.at(k, t + 1));
    acc += model.final_cost(states[static_cast<size_t>(k)][static_cast<size_t>(T)]);
    per_scenario[static_cast<size_t>(k)] = acc;
  });
  double total = 0.0;
  for (double c : per_scenario) total += c;  // fixed order keeps runs bit-reproducible
  return total / static_cast<double>(N);
}

ParticleArray midpoint_controls(const ProblemModel& model, int count) {
  ParticleArray controls(static_cast<size_t>(count));
  for (auto& row : controls) {
    row.resize(static_cast<size_t>(model.horizon));
    for (int t = 0; t < model.horizon; ++t)
      row[static_cast<size_t>(t)] = model.control_bounds[static_cast<size_t>(t)].midpoint();
  }
  return controls;
}

namespace {

struct SweepResult {
  ParticleArray costates;
  CostateMaps maps;
  ParticleArray grads;
};

/// Fused backward sweep computing co-state particles, fitted maps and
/// gradient particles in one pass over the (k, j) pairs; values agree with
/// the standalone operations term by term.
SweepResult fused_backward(const ProblemModel& model, const ScenarioSet& scenarios,
                           const ParticleArray& states, const ParticleArray& controls,
                           const InterpConfig& interp) {
  const int N = scenarios.count;
  const int T = model.horizon;
  SweepResult out;
  out.costates.resize(static_cast<size_t>(N));
  out.grads.resize(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    out.costates[static_cast<size_t>(k)].resize(static_cast<size_t>(T) + 1);
    out.costates[static_cast<size_t>(k)][static_cast<size_t>(T)] =
        model.final_cost_dx(states[static_cast<size_t>(k)][static_cast<size_t>(T)]);
    out.grads[static_cast<size_t>(k)].resize(static_cast<size_t>(T));
  }
  out.maps.fitted.resize(static_cast<size_t>(T));

  std::vector<Vec> lam(static_cast<size_t>(N)), g(static_cast<size_t>(N));
  const GridFunction* next_map = nullptr;
  for (int t = T - 1; t >= 0; --t) {
    stage_costate_gradient(model, scenarios, states, controls, t, next_map, &lam, &g);
    for (int k = 0; k < N; ++k) {
      out.costates[static_cast<size_t>(k)][static_cast<size_t>(t)] = lam[static_cast<size_t>(k)];
      out.grads[static_cast<size_t>(k)][static_cast<size_t>(t)] = g[static_cast<size_t>(k)];
    }
    out.maps.fitted[static_cast<size_t>(t)] = fit_costate_map(states, lam, t, interp);
    next_map = &out.maps.fitted[static_cast<size_t>(t)];
  }
  return out;
}

double stacked_norm(const ParticleArray& a) {
  double acc = 0.0;
  for (const auto& row : a)
    for (const Vec& v : row) acc += v.squaredNorm();
  return std::sqrt(acc);
}

double stacked_distance(const ParticleArray& a, const ParticleArray& b) {
  double acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k)
    for (size_t t = 0; t < a[k].size(); ++t) acc += (a[k][t] - b[k][t]).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

RunResult run(const ProblemModel& model, const ScenarioSet& scenarios, const AlgoConfig& config,
              ParticleArray initial_controls) {
  model.validate();
  scenarios.validate();
  config.validate();
  const int N = scenarios.count;
  const int T = model.horizon;

  ParticleArray controls =
      initial_controls.empty() ? midpoint_controls(model, N) : std::move(initial_controls);
  check_shapes(model, scenarios, controls);
  for (int k = 0; k < N; ++k)
    for (int t = 0; t < T; ++t)
      if (!model.control_bounds[static_cast<size_t>(t)].contains(
              controls[static_cast<size_t>(k)][static_cast<size_t>(t)]))
        throw InvalidArgument("run: initial control infeasible at scenario " + std::to_string(k) +
                              ", stage " + std::to_string(t));

  ParticleArray states = forward_states(model, scenarios, controls);
  double cost = mc_cost(model, scenarios, states, controls);
  double rho = config.step_size;

  RunResult result;
  result.reports.reserve(static_cast<size_t>(config.max_iterations));
  int increase_streak = 0;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const auto tic = std::chrono::steady_clock::now();
    SweepResult sweep = fused_backward(model, scenarios, states, controls, config.costate_interp);

    double grad_norm = 0.0;
    for (const auto& row : sweep.grads)
      for (const Vec& v : row) grad_norm += v.norm();
    grad_norm /= static_cast<double>(N) * static_cast<double>(T);

    // Projected step, halving on cost increase when enabled.
    ParticleArray candidate(static_cast<size_t>(N));
    ParticleArray cand_states;
    double cand_cost = 0.0;
    int halvings = 0;
    for (;;) {
      for (int k = 0; k < N; ++k) {
        auto& row = candidate[static_cast<size_t>(k)];
        row.resize(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t)
          row[static_cast<size_t>(t)] = project_box(
              controls[static_cast<size_t>(k)][static_cast<size_t>(t)] -
                  rho * sweep.grads[static_cast<size_t>(k)][static_cast<size_t>(t)],
              model.control_bounds[static_cast<size_t>(t)]);
      }
      cand_states = forward_states(model, scenarios, candidate);
      cand_cost = mc_cost(model, scenarios, cand_states, candidate);
      if (!config.halve_on_increase || cand_cost <= cost || halvings >= config.max_halvings)
        break;
      rho *= 0.5;
      ++halvings;
    }

    const double denom = std::max(stacked_norm(controls), 1e-8);
    const double change = stacked_distance(candidate, controls) / denom;

    if (cand_cost > cost) {
      if (++increase_streak >= config.divergence_patience)
        throw NumericalError("run: cost estimate grew for " + std::to_string(increase_streak) +
                             " consecutive iterations (iteration " + std::to_string(iter) +
                             ", cost " + std::to_string(cand_cost) + " vs " + std::to_string(cost) +
                             ", step size " + std::to_string(rho) + ")");
    } else {
      increase_streak = 0;
    }

    controls = std::move(candidate);
    states = std::move(cand_states);
    cost = cand_cost;

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    result.reports.push_back({iter, cost, grad_norm, change, secs});
    if (change <= config.tolerance) break;
  }

  // Final consistent bundle and feedback synthesis on the converged grids.
  auto [costates, maps] = backward_costates(model, scenarios, states, controls,
                                            config.costate_interp);
  result.bundle.states = std::move(states);
  result.bundle.controls = std::move(controls);
  result.bundle.costates = std::move(costates);
  result.bundle.costate_maps = std::move(maps);

  result.policy.stages.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    Mat sites(N, model.state_dims[static_cast<size_t>(t)]);
    Mat values(N, model.control_dims[static_cast<size_t>(t)]);
    for (int k = 0; k < N; ++k) {
      sites.row(k) =
          result.bundle.states[static_cast<size_t>(k)][static_cast<size_t>(t)].transpose();
      values.row(k) =
          result.bundle.controls[static_cast<size_t>(k)][static_cast<size_t>(t)].transpose();
    }
    result.policy.stages[static_cast<size_t>(t)] =
        GridFunction(std::move(sites), std::move(values), config.feedback_interp);
  }
  return result;
}

}  // namespace stoctrl
