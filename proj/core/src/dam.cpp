#include "stoctrl/dam.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <memory>

namespace stoctrl {

namespace {

constexpr double kCostCap = 50.0;  // imbalance beyond this saturates the exponential

std::atomic<bool> g_overflow_warned{false};

void warn_overflow(double y) {
  if (!g_overflow_warned.exchange(true))
    std::cerr << "[stoctrl] warning: imbalance " << y << " beyond " << kCostCap
              << ", cost saturated\n";
}

}  // namespace

DamConfig DamConfig::defaults() {
  DamConfig c;
  c.price.resize(static_cast<size_t>(c.horizon));
  c.mean_inflow.assign(static_cast<size_t>(c.horizon), 0.05);
  c.mean_demand.resize(static_cast<size_t>(c.horizon));

  // Demand over hours 1..24: overnight trough with morning and evening peaks.
  auto demand_at = [](double h) {
    const double morning = 0.4 * std::exp(-(h - 8.0) * (h - 8.0) / 8.0);
    const double evening = 0.5 * std::exp(-(h - 19.0) * (h - 19.0) / 8.0);
    return 0.3 + morning + evening;
  };
  double d_lo = 1e300, d_hi = -1e300;
  for (int t = 1; t <= c.horizon; ++t) {
    const double d = demand_at(static_cast<double>(t));
    c.mean_demand[static_cast<size_t>(t - 1)] = d;
    d_lo = std::min(d_lo, d);
    d_hi = std::max(d_hi, d);
  }
  // Price at stage t follows the demand it serves (d_{t+1}), rescaled to [1, 3].
  for (int t = 0; t < c.horizon; ++t) {
    const double d = c.mean_demand[static_cast<size_t>(t)];
    c.price[static_cast<size_t>(t)] = 1.0 + 2.0 * (d - d_lo) / (d_hi - d_lo);
  }
  return c;
}

void DamConfig::validate() const {
  if (horizon < 1) throw InvalidArgument("DamConfig: horizon must be >= 1");
  if (!(x_min < x_max)) throw InvalidArgument("DamConfig: x_min must be < x_max");
  if (!(u_min < u_max)) throw InvalidArgument("DamConfig: u_min must be < u_max");
  if (static_cast<int>(price.size()) != horizon)
    throw InvalidArgument("DamConfig: price needs one entry per stage 0..T-1");
  if (static_cast<int>(mean_inflow.size()) != horizon)
    throw InvalidArgument("DamConfig: mean_inflow needs one entry per stage 1..T");
  if (static_cast<int>(mean_demand.size()) != horizon)
    throw InvalidArgument("DamConfig: mean_demand needs one entry per stage 1..T");
  for (double tau : price)
    if (!(tau > 0.0)) throw InvalidArgument("DamConfig: prices must be positive");
  if (delta_inflow < 0.0 || delta_demand < 0.0)
    throw InvalidArgument("DamConfig: disturbance magnitudes must be nonnegative");
  if (disturbance_levels < 1) throw InvalidArgument("DamConfig: disturbance_levels must be >= 1");
  if (!(smoothing_c > 0.0)) throw InvalidArgument("DamConfig: smoothing_c must be positive");
  if (!(final_weight >= 0.0)) throw InvalidArgument("DamConfig: final_weight must be nonnegative");
}

double production(double storage, double released, const DamConfig& config) {
  const double head = (storage + config.x_max - 2.0 * config.x_min) /
                      (2.0 * (config.x_max - config.x_min));
  return released * head;
}

double imbalance_cost(int stage, double imbalance, const DamConfig& config) {
  const double tau = config.price[static_cast<size_t>(stage)];
  if (imbalance > kCostCap) {
    warn_overflow(imbalance);
    return tau * (std::exp(kCostCap) - 1.0);
  }
  return tau * (std::exp(imbalance) - 1.0);
}

double final_cost(double storage, const DamConfig& config) {
  const double gap = storage - config.x_max;
  return config.final_weight * gap * gap;
}

ProblemModel build_dam_model(const DamConfig& config) {
  config.validate();
  auto cfg = std::make_shared<const DamConfig>(config);
  const int T = config.horizon;

  ProblemModel m;
  m.horizon = T;
  m.state_dims.assign(static_cast<size_t>(T) + 1, 1);
  m.control_dims.assign(static_cast<size_t>(T), 1);
  m.noise_dims.assign(static_cast<size_t>(T) + 1, 2);
  m.noise_dims[0] = 1;  // stage-0 noise is the initial storage

  // e = smin(u, x + a - x_min); next storage smin(x_max, x - e + a).
  auto released = [cfg](double x, double u, double a) {
    return smooth_min(u, x + a - cfg->x_min, cfg->smoothing_c);
  };

  m.dynamics = [cfg, released](int, const Vec& x, const Vec& u, const Vec& w) {
    const double e = released(x[0], u[0], w[0]);
    return scalar_vec(smooth_min(cfg->x_max, x[0] - e + w[0], cfg->smoothing_c));
  };
  m.dynamics_dx = [cfg, released](int, const Vec& x, const Vec& u, const Vec& w) {
    const auto de = smooth_min_grad(u[0], x[0] + w[0] - cfg->x_min, cfg->smoothing_c);
    const double e = released(x[0], u[0], w[0]);
    const auto df = smooth_min_grad(cfg->x_max, x[0] - e + w[0], cfg->smoothing_c);
    Mat J(1, 1);
    J(0, 0) = df.second * (1.0 - de.second);
    return J;
  };
  m.dynamics_du = [cfg, released](int, const Vec& x, const Vec& u, const Vec& w) {
    const auto de = smooth_min_grad(u[0], x[0] + w[0] - cfg->x_min, cfg->smoothing_c);
    const double e = released(x[0], u[0], w[0]);
    const auto df = smooth_min_grad(cfg->x_max, x[0] - e + w[0], cfg->smoothing_c);
    Mat J(1, 1);
    J(0, 0) = -df.second * de.first;
    return J;
  };

  m.stage_cost = [cfg, released](int t, const Vec& x, const Vec& u, const Vec& w) {
    const double e = released(x[0], u[0], w[0]);
    return imbalance_cost(t, w[1] - production(x[0], e, *cfg), *cfg);
  };
  // head factor eta(x) = (x + x_max - 2 x_min) / (2 (x_max - x_min)), g = e eta(x)
  m.stage_cost_dx = [cfg, released](int t, const Vec& x, const Vec& u, const Vec& w) {
    const auto de = smooth_min_grad(u[0], x[0] + w[0] - cfg->x_min, cfg->smoothing_c);
    const double e = released(x[0], u[0], w[0]);
    const double eta = (x[0] + cfg->x_max - 2.0 * cfg->x_min) / (2.0 * (cfg->x_max - cfg->x_min));
    const double deta = 1.0 / (2.0 * (cfg->x_max - cfg->x_min));
    const double y = w[1] - e * eta;
    const double dcdy = y > kCostCap ? 0.0 : cfg->price[static_cast<size_t>(t)] * std::exp(y);
    return scalar_vec(dcdy * (-(de.second * eta + e * deta)));
  };
  m.stage_cost_du = [cfg, released](int t, const Vec& x, const Vec& u, const Vec& w) {
    const auto de = smooth_min_grad(u[0], x[0] + w[0] - cfg->x_min, cfg->smoothing_c);
    const double e = released(x[0], u[0], w[0]);
    const double eta = (x[0] + cfg->x_max - 2.0 * cfg->x_min) / (2.0 * (cfg->x_max - cfg->x_min));
    const double y = w[1] - e * eta;
    const double dcdy = y > kCostCap ? 0.0 : cfg->price[static_cast<size_t>(t)] * std::exp(y);
    return scalar_vec(dcdy * (-de.first * eta));
  };

  m.final_cost = [cfg](const Vec& x) { return final_cost(x[0], *cfg); };
  m.final_cost_dx = [cfg](const Vec& x) {
    return scalar_vec(2.0 * cfg->final_weight * (x[0] - cfg->x_max));
  };

  m.control_bounds.assign(static_cast<size_t>(T), BoxSet::scalar(config.u_min, config.u_max));

  // Single-pass evaluator sharing the smoothing computations; agrees with
  // the callbacks above term by term.
  m.fused_stage_eval = [cfg](int t, const Vec& x, const Vec& u, const Vec& w,
                             ProblemModel::StageEval& out) {
    const double c = cfg->smoothing_c;
    const auto de = smooth_min_grad(u[0], x[0] + w[0] - cfg->x_min, c);
    const double e = smooth_min(u[0], x[0] + w[0] - cfg->x_min, c);
    const double z = x[0] - e + w[0];
    const auto df = smooth_min_grad(cfg->x_max, z, c);

    out.f.resize(1);
    out.f[0] = smooth_min(cfg->x_max, z, c);
    out.fx.resize(1, 1);
    out.fx(0, 0) = df.second * (1.0 - de.second);
    out.fu.resize(1, 1);
    out.fu(0, 0) = -df.second * de.first;

    const double eta = (x[0] + cfg->x_max - 2.0 * cfg->x_min) / (2.0 * (cfg->x_max - cfg->x_min));
    const double deta = 1.0 / (2.0 * (cfg->x_max - cfg->x_min));
    const double y = w[1] - e * eta;
    out.cost = imbalance_cost(t, y, *cfg);
    const double dcdy = y > kCostCap ? 0.0 : cfg->price[static_cast<size_t>(t)] * std::exp(y);
    out.cost_dx.resize(1);
    out.cost_dx[0] = dcdy * (-(de.second * eta + e * deta));
    out.cost_du.resize(1);
    out.cost_du[0] = dcdy * (-de.first * eta);
  };

  m.validate();
  return m;
}

NoiseModel dam_noise_model(const DamConfig& config) {
  config.validate();
  NoiseModel nm;
  nm.horizon = config.horizon;
  nm.initial_lo = scalar_vec(config.x_min);
  nm.initial_hi = scalar_vec(config.x_max);
  nm.stage_means.resize(static_cast<size_t>(config.horizon));
  for (int t = 1; t <= config.horizon; ++t)
    nm.stage_means[static_cast<size_t>(t - 1)] =
        make_vec({config.mean_inflow[static_cast<size_t>(t - 1)],
                  config.mean_demand[static_cast<size_t>(t - 1)]});
  nm.delta = make_vec({config.delta_inflow, config.delta_demand});
  nm.levels = config.disturbance_levels;
  nm.support_lo = make_vec({0.0, 0.0});
  nm.validate();
  return nm;
}

}  // namespace stoctrl
