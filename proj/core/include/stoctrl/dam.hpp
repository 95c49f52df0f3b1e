#pragma once

#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/model.hpp"
#include "stoctrl/sampling.hpp"

namespace stoctrl {

/// Data of the hydro-electric dam benchmark: a single reservoir managed
/// over 24 hourly stages, selling power against a stochastic demand.
///
/// The default curves are artifact data chosen to be qualitatively
/// realistic: demand with morning and evening peaks, price following the
/// demand shape rescaled to [1, 3], constant inflows. All of them can be
/// overridden through the plain-text configuration file.
struct DamConfig {
  int horizon = 24;            // hours
  double x_min = 0.0;          // storage bounds (volume)
  double x_max = 2.0;
  double u_min = 0.0;          // turbine decision bounds
  double u_max = 1.0;
  std::vector<double> price;        // tau_t, stages 0..T-1
  std::vector<double> mean_inflow;  // abar_t, stages 1..T
  std::vector<double> mean_demand;  // dbar_t, stages 1..T
  double delta_inflow = 0.02;       // disturbance half-widths
  double delta_demand = 0.1;
  int disturbance_levels = 3;
  double smoothing_c = 0.01;
  double final_weight = 12.0;

  static DamConfig defaults();
  void validate() const;
};

/// Turbinated volume to energy: linear head effect, efficiency 0.5 at the
/// empty dam and 1 at the full dam.
double production(double storage, double released, const DamConfig& config);

/// Cost of the demand/production imbalance y at stage t: tau_t (e^y - 1).
/// Negative y (surplus) earns money. Saturates above y = 50 with a logged
/// warning to keep the exponential finite.
double imbalance_cost(int stage, double imbalance, const DamConfig& config);

/// Incentive to fill the dam at the end of the day.
double final_cost(double storage, const DamConfig& config);

/// Assembles the ProblemModel: smoothed dynamics
///   e = smin(u, x + a - x_min),  x' = smin(x_max, x - e + a),
/// stage cost c_t(d - g(x, e)), final cost, control box [u_min, u_max],
/// with analytic chain-rule derivatives through the smoothing.
ProblemModel build_dam_model(const DamConfig& config);

/// White-noise model of the benchmark: stage 0 draws the initial storage
/// uniformly in [x_min, x_max]; stages 1..T draw (inflow, demand) around
/// their mean curves with the configured discrete disturbances.
NoiseModel dam_noise_model(const DamConfig& config);

}  // namespace stoctrl
