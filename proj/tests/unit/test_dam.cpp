#include <doctest.h>

#include <cmath>

#include "stoctrl/dam.hpp"
#include "stoctrl/rng.hpp"

using namespace stoctrl;

TEST_SUITE_BEGIN("dam");

TEST_CASE("production follows the linear head factor") {
  const DamConfig cfg = DamConfig::defaults();
  CHECK(production(2.0, 0.5, cfg) == doctest::Approx(0.5));
  CHECK(production(0.0, 0.5, cfg) == doctest::Approx(0.25));
  CHECK(production(1.0, 1.0, cfg) == doctest::Approx(0.75));
  // efficiency factor within [0.5, 1] on the storage range
  for (double x = 0.0; x <= 2.0; x += 0.25) {
    const double factor = production(x, 1.0, cfg);
    CHECK(factor >= 0.5);
    CHECK(factor <= 1.0);
  }
}

TEST_CASE("imbalance cost is the priced exponential") {
  const DamConfig cfg = DamConfig::defaults();
  CHECK(imbalance_cost(0, 0.0, cfg) == doctest::Approx(0.0));

  DamConfig unit = cfg;
  unit.price.assign(static_cast<size_t>(unit.horizon), 1.0);
  CHECK(imbalance_cost(3, std::log(2.0), unit) == doctest::Approx(1.0));

  // surplus earns money
  CHECK(imbalance_cost(0, -1.0, cfg) < 0.0);

  // convexity on random pairs
  SplitMix rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-3.0, 3.0);
    const double b = rng.uniform(-3.0, 3.0);
    const double mid = imbalance_cost(5, 0.5 * (a + b), cfg);
    const double avg = 0.5 * (imbalance_cost(5, a, cfg) + imbalance_cost(5, b, cfg));
    CHECK(mid <= avg + 1e-12);
  }

  // the saturation guard keeps extreme imbalances finite
  CHECK(std::isfinite(imbalance_cost(0, 100.0, cfg)));
  CHECK(imbalance_cost(0, 100.0, cfg) == imbalance_cost(0, 60.0, cfg));
}

TEST_CASE("final cost and its derivative") {
  const DamConfig cfg = DamConfig::defaults();
  CHECK(final_cost(2.0, cfg) == doctest::Approx(0.0));
  CHECK(final_cost(0.0, cfg) == doctest::Approx(48.0));

  const ProblemModel model = build_dam_model(cfg);
  const double h = 1e-6;
  for (double x : {0.1, 0.8, 1.5, 1.9}) {
    const double fd =
        (model.final_cost(scalar_vec(x + h)) - model.final_cost(scalar_vec(x - h))) / (2 * h);
    CHECK(model.final_cost_dx(scalar_vec(x))[0] == doctest::Approx(fd).epsilon(1e-6));
    CHECK(model.final_cost_dx(scalar_vec(x))[0] == doctest::Approx(24.0 * (x - 2.0)));
  }
}

TEST_CASE("smoothed dynamics approach the exact min dynamics as c vanishes") {
  DamConfig cfg = DamConfig::defaults();
  cfg.smoothing_c = 1e-4;
  const ProblemModel model = build_dam_model(cfg);
  SplitMix rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.0, 2.0);
    const double u = rng.uniform(0.0, 1.0);
    const double a = rng.uniform(0.0, 0.1);
    const double d = rng.uniform(0.1, 1.0);
    // exact-min oracle, straight from the definitions
    const double e_exact = std::min(u, x + a - cfg.x_min);
    const double next_exact = std::min(x - e_exact + a, cfg.x_max);
    const double next = model.dynamics(0, scalar_vec(x), scalar_vec(u), make_vec({a, d}))[0];
    CHECK(std::abs(next - next_exact) <= cfg.smoothing_c / 2.0);
  }
}

TEST_CASE("no inflow and no release leaves the storage unchanged below the cap") {
  DamConfig cfg = DamConfig::defaults();
  const ProblemModel model = build_dam_model(cfg);
  for (double x : {0.3, 1.0, 1.7}) {
    const double next = model.dynamics(0, scalar_vec(x), scalar_vec(0.0), make_vec({0.0, 0.5}))[0];
    CHECK(next == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("dam derivatives agree with finite differences") {
  const DamConfig cfg = DamConfig::defaults();
  const ProblemModel model = build_dam_model(cfg);
  const auto sampler = box_point_sampler(model, 0.05, 1.95, 0.05, 0.95, 0.1, 0.9, 71);
  const auto report = check_derivatives(model, sampler, 5);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("cost gradient in the imbalance is positive everywhere") {
  const DamConfig cfg = DamConfig::defaults();
  for (double y : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
    const double h = 1e-6;
    const double dc = (imbalance_cost(2, y + h, cfg) - imbalance_cost(2, y - h, cfg)) / (2 * h);
    CHECK(dc > 0.0);
  }
}

TEST_CASE("invalid configurations are rejected") {
  DamConfig bad = DamConfig::defaults();
  bad.x_min = 3.0;  // above x_max
  CHECK_THROWS_AS(build_dam_model(bad), InvalidArgument);

  bad = DamConfig::defaults();
  bad.price[0] = 0.0;
  CHECK_THROWS_AS(build_dam_model(bad), InvalidArgument);

  bad = DamConfig::defaults();
  bad.smoothing_c = 0.0;
  CHECK_THROWS_AS(build_dam_model(bad), InvalidArgument);

  bad = DamConfig::defaults();
  bad.mean_demand.pop_back();
  CHECK_THROWS_AS(build_dam_model(bad), InvalidArgument);
}

TEST_CASE("noise model exposes the configured curves") {
  const DamConfig cfg = DamConfig::defaults();
  const NoiseModel nm = dam_noise_model(cfg);
  CHECK(nm.horizon == 24);
  CHECK(nm.initial_lo[0] == 0.0);
  CHECK(nm.initial_hi[0] == 2.0);
  CHECK(nm.stage_means[7][1] > nm.stage_means[2][1]);  // morning peak above the trough
  CHECK(nm.delta[0] == cfg.delta_inflow);
  CHECK(nm.delta[1] == cfg.delta_demand);
}

TEST_SUITE_END();
