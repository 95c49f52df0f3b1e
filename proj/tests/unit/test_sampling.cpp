#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stoctrl/csv.hpp"
#include "stoctrl/dam.hpp"
#include "stoctrl/parallel.hpp"
#include "stoctrl/sampling.hpp"

using namespace stoctrl;

namespace {

bool identical_sets(const ScenarioSet& a, const ScenarioSet& b) {
  if (a.count != b.count || a.horizon != b.horizon) return false;
  for (int k = 0; k < a.count; ++k)
    for (int t = 0; t <= a.horizon; ++t) {
      if (a.at(k, t).size() != b.at(k, t).size()) return false;
      for (Eigen::Index c = 0; c < a.at(k, t).size(); ++c)
        if (a.at(k, t)[c] != b.at(k, t)[c]) return false;
    }
  return true;
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE_BEGIN("sampling");

TEST_CASE("dam scenario shapes and determinism") {
  const NoiseModel nm = dam_noise_model(DamConfig::defaults());
  const ScenarioSet a = draw_scenarios(nm, 200, 1);
  CHECK(a.count == 200);
  CHECK(a.horizon == 24);
  for (int k = 0; k < a.count; ++k) {
    REQUIRE(static_cast<int>(a.values[static_cast<size_t>(k)].size()) == 25);
    CHECK(a.at(k, 0).size() == 1);
    CHECK(a.at(k, 5).size() == 2);
  }
  const ScenarioSet b = draw_scenarios(nm, 200, 1);
  CHECK(identical_sets(a, b));
  const ScenarioSet c = draw_scenarios(nm, 200, 2);
  CHECK_FALSE(identical_sets(a, c));
}

TEST_CASE("generation is identical under any worker count") {
  const NoiseModel nm = dam_noise_model(DamConfig::defaults());
  set_max_workers(1);
  const ScenarioSet serial = draw_scenarios(nm, 64, 9);
  set_max_workers(4);
  const ScenarioSet parallel = draw_scenarios(nm, 64, 9);
  set_max_workers(0);
  CHECK(identical_sets(serial, parallel));
}

TEST_CASE("empirical stage means stay within the Monte-Carlo bound") {
  const DamConfig cfg = DamConfig::defaults();
  const NoiseModel nm = dam_noise_model(cfg);
  const int n = 200;
  const ScenarioSet set = draw_scenarios(nm, n, 1);
  // three-point disturbance {-d, 0, +d}: std = d * sqrt(2/3)
  for (int t = 1; t <= set.horizon; ++t) {
    double mean_a = 0.0, mean_d = 0.0;
    for (int k = 0; k < n; ++k) {
      mean_a += set.at(k, t)[0];
      mean_d += set.at(k, t)[1];
    }
    mean_a /= n;
    mean_d /= n;
    const double bound_a = 3.0 * cfg.delta_inflow * std::sqrt(2.0 / 3.0) / std::sqrt(n);
    const double bound_d = 3.0 * cfg.delta_demand * std::sqrt(2.0 / 3.0) / std::sqrt(n);
    CHECK(std::abs(mean_a - cfg.mean_inflow[static_cast<size_t>(t - 1)]) <= bound_a);
    CHECK(std::abs(mean_d - cfg.mean_demand[static_cast<size_t>(t - 1)]) <= bound_d);
  }
}

TEST_CASE("samples respect the configured supports exactly") {
  const DamConfig cfg = DamConfig::defaults();
  const ScenarioSet set = draw_scenarios(dam_noise_model(cfg), 300, 4);
  for (int k = 0; k < set.count; ++k) {
    CHECK(set.at(k, 0)[0] >= cfg.x_min);
    CHECK(set.at(k, 0)[0] <= cfg.x_max);
    for (int t = 1; t <= set.horizon; ++t) {
      CHECK(set.at(k, t)[0] >= 0.0);  // inflows
      CHECK(set.at(k, t)[1] >= 0.0);  // demand
    }
  }
}

TEST_CASE("stage-wise cross-correlations stay within 4/sqrt(N)") {
  const NoiseModel nm = dam_noise_model(DamConfig::defaults());
  const int n = 200;
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  int checks = 0, passes = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const ScenarioSet set = draw_scenarios(nm, n, seed);
    for (auto [t, s] : {std::pair{1, 2}, std::pair{3, 12}, std::pair{7, 24}}) {
      std::vector<double> xs, ys;
      for (int k = 0; k < n; ++k) {
        xs.push_back(set.at(k, t)[1]);
        ys.push_back(set.at(k, s)[1]);
      }
      ++checks;
      if (std::abs(correlation(xs, ys)) <= bound) ++passes;
    }
  }
  CHECK(static_cast<double>(passes) >= 0.95 * static_cast<double>(checks));
}

TEST_CASE("split returns the train set unchanged plus a fresh test set") {
  const DamConfig cfg = DamConfig::defaults();
  const NoiseModel nm = dam_noise_model(cfg);
  const ScenarioSet original = draw_scenarios(nm, 200, 1);
  const auto [train, test] = split(original, 2);

  CHECK(identical_sets(train, original));
  CHECK(train.role == ScenarioSet::Role::train);
  CHECK(test.role == ScenarioSet::Role::test);
  CHECK(test.count == 200);
  CHECK_FALSE(identical_sets(test, original));

  // the test set's empirical demand mean obeys the same Monte-Carlo bound
  for (int t : {1, 12, 24}) {
    double mean = 0.0;
    for (int k = 0; k < test.count; ++k) mean += test.at(k, t)[1];
    mean /= test.count;
    const double bound = 3.0 * cfg.delta_demand * std::sqrt(2.0 / 3.0) / std::sqrt(200.0);
    CHECK(std::abs(mean - cfg.mean_demand[static_cast<size_t>(t - 1)]) <= bound);
  }
}

TEST_CASE("degenerate and malformed inputs are rejected") {
  const NoiseModel nm = dam_noise_model(DamConfig::defaults());
  CHECK_THROWS_AS(draw_scenarios(nm, 0, 1), InvalidArgument);

  NoiseModel bad = nm;
  bad.delta[0] = -0.1;
  CHECK_THROWS_AS(draw_scenarios(bad, 10, 1), InvalidArgument);

  NoiseModel breaks_support = nm;
  breaks_support.delta[0] = 1.0;  // inflows would go negative
  CHECK_THROWS_AS(draw_scenarios(breaks_support, 10, 1), InvalidArgument);

  NoiseModel no_levels = nm;
  no_levels.levels = 0;
  CHECK_THROWS_AS(draw_scenarios(no_levels, 10, 1), InvalidArgument);

  ScenarioSet handmade;
  handmade.count = 1;
  handmade.horizon = 2;
  handmade.values = {{scalar_vec(0.0), scalar_vec(0.0), scalar_vec(0.0)}};
  CHECK_THROWS_AS(split(handmade, 1), InvalidArgument);  // no source model
}

TEST_CASE("scenario csv round-trips bitwise") {
  const NoiseModel nm = dam_noise_model(DamConfig::defaults());
  const ScenarioSet set = draw_scenarios(nm, 23, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "stoctrl_test_scen.csv").string();
  write_scenarios(path, set);
  const ScenarioSet back = read_scenarios(path);
  CHECK(identical_sets(set, back));
  CHECK(back.seed == set.seed);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
