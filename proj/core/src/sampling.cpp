#include "stoctrl/sampling.hpp"

#include <cmath>

#include "stoctrl/parallel.hpp"
#include "stoctrl/rng.hpp"

namespace stoctrl {

int NoiseModel::stage_dim(int t) const {
  return t == 0 ? static_cast<int>(initial_lo.size())
                : static_cast<int>(stage_means.empty() ? 0 : stage_means[0].size());
}

void NoiseModel::validate() const {
  if (horizon < 1) throw InvalidArgument("NoiseModel: horizon must be >= 1");
  if (initial_lo.size() == 0 || initial_lo.size() != initial_hi.size())
    throw InvalidArgument("NoiseModel: bad initial state bounds");
  for (Eigen::Index i = 0; i < initial_lo.size(); ++i)
    if (!(initial_lo[i] <= initial_hi[i]))
      throw InvalidArgument("NoiseModel: initial_lo > initial_hi");
  if (static_cast<int>(stage_means.size()) != horizon)
    throw InvalidArgument("NoiseModel: stage_means must have T entries");
  const Eigen::Index d = stage_means[0].size();
  if (d == 0) throw InvalidArgument("NoiseModel: empty stage mean");
  for (const Vec& m : stage_means)
    if (m.size() != d) throw InvalidArgument("NoiseModel: inconsistent stage mean dims");
  if (delta.size() != d) throw InvalidArgument("NoiseModel: delta dim mismatch");
  for (Eigen::Index i = 0; i < d; ++i)
    if (delta[i] < 0.0) throw InvalidArgument("NoiseModel: negative disturbance magnitude");
  if (levels < 1) throw InvalidArgument("NoiseModel: levels must be >= 1");
  if (support_lo.size() != 0 && support_lo.size() != d)
    throw InvalidArgument("NoiseModel: support_lo dim mismatch");
  if (support_lo.size() == d) {
    for (int t = 1; t <= horizon; ++t)
      for (Eigen::Index i = 0; i < d; ++i)
        if (stage_means[t - 1][i] - delta[i] < support_lo[i])
          throw InvalidArgument("NoiseModel: disturbance leaves the configured support at stage " +
                                std::to_string(t));
  }
}

void ScenarioSet::validate() const {
  if (count < 1) throw InvalidArgument("ScenarioSet: empty scenario set");
  if (static_cast<int>(values.size()) != count)
    throw InvalidArgument("ScenarioSet: scenario count mismatch");
  for (const auto& traj : values)
    if (static_cast<int>(traj.size()) != horizon + 1)
      throw InvalidArgument("ScenarioSet: every scenario needs T+1 stage entries");
}

namespace {

/// Disturbance value for level index l of `levels` evenly spaced points in
/// [-delta, delta]; symmetric, hence zero-mean.
double level_value(int l, int levels, double delta) {
  if (levels == 1) return 0.0;
  return -delta + 2.0 * delta * static_cast<double>(l) / static_cast<double>(levels - 1);
}

Vec draw_stage(const NoiseModel& model, std::uint64_t seed, int scenario, int stage) {
  if (stage == 0) {
    Vec w(model.initial_lo.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double r = keyed_u01(seed, static_cast<std::uint64_t>(scenario), 0,
                                 static_cast<std::uint64_t>(i));
      w[i] = model.initial_lo[i] + (model.initial_hi[i] - model.initial_lo[i]) * r;
    }
    return w;
  }
  const Vec& mean = model.stage_means[stage - 1];
  Vec w(mean.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double r = keyed_u01(seed, static_cast<std::uint64_t>(scenario),
                               static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(i));
    int level = static_cast<int>(r * model.levels);
    if (level >= model.levels) level = model.levels - 1;
    w[i] = mean[i] + level_value(level, model.levels, model.delta[i]);
  }
  return w;
}

}  // namespace

ScenarioSet draw_scenarios(const NoiseModel& model, int count, std::uint64_t seed) {
  model.validate();
  if (count < 1) throw InvalidArgument("draw_scenarios: scenario count must be >= 1");

  ScenarioSet set;
  set.count = count;
  set.horizon = model.horizon;
  set.seed = seed;
  set.role = ScenarioSet::Role::train;
  set.source = model;
  set.values.assign(static_cast<size_t>(count), {});

  parallel_for(0, count, [&](int k) {
    auto& traj = set.values[static_cast<size_t>(k)];
    traj.resize(static_cast<size_t>(model.horizon) + 1);
    for (int t = 0; t <= model.horizon; ++t) traj[t] = draw_stage(model, seed, k, t);
  });
  return set;
}

std::pair<ScenarioSet, ScenarioSet> split(const ScenarioSet& scenarios, std::uint64_t seed) {
  scenarios.validate();
  if (!scenarios.source)
    throw InvalidArgument("split: scenario set carries no noise model to draw a test set from");

  ScenarioSet train = scenarios;
  train.role = ScenarioSet::Role::train;

  // Decorrelate the test stream from any plausible training seed.
  const std::uint64_t test_seed = hash_combine(splitmix64(seed), 0x7e57c0deull);
  ScenarioSet test = draw_scenarios(*scenarios.source, scenarios.count, test_seed);
  test.role = ScenarioSet::Role::test;
  return {std::move(train), std::move(test)};
}

}  // namespace stoctrl
