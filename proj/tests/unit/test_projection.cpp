#include <doctest.h>

#include <cmath>

#include "stoctrl/projection.hpp"
#include "stoctrl/rng.hpp"

using namespace stoctrl;

namespace {

FiniteProbabilitySpace equal_probs(int m) {
  return FiniteProbabilitySpace(Vec::Constant(m, 1.0 / static_cast<double>(m)));
}

FiniteProbabilitySpace random_space(SplitMix& rng, int m) {
  Vec p(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    p[i] = rng.uniform(0.1, 1.0);
    total += p[i];
  }
  p /= total;
  // renormalize exactly enough for the 1e-12 gate
  p[m - 1] += 1.0 - p.sum();
  return FiniteProbabilitySpace(p);
}

Partition random_partition(SplitMix& rng, int atoms, int cells) {
  std::vector<int> assign(static_cast<size_t>(atoms));
  for (int c = 0; c < cells; ++c) assign[static_cast<size_t>(c)] = c;  // keep cells nonempty
  for (int i = cells; i < atoms; ++i)
    assign[static_cast<size_t>(i)] = static_cast<int>(rng.uniform() * cells);
  return Partition(std::move(assign), cells);
}

SimpleRandomVariable random_srv(SplitMix& rng, int atoms, int dim, double lo, double hi) {
  SimpleRandomVariable v;
  v.values.resize(atoms, dim);
  for (int i = 0; i < atoms; ++i)
    for (int d = 0; d < dim; ++d) v.values(i, d) = rng.uniform(lo, hi);
  return v;
}

/// Independent oracle: per-cell, per-coordinate minimizer of
///   sum_{i in C} p_i (v_i - z)^2  over z in [lo, hi],
/// analytically clamp(weighted mean), cross-checked by golden-section
/// search on the same quadratic.
double cell_oracle_analytic(const std::vector<int>& cell, const Vec& probs, const Mat& values,
                            int d, double lo, double hi) {
  double mass = 0.0, acc = 0.0;
  for (int i : cell) {
    mass += probs[i];
    acc += probs[i] * values(i, d);
  }
  return std::clamp(acc / mass, lo, hi);
}

double cell_oracle_search(const std::vector<int>& cell, const Vec& probs, const Mat& values,
                          int d, double lo, double hi) {
  auto objective = [&](double z) {
    double acc = 0.0;
    for (int i : cell) acc += probs[i] * (values(i, d) - z) * (values(i, d) - z);
    return acc;
  };
  // dense scan then golden-section refinement
  const int scan = 2001;
  double best_z = lo, best_v = objective(lo);
  for (int s = 1; s < scan; ++s) {
    const double z = lo + (hi - lo) * static_cast<double>(s) / (scan - 1);
    const double v = objective(z);
    if (v < best_v) {
      best_v = v;
      best_z = z;
    }
  }
  double a = std::max(lo, best_z - (hi - lo) / (scan - 1));
  double b = std::min(hi, best_z + (hi - lo) / (scan - 1));
  const double invphi = 0.6180339887498949;
  while (b - a > 1e-12) {
    const double x1 = b - invphi * (b - a);
    const double x2 = a + invphi * (b - a);
    if (objective(x1) <= objective(x2)) b = x2;
    else a = x1;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_SUITE_BEGIN("projection");

TEST_CASE("conditional expectation averages within cells") {
  const auto space = equal_probs(3);
  SimpleRandomVariable v;
  v.values.resize(3, 1);
  v.values << 1.0, 3.0, 5.0;
  const Partition part({0, 0, 1}, 2);
  const auto e = cond_expectation(v, space, part);
  CHECK(e.values(0, 0) == doctest::Approx(2.0));
  CHECK(e.values(1, 0) == doctest::Approx(2.0));
  CHECK(e.values(2, 0) == doctest::Approx(5.0));

  const auto singles = cond_expectation(v, space, Partition::singletons(3));
  CHECK((singles.values - v.values).norm() == 0.0);
}

TEST_CASE("conditional expectation is the weighted least-squares fit per cell") {
  SplitMix rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 4 + static_cast<int>(rng.uniform() * 12);
    const int cells = 1 + static_cast<int>(rng.uniform() * 3);
    const auto space = random_space(rng, m);
    const auto part = random_partition(rng, m, cells);
    const auto v = random_srv(rng, m, 1, -5.0, 5.0);
    const auto e = cond_expectation(v, space, part);
    const auto members = part.members();
    for (int c = 0; c < cells; ++c) {
      const double z =
          cell_oracle_search(members[static_cast<size_t>(c)], space.probs, v.values, 0, -10.0, 10.0);
      for (int i : members[static_cast<size_t>(c)])
        CHECK(e.values(i, 0) == doctest::Approx(z).epsilon(1e-8));
    }
  }
}

TEST_CASE("cond_expectation is idempotent, self-adjoint and non-expansive") {
  SplitMix rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    const int m = 6 + static_cast<int>(rng.uniform() * 10);
    const auto space = random_space(rng, m);
    const auto part = random_partition(rng, m, 3);
    const auto v = random_srv(rng, m, 2, -3.0, 3.0);
    const auto w = random_srv(rng, m, 2, -3.0, 3.0);

    const auto ev = cond_expectation(v, space, part);
    const auto eev = cond_expectation(ev, space, part);
    CHECK((eev.values - ev.values).norm() <= 1e-12);

    const auto ew = cond_expectation(w, space, part);
    CHECK(weighted_dot(ev, w, space) == doctest::Approx(weighted_dot(v, ew, space)).epsilon(1e-12));

    CHECK(weighted_norm(ev, space) <= weighted_norm(v, space) + 1e-12);
  }
}

TEST_CASE("tower property across refining partitions") {
  SplitMix rng(47);
  const int m = 16;
  const auto space = random_space(rng, m);
  // fine: 8 cells of 2 atoms; coarse: 4 cells of 4 atoms
  std::vector<int> fine_a(m), coarse_a(m);
  for (int i = 0; i < m; ++i) {
    fine_a[static_cast<size_t>(i)] = i / 2;
    coarse_a[static_cast<size_t>(i)] = i / 4;
  }
  const Partition fine(fine_a, 8), coarse(coarse_a, 4);
  CHECK(is_refinement(fine, coarse));
  CHECK_FALSE(is_refinement(coarse, fine));

  const auto v = random_srv(rng, m, 2, -2.0, 2.0);
  const auto through_fine = cond_expectation(cond_expectation(v, space, fine), space, coarse);
  const auto direct = cond_expectation(v, space, coarse);
  CHECK((through_fine.values - direct.values).norm() <= 1e-12);
}

TEST_CASE("measurable box projection clamps the cell means") {
  const auto space = equal_probs(2);
  const Partition one_cell = Partition::trivial(2);

  SimpleRandomVariable v;
  v.values.resize(2, 1);
  v.values << 2.0, -1.0;
  auto p = project_measurable_box(v, space, one_cell, {BoxSet::scalar(0.0, 1.0)});
  CHECK(p.values(0, 0) == doctest::Approx(0.5));
  CHECK(p.values(1, 0) == doctest::Approx(0.5));

  v.values << 3.0, 5.0;
  p = project_measurable_box(v, space, one_cell, {BoxSet::scalar(0.0, 1.0)});
  CHECK(p.values(0, 0) == doctest::Approx(1.0));
  CHECK(p.values(1, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(project_measurable_box(v, space, one_cell,
                                         {BoxSet::scalar(0.0, 1.0), BoxSet::scalar(0.0, 1.0)}),
                  InvalidArgument);
}

TEST_CASE("projection composition matches the independent per-cell oracle") {
  SplitMix rng(53);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 2 + static_cast<int>(rng.uniform() * 62);  // up to 64 atoms
    const int cells = 1 + static_cast<int>(rng.uniform() * std::min(m, 5));
    const auto space = random_space(rng, m);
    const auto part = random_partition(rng, m, cells);
    const auto v = random_srv(rng, m, 1, -4.0, 4.0);
    std::vector<BoxSet> boxes;
    for (int c = 0; c < cells; ++c) {
      const double lo = rng.uniform(-2.0, 0.0);
      boxes.push_back(BoxSet::scalar(lo, lo + rng.uniform(0.1, 3.0)));
    }
    const auto p = project_measurable_box(v, space, part, boxes);
    const auto members = part.members();
    for (int c = 0; c < cells; ++c) {
      const auto& cell = members[static_cast<size_t>(c)];
      const double analytic =
          cell_oracle_analytic(cell, space.probs, v.values, 0, boxes[static_cast<size_t>(c)].lo[0],
                               boxes[static_cast<size_t>(c)].hi[0]);
      const double searched =
          cell_oracle_search(cell, space.probs, v.values, 0, boxes[static_cast<size_t>(c)].lo[0],
                             boxes[static_cast<size_t>(c)].hi[0]);
      CHECK(std::abs(analytic - searched) <= 1e-6);
      for (int i : cell) CHECK(std::abs(p.values(i, 0) - analytic) <= 1e-9);
    }
  }
}

TEST_CASE("kkt residual vanishes exactly at constrained stationary points") {
  SplitMix rng(59);
  const int m = 8;
  const auto space = random_space(rng, m);
  const auto part = random_partition(rng, m, 3);
  const auto a = random_srv(rng, m, 1, -2.0, 2.0);

  // unconstrained quadratic |v - a|^2 / 2 at v = E[a | part]: residual 0
  const auto v = cond_expectation(a, space, part);
  SimpleRandomVariable grad;
  grad.values = v.values - a.values;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<BoxSet> free_boxes(3, BoxSet(scalar_vec(-inf), scalar_vec(inf)));
  CHECK(kkt_residual(v, grad, space, part, free_boxes) <= 1e-12);

  // interior point with a nonzero projected gradient: residual > 0
  SimpleRandomVariable off = v;
  off.values.array() += 0.5;
  SimpleRandomVariable grad_off;
  grad_off.values = off.values - a.values;
  CHECK(kkt_residual(off, grad_off, space, part, free_boxes) > 1e-6);
}

TEST_CASE("kkt residual is tiny at the brute-force box-constrained minimizer") {
  SplitMix rng(61);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 4 + static_cast<int>(rng.uniform() * 12);
    const int cells = 1 + static_cast<int>(rng.uniform() * 3);
    const auto space = random_space(rng, m);
    const auto part = random_partition(rng, m, cells);
    const auto a = random_srv(rng, m, 1, -3.0, 3.0);
    std::vector<BoxSet> boxes;
    for (int c = 0; c < cells; ++c) {
      const double lo = rng.uniform(-1.5, 0.5);
      boxes.push_back(BoxSet::scalar(lo, lo + rng.uniform(0.2, 2.0)));
    }
    // minimize sum p_i |v_i - a_i|^2 / 2 over cell-constant v in boxes:
    // the projection itself; the per-cell analytic oracle gives the value.
    SimpleRandomVariable vstar;
    vstar.values.resize(m, 1);
    const auto members = part.members();
    for (int c = 0; c < cells; ++c)
      for (int i : members[static_cast<size_t>(c)])
        vstar.values(i, 0) =
            cell_oracle_analytic(members[static_cast<size_t>(c)], space.probs, a.values, 0,
                                 boxes[static_cast<size_t>(c)].lo[0],
                                 boxes[static_cast<size_t>(c)].hi[0]);
    SimpleRandomVariable grad;
    grad.values = vstar.values - a.values;
    CHECK(kkt_residual(vstar, grad, space, part, boxes) <= 1e-8);
  }
}

TEST_CASE("construction rejects malformed spaces and partitions") {
  CHECK_THROWS_AS(FiniteProbabilitySpace(make_vec({0.5, 0.4})), InvalidArgument);
  CHECK_THROWS_AS(FiniteProbabilitySpace(make_vec({1.5, -0.5})), InvalidArgument);
  CHECK_THROWS_AS(Partition({0, 2}, 3), InvalidArgument);  // empty cell 1
  CHECK_THROWS_AS(Partition({0, 5}, 2), InvalidArgument);  // id out of range
}

TEST_SUITE_END();
