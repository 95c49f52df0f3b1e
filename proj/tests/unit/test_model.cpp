#include <doctest.h>

#include <cmath>

#include "stoctrl/model.hpp"
#include "stoctrl/rng.hpp"
#include "support/toy_models.hpp"

using namespace stoctrl;

TEST_SUITE_BEGIN("model");

TEST_CASE("smooth_min branch values") {
  CHECK(smooth_min(1.0, 0.5, 0.1) == doctest::Approx(0.5));
  CHECK(smooth_min(1.0, 1.0, 0.1) == doctest::Approx(0.975));
  CHECK(smooth_min(0.5, 1.0, 0.1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(smooth_min(0.0, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(smooth_min(0.0, 0.0, -1.0), InvalidArgument);
}

TEST_CASE("smooth_min approximates min with gap at most c/4") {
  SplitMix rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-3.0, 3.0);
    const double y = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(1e-4, 0.5);
    const double gap = std::min(x, y) - smooth_min(x, y, c);
    CHECK(gap >= -1e-15);
    CHECK(gap <= c / 4 + 1e-15);
  }
  // the largest gap is attained exactly at x == y
  CHECK(std::min(2.0, 2.0) - smooth_min(2.0, 2.0, 0.2) == doctest::Approx(0.05));
}

TEST_CASE("smooth_min_grad branches and seam continuity") {
  const auto low = smooth_min_grad(1.0, 0.5, 0.1);
  CHECK(low.first == doctest::Approx(0.0));
  CHECK(low.second == doctest::Approx(1.0));

  const auto mid = smooth_min_grad(1.0, 1.0, 0.1);
  CHECK(mid.first == doctest::Approx(0.5));
  CHECK(mid.second == doctest::Approx(0.5));

  const auto high = smooth_min_grad(0.5, 1.0, 0.1);
  CHECK(high.first == doctest::Approx(1.0));
  CHECK(high.second == doctest::Approx(0.0));

  // at y = x - c the middle formula meets the low branch (0, 1)
  const double x = 0.7, c = 0.1;
  const auto seam = smooth_min_grad(x, x - c, c);
  CHECK(seam.first == doctest::Approx(0.0));
  CHECK(seam.second == doctest::Approx(1.0));
  const auto seam_hi = smooth_min_grad(x, x + c, c);
  CHECK(seam_hi.first == doctest::Approx(1.0));
  CHECK(seam_hi.second == doctest::Approx(0.0));

  CHECK_THROWS_AS(smooth_min_grad(0.0, 0.0, 0.0), InvalidArgument);
}

TEST_CASE("smooth_min gradient matches finite differences") {
  SplitMix rng(5);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-2.0, 2.0);
    const double y = rng.uniform(-2.0, 2.0);
    const double c = rng.uniform(0.05, 0.5);
    const double h = 1e-7;
    const auto g = smooth_min_grad(x, y, c);
    const double gx = (smooth_min(x + h, y, c) - smooth_min(x - h, y, c)) / (2 * h);
    const double gy = (smooth_min(x, y + h, c) - smooth_min(x, y - h, c)) / (2 * h);
    CHECK(g.first == doctest::Approx(gx).epsilon(1e-4));
    CHECK(g.second == doctest::Approx(gy).epsilon(1e-4));
  }
}

TEST_CASE("project_box clamps componentwise") {
  const BoxSet box(make_vec({0.0, 0.0, 0.0}), make_vec({1.0, 1.0, 1.0}));
  const Vec v = make_vec({-0.5, 0.3, 1.7});
  const Vec p = project_box(v, box);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.3);
  CHECK(p[2] == 1.0);

  const Vec inside = make_vec({0.2, 0.8, 0.5});
  CHECK((project_box(inside, box) - inside).norm() == 0.0);

  CHECK_THROWS_AS(project_box(make_vec({1.0}), box), InvalidArgument);
}

TEST_CASE("project_box is idempotent and non-expansive") {
  SplitMix rng(17);
  for (int i = 0; i < 100; ++i) {
    Vec lo(3), hi(3), a(3), b(3);
    for (int c = 0; c < 3; ++c) {
      lo[c] = rng.uniform(-2.0, 0.0);
      hi[c] = rng.uniform(0.0, 2.0);
      a[c] = rng.uniform(-4.0, 4.0);
      b[c] = rng.uniform(-4.0, 4.0);
    }
    const BoxSet box(lo, hi);
    const Vec pa = project_box(a, box);
    CHECK((project_box(pa, box) - pa).norm() == 0.0);
    CHECK((pa - project_box(b, box)).norm() <= (a - b).norm() + 1e-15);
  }
}

TEST_CASE("BoxSet rejects inverted bounds") {
  CHECK_THROWS_AS(BoxSet(make_vec({1.0}), make_vec({0.0})), InvalidArgument);
  CHECK_THROWS_AS(BoxSet(make_vec({0.0, 0.0}), make_vec({1.0})), InvalidArgument);
}

TEST_CASE("analytic derivatives of a random smooth model match finite differences") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const ProblemModel model = testsupport::random_smooth_model(5, seed);
    const auto sampler = box_point_sampler(model, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, seed + 100);
    const auto report = check_derivatives(model, sampler, 20);
    CHECK(report.points_checked == 100);
    CHECK(report.max_rel_error <= 1e-6);
  }
}

TEST_CASE("fused stage evaluator agrees with the individual callbacks") {
  const ProblemModel model = testsupport::random_smooth_model(4, 9);
  ProblemModel fused = model;
  fused.fused_stage_eval = [&model](int t, const Vec& x, const Vec& u, const Vec& w,
                                    ProblemModel::StageEval& out) {
    eval_stage(model, t, x, u, w, out);
  };
  const auto sampler = box_point_sampler(model, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 77);
  Vec x, u, w;
  ProblemModel::StageEval a, b;
  for (int t = 0; t < model.horizon; ++t) {
    sampler(t, x, u, w);
    eval_stage(model, t, x, u, w, a);
    eval_stage(fused, t, x, u, w, b);
    CHECK((a.f - b.f).norm() == 0.0);
    CHECK(a.cost == b.cost);
    CHECK((a.cost_dx - b.cost_dx).norm() == 0.0);
    CHECK((a.cost_du - b.cost_du).norm() == 0.0);
  }
}

TEST_SUITE_END();
