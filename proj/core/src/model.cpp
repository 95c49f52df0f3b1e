#include "stoctrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "stoctrl/rng.hpp"

namespace stoctrl {

BoxSet::BoxSet(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw InvalidArgument("BoxSet: lo/hi dimension mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw InvalidArgument("BoxSet: lo > hi at component " + std::to_string(i));
  }
}

BoxSet BoxSet::scalar(double lo, double hi) { return BoxSet(scalar_vec(lo), scalar_vec(hi)); }

BoxSet BoxSet::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return BoxSet(Vec::Constant(dim, -inf), Vec::Constant(dim, inf));
}

Vec BoxSet::midpoint() const {
  Vec m(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (std::isfinite(lo[i]) && std::isfinite(hi[i])) {
      m[i] = 0.5 * (lo[i] + hi[i]);
    } else if (std::isfinite(lo[i])) {
      m[i] = lo[i];
    } else if (std::isfinite(hi[i])) {
      m[i] = hi[i];
    } else {
      m[i] = 0.0;
    }
  }
  return m;
}

bool BoxSet::contains(const Vec& v, double slack) const {
  if (v.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < lo[i] - slack || v[i] > hi[i] + slack) return false;
  }
  return true;
}

double smooth_min(double x, double y, double c) {
  if (!(c > 0.0)) throw InvalidArgument("smooth_min: smoothing parameter must be positive");
  if (y <= x - c) return y;
  if (y >= x + c) return x;
  const double d = x - y;
  return 0.5 * (x + y) - d * d / (4.0 * c) - 0.25 * c;
}

std::pair<double, double> smooth_min_grad(double x, double y, double c) {
  if (!(c > 0.0)) throw InvalidArgument("smooth_min_grad: smoothing parameter must be positive");
  if (y <= x - c) return {0.0, 1.0};
  if (y >= x + c) return {1.0, 0.0};
  const double s = (x - y) / (2.0 * c);
  return {0.5 - s, 0.5 + s};
}

Vec project_box(const Vec& v, const BoxSet& box) {
  if (v.size() != box.lo.size()) throw InvalidArgument("project_box: dimension mismatch");
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], box.lo[i], box.hi[i]);
  return out;
}

void ProblemModel::validate() const {
  if (horizon < 1) throw InvalidArgument("ProblemModel: horizon must be >= 1");
  if (static_cast<int>(state_dims.size()) != horizon + 1)
    throw InvalidArgument("ProblemModel: state_dims must have T+1 entries");
  if (static_cast<int>(control_dims.size()) != horizon)
    throw InvalidArgument("ProblemModel: control_dims must have T entries");
  if (static_cast<int>(noise_dims.size()) != horizon + 1)
    throw InvalidArgument("ProblemModel: noise_dims must have T+1 entries");
  for (int d : state_dims)
    if (d < 1) throw InvalidArgument("ProblemModel: state dims must be positive");
  for (int d : control_dims)
    if (d < 1) throw InvalidArgument("ProblemModel: control dims must be positive");
  for (int d : noise_dims)
    if (d < 1) throw InvalidArgument("ProblemModel: noise dims must be positive");
  if (!dynamics || !dynamics_dx || !dynamics_du || !stage_cost || !stage_cost_dx ||
      !stage_cost_du || !final_cost || !final_cost_dx)
    throw InvalidArgument("ProblemModel: all callbacks must be set");
  if (static_cast<int>(control_bounds.size()) != horizon)
    throw InvalidArgument("ProblemModel: control_bounds must have T entries");
  for (int t = 0; t < horizon; ++t) {
    if (control_bounds[t].dim() != control_dims[t])
      throw InvalidArgument("ProblemModel: control_bounds dim mismatch at stage " + std::to_string(t));
  }
}

void eval_stage(const ProblemModel& model, int t, const Vec& x, const Vec& u, const Vec& w,
                ProblemModel::StageEval& out) {
  if (model.fused_stage_eval) {
    model.fused_stage_eval(t, x, u, w, out);
    return;
  }
  out.f = model.dynamics(t, x, u, w);
  out.fx = model.dynamics_dx(t, x, u, w);
  out.fu = model.dynamics_du(t, x, u, w);
  out.cost = model.stage_cost(t, x, u, w);
  out.cost_dx = model.stage_cost_dx(t, x, u, w);
  out.cost_du = model.stage_cost_du(t, x, u, w);
}

PointSampler box_point_sampler(const ProblemModel& model, double x_lo, double x_hi,
                               double u_lo, double u_hi, double w_lo, double w_hi,
                               std::uint64_t seed) {
  auto counter = std::make_shared<std::uint64_t>(0);
  return [&model, x_lo, x_hi, u_lo, u_hi, w_lo, w_hi, seed, counter](int t, Vec& x, Vec& u, Vec& w) {
    const std::uint64_t n = (*counter)++;
    x.resize(model.state_dims[t]);
    u.resize(model.control_dims[t]);
    w.resize(model.noise_dims[t + 1]);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = x_lo + (x_hi - x_lo) * keyed_u01(seed, n, 0, static_cast<std::uint64_t>(i));
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u[i] = u_lo + (u_hi - u_lo) * keyed_u01(seed, n, 1, static_cast<std::uint64_t>(i));
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w[i] = w_lo + (w_hi - w_lo) * keyed_u01(seed, n, 2, static_cast<std::uint64_t>(i));
  };
}

namespace {

double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace

DerivativeCheckReport check_derivatives(const ProblemModel& model, const PointSampler& sample,
                                        int points_per_stage, double step) {
  model.validate();
  DerivativeCheckReport report;
  Vec x, u, w;
  for (int t = 0; t < model.horizon; ++t) {
    for (int p = 0; p < points_per_stage; ++p) {
      sample(t, x, u, w);
      ++report.points_checked;

      const Mat fx = model.dynamics_dx(t, x, u, w);
      const Mat fu = model.dynamics_du(t, x, u, w);
      const Vec lx = model.stage_cost_dx(t, x, u, w);
      const Vec lu = model.stage_cost_du(t, x, u, w);

      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        const Vec df = (model.dynamics(t, xp, u, w) - model.dynamics(t, xm, u, w)) / (2 * step);
        for (Eigen::Index r = 0; r < df.size(); ++r)
          report.max_rel_error = std::max(report.max_rel_error, rel_error(fx(r, i), df[r]));
        const double dl =
            (model.stage_cost(t, xp, u, w) - model.stage_cost(t, xm, u, w)) / (2 * step);
        report.max_rel_error = std::max(report.max_rel_error, rel_error(lx[i], dl));
      }
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        Vec up = u, um = u;
        up[i] += step;
        um[i] -= step;
        const Vec df = (model.dynamics(t, x, up, w) - model.dynamics(t, x, um, w)) / (2 * step);
        for (Eigen::Index r = 0; r < df.size(); ++r)
          report.max_rel_error = std::max(report.max_rel_error, rel_error(fu(r, i), df[r]));
        const double dl =
            (model.stage_cost(t, x, up, w) - model.stage_cost(t, x, um, w)) / (2 * step);
        report.max_rel_error = std::max(report.max_rel_error, rel_error(lu[i], dl));
      }

      if (t == model.horizon - 1) {
        const Vec xT = model.dynamics(t, x, u, w);
        const Vec kx = model.final_cost_dx(xT);
        for (Eigen::Index i = 0; i < xT.size(); ++i) {
          Vec xp = xT, xm = xT;
          xp[i] += step;
          xm[i] -= step;
          const double dk = (model.final_cost(xp) - model.final_cost(xm)) / (2 * step);
          report.max_rel_error = std::max(report.max_rel_error, rel_error(kx[i], dk));
        }
      }
    }
  }
  return report;
}

}  // namespace stoctrl
