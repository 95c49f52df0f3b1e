#include "stoctrl/interp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace stoctrl {

std::string to_string(InterpMethod m) {
  switch (m) {
    case InterpMethod::linear1d: return "linear-1d";
    case InterpMethod::nearest: return "nearest-neighbor";
    case InterpMethod::kernel: return "kernel";
  }
  return "?";
}

InterpMethod interp_method_from_string(const std::string& name) {
  if (name == "linear-1d" || name == "linear") return InterpMethod::linear1d;
  if (name == "nearest-neighbor" || name == "nearest") return InterpMethod::nearest;
  if (name == "kernel") return InterpMethod::kernel;
  throw InvalidArgument("unknown interpolation method: " + name);
}

namespace {

bool lex_less(const Mat& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m(a, c) < m(b, c)) return true;
    if (m(a, c) > m(b, c)) return false;
  }
  return false;
}

/// Sorts rows lexicographically and averages the values of exactly equal
/// sites. Returns (sites, values) with unique rows.
std::pair<Mat, Mat> sort_and_collapse(const Mat& sites, const Mat& values) {
  std::vector<Eigen::Index> order(static_cast<size_t>(sites.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lex_less(sites, a, b); });

  std::vector<Eigen::Index> group_start;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || lex_less(sites, order[i - 1], order[i])) group_start.push_back(static_cast<Eigen::Index>(i));
  }

  Mat s(static_cast<Eigen::Index>(group_start.size()), sites.cols());
  Mat v(static_cast<Eigen::Index>(group_start.size()), values.cols());
  for (size_t g = 0; g < group_start.size(); ++g) {
    const size_t begin = static_cast<size_t>(group_start[g]);
    const size_t end = g + 1 < group_start.size() ? static_cast<size_t>(group_start[g + 1]) : order.size();
    s.row(static_cast<Eigen::Index>(g)) = sites.row(order[begin]);
    Vec acc = Vec::Zero(values.cols());
    for (size_t i = begin; i < end; ++i) acc += values.row(order[i]).transpose();
    v.row(static_cast<Eigen::Index>(g)) = acc.transpose() / static_cast<double>(end - begin);
  }
  return {std::move(s), std::move(v)};
}

double silverman_bandwidth(const Mat& sites) {
  const double n = static_cast<double>(sites.rows());
  double var = 0.0;
  for (Eigen::Index c = 0; c < sites.cols(); ++c) {
    const double mean = sites.col(c).mean();
    var += (sites.col(c).array() - mean).square().sum() / std::max(1.0, n - 1.0);
  }
  const double sigma = std::sqrt(var / static_cast<double>(sites.cols()));
  return 1.06 * sigma * std::pow(n, -0.2);
}

}  // namespace

GridFunction::GridFunction(Mat sites, Mat values, InterpConfig config) : config_(config) {
  if (sites.rows() < 1) throw InvalidArgument("GridFunction: needs at least one site");
  if (sites.rows() != values.rows())
    throw InvalidArgument("GridFunction: sites/values count mismatch");
  if (config.method == InterpMethod::linear1d && sites.cols() != 1)
    throw InvalidArgument("GridFunction: linear-1d requires scalar sites");

  if (config.method == InterpMethod::kernel) {
    sites_ = std::move(sites);
    values_ = std::move(values);
  } else {
    std::tie(sites_, values_) = sort_and_collapse(sites, values);
  }

  box_lo_ = sites_.colwise().minCoeff().transpose();
  box_hi_ = sites_.colwise().maxCoeff().transpose();
  degenerate_ = (box_lo_ - box_hi_).isZero(0.0);

  if (config.method == InterpMethod::kernel) {
    bandwidth_ = config.bandwidth > 0.0 ? config.bandwidth : silverman_bandwidth(sites_);
    if (!(bandwidth_ > 0.0)) bandwidth_ = 1.0;  // identical sites: any width gives the mean
  }
}

Vec GridFunction::eval(const Vec& x) const {
  if (size() == 0) throw InvalidArgument("GridFunction: eval on empty grid");
  if (x.size() != sites_.cols()) throw InvalidArgument("GridFunction: query dimension mismatch");
  if (!x.allFinite()) throw InvalidArgument("GridFunction: non-finite query");
  if (sites_.cols() == 1 && values_.cols() == 1) return scalar_vec(eval_scalar(x[0]));
  switch (config_.method) {
    case InterpMethod::linear1d: return eval_linear(x[0]);
    case InterpMethod::nearest: return eval_nearest(x);
    case InterpMethod::kernel: return eval_kernel(x);
  }
  throw InvalidArgument("GridFunction: bad method");
}

double GridFunction::eval1(double x) const {
  if (size() == 0) throw InvalidArgument("GridFunction: eval on empty grid");
  if (sites_.cols() != 1 || values_.cols() != 1)
    throw InvalidArgument("GridFunction: eval1 requires scalar sites and values");
  if (!std::isfinite(x)) throw InvalidArgument("GridFunction: non-finite query");
  return eval_scalar(x);
}

double GridFunction::eval_scalar(double x) const {
  const Eigen::Index n = sites_.rows();
  switch (config_.method) {
    case InterpMethod::linear1d: {
      if (x <= sites_(0, 0)) return values_(0, 0);
      if (x >= sites_(n - 1, 0)) return values_(n - 1, 0);
      Eigen::Index lo = 0, hi = n - 1;
      while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (sites_(mid, 0) <= x) lo = mid; else hi = mid;
      }
      const double x0 = sites_(lo, 0), x1 = sites_(hi, 0);
      const double a = (x - x0) / (x1 - x0);
      return (1.0 - a) * values_(lo, 0) + a * values_(hi, 0);
    }
    case InterpMethod::nearest: {
      Eigen::Index best = 0;
      double best_d = std::abs(sites_(0, 0) - x);
      for (Eigen::Index i = 1; i < n; ++i) {
        const double d = std::abs(sites_(i, 0) - x);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      return values_(best, 0);
    }
    case InterpMethod::kernel: {
      const double q = std::clamp(x, box_lo_[0], box_hi_[0]);
      const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
      static thread_local Eigen::ArrayXd w;  // scratch, reused across calls
      w = -((sites_.col(0).array() - q).square() * inv);
      const double top = w.maxCoeff();
      w = (w - top).exp();
      return (w * values_.col(0).array()).sum() / w.sum();
    }
  }
  throw InvalidArgument("GridFunction: bad method");
}

Vec GridFunction::eval_linear(double x) const {
  const Eigen::Index n = sites_.rows();
  if (x <= sites_(0, 0)) return values_.row(0).transpose();
  if (x >= sites_(n - 1, 0)) return values_.row(n - 1).transpose();
  // first site > x; sites are sorted and unique
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (sites_(mid, 0) <= x) lo = mid; else hi = mid;
  }
  const double x0 = sites_(lo, 0), x1 = sites_(hi, 0);
  const double a = (x - x0) / (x1 - x0);
  return ((1.0 - a) * values_.row(lo) + a * values_.row(hi)).transpose();
}

Vec GridFunction::eval_nearest(const Vec& x) const {
  // Sites are in sorted order, so the first strict minimum implements the
  // lower-site tie rule.
  Eigen::Index best = 0;
  double best_d = (sites_.row(0).transpose() - x).squaredNorm();
  for (Eigen::Index i = 1; i < sites_.rows(); ++i) {
    const double d = (sites_.row(i).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return values_.row(best).transpose();
}

Vec GridFunction::eval_kernel(const Vec& x) const {
  Vec q(x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) q[c] = std::clamp(x[c], box_lo_[c], box_hi_[c]);

  Eigen::ArrayXd sq = (sites_.rowwise() - q.transpose()).rowwise().squaredNorm().array();
  const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  sq = -(sq * inv);
  const double top = sq.maxCoeff();
  const Eigen::ArrayXd w = (sq - top).exp();
  const double total = w.sum();
  return (values_.transpose() * w.matrix()) / total;
}

GridFunction trace(const std::function<Vec(const Vec&)>& fn, const Mat& sites,
                   InterpConfig config) {
  if (sites.rows() < 1) throw InvalidArgument("trace: needs at least one site");
  const Vec first = fn(sites.row(0).transpose());
  Mat values(sites.rows(), first.size());
  values.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < sites.rows(); ++i)
    values.row(i) = fn(sites.row(i).transpose()).transpose();
  return GridFunction(sites, std::move(values), config);
}

GridFunction trace1(const std::function<double(double)>& fn, const Vec& sites,
                    InterpConfig config) {
  Mat s(sites.size(), 1);
  s.col(0) = sites;
  return trace([&fn](const Vec& x) { return scalar_vec(fn(x[0])); }, s, config);
}

}  // namespace stoctrl
