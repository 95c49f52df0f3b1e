#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stoctrl/common.hpp"

namespace stoctrl {

enum class InterpMethod { linear1d, nearest, kernel };

std::string to_string(InterpMethod m);
InterpMethod interp_method_from_string(const std::string& name);

struct InterpConfig {
  InterpMethod method = InterpMethod::linear1d;
  /// Gaussian bandwidth for the kernel method; values <= 0 select the
  /// Silverman-style default 1.06 * sigma * n^(-1/5) at construction.
  double bandwidth = 0.0;
};

/// Discrete representation of a function as (sites, values) particle grids,
/// together with the operator that reconstructs a callable from them.
///
/// linear-1d: piecewise linear through sorted scalar sites, clamped beyond
///   the extremes. nearest: value at the closest site, midpoint ties going
///   to the lower site in sort order. kernel: Gaussian-weighted mean of all
///   values (Nadaraya-Watson), queries clamped to the site bounding box.
///
/// Duplicate sites are collapsed by value averaging for the interpolating
/// methods; the kernel weights average them naturally.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Mat sites, Mat values, InterpConfig config);

  Vec eval(const Vec& x) const;
  double eval1(double x) const;  // scalar site/value convenience

  /// Allocation-free scalar path; requires input_dim == output_dim == 1.
  /// eval/eval1 route through this for scalar grids, so all entry points
  /// share one arithmetic path.
  double eval_scalar(double x) const;

  int size() const { return static_cast<int>(sites_.rows()); }
  int input_dim() const { return static_cast<int>(sites_.cols()); }
  int output_dim() const { return static_cast<int>(values_.cols()); }
  const Mat& sites() const { return sites_; }
  const Mat& values() const { return values_; }
  const InterpConfig& config() const { return config_; }
  /// All sites coincide, so every query returns the mean value.
  bool degenerate() const { return degenerate_; }
  double bandwidth() const { return bandwidth_; }

 private:
  Vec eval_linear(double x) const;
  Vec eval_nearest(const Vec& x) const;
  Vec eval_kernel(const Vec& x) const;

  Mat sites_;    // row per particle (collapsed for interpolating methods)
  Mat values_;
  InterpConfig config_;
  double bandwidth_ = 0.0;
  Vec box_lo_, box_hi_;  // site bounding box, used by the clamp rule
  bool degenerate_ = false;
};

/// Evaluates fn on the given sites and packages the resulting grids.
GridFunction trace(const std::function<Vec(const Vec&)>& fn, const Mat& sites,
                   InterpConfig config);
GridFunction trace1(const std::function<double(double)>& fn, const Vec& sites,
                    InterpConfig config);

/// A per-stage feedback law x -> u synthesized from particle grids.
struct Policy {
  std::vector<GridFunction> stages;

  int horizon() const { return static_cast<int>(stages.size()); }
  Vec eval(int stage, const Vec& x) const { return stages[stage].eval(x); }
};

}  // namespace stoctrl
