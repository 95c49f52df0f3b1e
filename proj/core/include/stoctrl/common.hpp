#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace stoctrl {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCsvSchema = "stoctrl-schema v1";

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class of all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad arguments, bad configuration, schema violations.
struct InvalidArgument : Error {
  using Error::Error;
};

/// Numerical breakdown: divergence, non-finite values, unbounded problems.
struct NumericalError : Error {
  using Error::Error;
};

/// File system and parsing failures.
struct IoError : Error {
  using Error::Error;
};

/// One weighted (state, control) pair, as plotted in feedback scatter views.
struct ScatterPoint {
  Vec state;
  Vec control;
  double weight = 1.0;
};

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec scalar_vec(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

}  // namespace stoctrl
