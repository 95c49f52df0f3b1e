#pragma once

#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/model.hpp"

namespace stoctrl {

/// Finite stand-in for a probability space: m atoms with positive
/// probabilities summing to one.
struct FiniteProbabilitySpace {
  Vec probs;

  explicit FiniteProbabilitySpace(Vec p);
  int atoms() const { return static_cast<int>(probs.size()); }
};

/// Information structure as a partition of the atoms into cells; cell ids
/// are dense in 0..cells-1 and every cell is nonempty.
struct Partition {
  std::vector<int> cell_of_atom;
  int cells = 0;

  Partition(std::vector<int> assignment, int cell_count);
  static Partition singletons(int atoms);
  static Partition trivial(int atoms);
  std::vector<std::vector<int>> members() const;
};

/// True when every cell of `fine` lies inside a single cell of `coarse`.
bool is_refinement(const Partition& fine, const Partition& coarse);

/// Vector-valued simple random variable: one value row per atom.
struct SimpleRandomVariable {
  Mat values;  // atoms x dim

  int atoms() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

/// Conditional expectation with respect to the partition: on each cell the
/// probability-weighted mean, i.e. the p-weighted orthogonal projection
/// onto cell-constant vectors.
SimpleRandomVariable cond_expectation(const SimpleRandomVariable& v,
                                      const FiniteProbabilitySpace& space,
                                      const Partition& part);

/// Projection onto {cell-constant vectors lying in the per-cell boxes};
/// equals clamp(cond_expectation(v)) cell by cell.
SimpleRandomVariable project_measurable_box(const SimpleRandomVariable& v,
                                            const FiniteProbabilitySpace& space,
                                            const Partition& part,
                                            const std::vector<BoxSet>& box_per_cell);

/// Residual of the projected-gradient fixed-point optimality condition with
/// unit step: the p-weighted norm of
///   v - proj(v - cond_expectation(grad)).
/// Zero exactly at constrained stationary points.
double kkt_residual(const SimpleRandomVariable& v, const SimpleRandomVariable& grad,
                    const FiniteProbabilitySpace& space, const Partition& part,
                    const std::vector<BoxSet>& box_per_cell);

/// p-weighted inner product and norm of the L2(p) geometry the operators
/// above live in.
double weighted_dot(const SimpleRandomVariable& a, const SimpleRandomVariable& b,
                    const FiniteProbabilitySpace& space);
double weighted_norm(const SimpleRandomVariable& a, const FiniteProbabilitySpace& space);

}  // namespace stoctrl
