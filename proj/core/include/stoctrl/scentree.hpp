#pragma once

#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/model.hpp"
#include "stoctrl/sampling.hpp"

namespace stoctrl {

/// Per-stage branching factors b_0..b_{T-1}. The node count at stage t is
/// the cumulative product capped at the scenario count N; from the first
/// stage where the product reaches N every node carries a single scenario
/// and its subtree is that scenario's tail.
struct BranchingSchedule {
  std::vector<int> factors;

  static BranchingSchedule doubling(int horizon);
  void validate(int horizon) const;
  /// First stage whose cumulative factor product reaches count, or
  /// horizon + 1 when it never does.
  int saturation_stage(int count) const;
};

struct TreeNode {
  int id = -1;
  int stage = 0;
  int parent = -1;                 // -1 at roots
  std::vector<int> children;
  double prob = 0.0;
  std::vector<int> scenarios;      // member scenario indices (quantization cell)
  Vec noise;                       // cell centroid (raw value once deterministic)
  Vec state;                       // filled by solve_tree
  Vec control;                     // filled by solve_tree, stages < T only
};

struct ScenarioTree {
  int horizon = 0;
  std::vector<TreeNode> nodes;              // id-indexed
  std::vector<std::vector<int>> stage_ids;  // node ids per stage 0..T

  int count_at(int stage) const { return static_cast<int>(stage_ids[static_cast<size_t>(stage)].size()); }
  void validate() const;
};

/// Stage-recursive quantization of the scenarios: the scenarios of each
/// node are clustered on their next-stage noise values (Lloyd iterations
/// with deterministic quantile seeding); child probabilities are scenario
/// fractions, child noises the cell centroids. Stage node counts match the
/// schedule's capped cumulative products exactly.
ScenarioTree build_tree(const ScenarioSet& scenarios, const BranchingSchedule& schedule);

struct TreeOptSpec {
  double step_size = 0.1;
  bool halve_on_increase = true;
  int max_halvings = 20;
  int max_iterations = 20000;
  double residual_tol = 1e-6;  // on the probability-weighted gradient-map residual
  int divergence_patience = 10;
};

/// Probability-weighted tree objective: stage costs on every edge plus the
/// final cost at the leaves, with the dynamics holding along every edge.
double tree_cost(const ProblemModel& model, const ScenarioTree& tree);

/// Solves the tree-structured program by projected gradient with the
/// tree adjoint: a node's co-state aggregates its children with conditional
/// probabilities, the tree analogue of the adapted co-state recursion.
/// Returns the tree with optimal states and controls filled in.
ScenarioTree solve_tree(const ProblemModel& model, const ScenarioTree& tree,
                        const TreeOptSpec& opt = {});

/// (state, control, probability) of every stage-t node, for feedback
/// scatter plots and variance analysis. Requires stage < T.
std::vector<ScatterPoint> node_scatter(const ScenarioTree& tree, int stage);

}  // namespace stoctrl
