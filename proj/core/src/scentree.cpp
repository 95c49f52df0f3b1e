#include "stoctrl/scentree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stoctrl {

BranchingSchedule BranchingSchedule::doubling(int horizon) {
  BranchingSchedule s;
  s.factors.assign(static_cast<size_t>(horizon), 2);
  return s;
}

void BranchingSchedule::validate(int horizon) const {
  if (static_cast<int>(factors.size()) != horizon)
    throw InvalidArgument("BranchingSchedule: need factors b_0..b_{T-1}");
  for (int b : factors)
    if (b < 1) throw InvalidArgument("BranchingSchedule: factors must be >= 1");
}

int BranchingSchedule::saturation_stage(int count) const {
  long long cum = 1;
  for (size_t t = 0; t < factors.size(); ++t) {
    cum *= factors[t];
    if (cum >= count) return static_cast<int>(t);
    cum = std::min<long long>(cum, count);  // avoid overflow, cap is what matters
  }
  return static_cast<int>(factors.size()) + 1;
}

void ScenarioTree::validate() const {
  if (nodes.empty()) throw InvalidArgument("ScenarioTree: empty tree");
  double root_mass = 0.0;
  for (int id : stage_ids[0]) root_mass += nodes[static_cast<size_t>(id)].prob;
  if (std::abs(root_mass - 1.0) > 1e-9)
    throw InvalidArgument("ScenarioTree: root probabilities must sum to 1");
  for (const TreeNode& n : nodes) {
    if (n.stage < horizon && n.children.empty())
      throw InvalidArgument("ScenarioTree: interior node without children");
    if (!n.children.empty()) {
      double mass = 0.0;
      for (int c : n.children) mass += nodes[static_cast<size_t>(c)].prob;
      if (std::abs(mass - n.prob) > 1e-9)
        throw InvalidArgument("ScenarioTree: children probabilities must sum to the parent's");
    }
  }
}

namespace {

/// Quantization cell: scenario members plus their centroid in the stage
/// noise space.
struct Cell {
  std::vector<int> members;
  Vec centroid;
};

Vec centroid_of(const std::vector<int>& members, const ScenarioSet& scenarios, int stage) {
  Vec c = Vec::Zero(scenarios.at(members[0], stage).size());
  for (int k : members) c += scenarios.at(k, stage);
  return c / static_cast<double>(members.size());
}

bool lex_less_vec(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

/// Members sorted by (stage noise value, scenario index); the deterministic
/// order used for seeding and index splits.
std::vector<int> sorted_members(std::vector<int> members, const ScenarioSet& scenarios,
                                int stage) {
  std::sort(members.begin(), members.end(), [&](int a, int b) {
    const Vec& va = scenarios.at(a, stage);
    const Vec& vb = scenarios.at(b, stage);
    if (lex_less_vec(va, vb)) return true;
    if (lex_less_vec(vb, va)) return false;
    return a < b;
  });
  return members;
}

/// Lloyd clustering of the members on their stage noise values into k
/// nonempty cells. Quantile seeding on the sorted members, nearest-centroid
/// assignment with lower-index tie break, empty cells refilled from the
/// largest cell; all steps deterministic.
std::vector<Cell> lloyd_cluster(const std::vector<int>& members_in, const ScenarioSet& scenarios,
                                int stage, int k) {
  const std::vector<int> members = sorted_members(members_in, scenarios, stage);
  const int n = static_cast<int>(members.size());
  k = std::min(k, n);

  std::vector<Cell> cells(static_cast<size_t>(k));
  std::vector<int> assign(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    assign[static_cast<size_t>(i)] = std::min(k - 1, i * k / n);

  auto rebuild = [&]() {
    for (auto& c : cells) c.members.clear();
    for (int i = 0; i < n; ++i)
      cells[static_cast<size_t>(assign[static_cast<size_t>(i)])].members.push_back(
          members[static_cast<size_t>(i)]);
    // Refill empties by stealing the farthest member of the largest cell.
    for (size_t e = 0; e < cells.size(); ++e) {
      while (cells[e].members.empty()) {
        size_t largest = 0;
        for (size_t c = 1; c < cells.size(); ++c)
          if (cells[c].members.size() > cells[largest].members.size()) largest = c;
        if (cells[largest].members.size() < 2)
          throw NumericalError("lloyd_cluster: cannot refill empty cell");
        Vec ctr = centroid_of(cells[largest].members, scenarios, stage);
        size_t far_idx = 0;
        double far_d = -1.0;
        for (size_t m = 0; m < cells[largest].members.size(); ++m) {
          const double d = (scenarios.at(cells[largest].members[m], stage) - ctr).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far_idx = m;
          }
        }
        cells[e].members.push_back(cells[largest].members[far_idx]);
        cells[largest].members.erase(cells[largest].members.begin() +
                                     static_cast<std::ptrdiff_t>(far_idx));
      }
    }
    for (auto& c : cells) c.centroid = centroid_of(c.members, scenarios, stage);
  };
  rebuild();

  for (int it = 0; it < 50; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const Vec& v = scenarios.at(members[static_cast<size_t>(i)], stage);
      int best = 0;
      double best_d = (v - cells[0].centroid).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (v - cells[static_cast<size_t>(c)].centroid).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<size_t>(i)] != best) {
        assign[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<Vec> old_centroids;
    old_centroids.reserve(cells.size());
    for (const auto& c : cells) old_centroids.push_back(c.centroid);
    rebuild();
    double move = 0.0;
    for (size_t c = 0; c < cells.size(); ++c)
      move = std::max(move, (cells[c].centroid - old_centroids[c]).norm());
    if (!changed || move < 1e-9) break;
  }

  // Deterministic cell order: by centroid, ties by smallest member.
  for (auto& c : cells) c.members = sorted_members(std::move(c.members), scenarios, stage);
  std::sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) {
    if (lex_less_vec(a.centroid, b.centroid)) return true;
    if (lex_less_vec(b.centroid, a.centroid)) return false;
    return a.members[0] < b.members[0];
  });
  return cells;
}

/// Splits the cell into two nonempty cells; Lloyd when the values differ,
/// an index split when they are all identical.
std::pair<Cell, Cell> split_cell(const Cell& cell, const ScenarioSet& scenarios, int stage) {
  bool identical = true;
  for (size_t m = 1; m < cell.members.size() && identical; ++m)
    identical = (scenarios.at(cell.members[m], stage) - scenarios.at(cell.members[0], stage))
                    .isZero(0.0);
  if (!identical) {
    auto cells = lloyd_cluster(cell.members, scenarios, stage, 2);
    if (cells.size() == 2) return {std::move(cells[0]), std::move(cells[1])};
  }
  const std::vector<int> sorted = sorted_members(cell.members, scenarios, stage);
  Cell a, b;
  const size_t half = sorted.size() / 2;
  a.members.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(half));
  b.members.assign(sorted.begin() + static_cast<std::ptrdiff_t>(half), sorted.end());
  a.centroid = centroid_of(a.members, scenarios, stage);
  b.centroid = centroid_of(b.members, scenarios, stage);
  return {std::move(a), std::move(b)};
}

}  // namespace

ScenarioTree build_tree(const ScenarioSet& scenarios, const BranchingSchedule& schedule) {
  scenarios.validate();
  schedule.validate(scenarios.horizon);
  const int N = scenarios.count;
  const int T = scenarios.horizon;
  const int saturation = schedule.saturation_stage(N);

  ScenarioTree tree;
  tree.horizon = T;
  tree.stage_ids.resize(static_cast<size_t>(T) + 1);

  auto add_node = [&tree](int stage, int parent, std::vector<int> members, Vec noise,
                          double prob) {
    TreeNode n;
    n.id = static_cast<int>(tree.nodes.size());
    n.stage = stage;
    n.parent = parent;
    n.scenarios = std::move(members);
    n.noise = std::move(noise);
    n.prob = prob;
    if (parent >= 0) tree.nodes[static_cast<size_t>(parent)].children.push_back(n.id);
    tree.stage_ids[static_cast<size_t>(stage)].push_back(n.id);
    tree.nodes.push_back(std::move(n));
    return tree.nodes.back().id;
  };

  // Node count targeted at each stage: capped cumulative factor product.
  auto stage_target = [&](int stage) {
    long long cum = 1;
    for (int s = 0; s <= stage && s < static_cast<int>(schedule.factors.size()); ++s) {
      cum *= schedule.factors[static_cast<size_t>(s)];
      cum = std::min<long long>(cum, N);
    }
    return static_cast<int>(cum);
  };

  // Grows the children of one stage from parent cells, enforcing the exact
  // stage target by splitting the globally largest splittable cell.
  struct PendingCell {
    int parent;  // node id, -1 for roots
    Cell cell;
  };
  auto emit_stage = [&](int stage, std::vector<PendingCell> cells, bool raw_noise) {
    const int target = stage >= saturation ? std::min(N, stage_target(stage))
                                           : stage_target(stage);
    while (static_cast<int>(cells.size()) < target) {
      int largest = -1;
      size_t largest_size = 1;
      for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].cell.members.size() > largest_size) {
          largest_size = cells[i].cell.members.size();
          largest = static_cast<int>(i);
        }
      }
      if (largest < 0)
        throw NumericalError("build_tree: cannot reach the stage node target");
      auto [a, b] = split_cell(cells[static_cast<size_t>(largest)].cell, scenarios, stage);
      const int parent = cells[static_cast<size_t>(largest)].parent;
      cells.erase(cells.begin() + largest);
      cells.push_back({parent, std::move(a)});
      cells.push_back({parent, std::move(b)});
    }
    // Stable order: by parent id, then cell centroid, then first member.
    std::sort(cells.begin(), cells.end(), [&](const PendingCell& a, const PendingCell& b) {
      if (a.parent != b.parent) return a.parent < b.parent;
      if (lex_less_vec(a.cell.centroid, b.cell.centroid)) return true;
      if (lex_less_vec(b.cell.centroid, a.cell.centroid)) return false;
      return a.cell.members[0] < b.cell.members[0];
    });
    for (auto& pc : cells) {
      const double prob = static_cast<double>(pc.cell.members.size()) / static_cast<double>(N);
      Vec noise = raw_noise ? scenarios.at(pc.cell.members[0], stage) : pc.cell.centroid;
      add_node(stage, pc.parent, std::move(pc.cell.members), std::move(noise), prob);
    }
  };

  // Stage 0: cluster everything on the initial-state noise.
  {
    std::vector<int> all(static_cast<size_t>(N));
    std::iota(all.begin(), all.end(), 0);
    std::vector<PendingCell> cells;
    if (0 >= saturation) {
      for (int k : sorted_members(all, scenarios, 0)) {
        Cell c;
        c.members = {k};
        c.centroid = scenarios.at(k, 0);
        cells.push_back({-1, std::move(c)});
      }
    } else {
      for (auto& c : lloyd_cluster(all, scenarios, 0, schedule.factors[0]))
        cells.push_back({-1, std::move(c)});
    }
    emit_stage(0, std::move(cells), /*raw_noise=*/0 >= saturation);
  }

  for (int stage = 1; stage <= T; ++stage) {
    const int factor = stage <= T - 1 ? schedule.factors[static_cast<size_t>(stage)] : 1;
    const bool saturated = stage >= saturation;
    std::vector<PendingCell> cells;
    for (int parent_id : tree.stage_ids[static_cast<size_t>(stage - 1)]) {
      const TreeNode& parent = tree.nodes[static_cast<size_t>(parent_id)];
      if (saturated) {
        for (int k : sorted_members(parent.scenarios, scenarios, stage)) {
          Cell c;
          c.members = {k};
          c.centroid = scenarios.at(k, stage);
          cells.push_back({parent_id, std::move(c)});
        }
      } else {
        for (auto& c : lloyd_cluster(parent.scenarios, scenarios, stage, factor))
          cells.push_back({parent_id, std::move(c)});
      }
    }
    emit_stage(stage, std::move(cells), saturated);
  }

  tree.validate();
  return tree;
}

namespace {

void propagate_tree_states(const ProblemModel& model, ScenarioTree& tree) {
  for (int id : tree.stage_ids[0]) {
    TreeNode& n = tree.nodes[static_cast<size_t>(id)];
    n.state = n.noise;  // stage-0 noise carries the initial state
  }
  for (int stage = 0; stage < tree.horizon; ++stage) {
    for (int id : tree.stage_ids[static_cast<size_t>(stage)]) {
      TreeNode& n = tree.nodes[static_cast<size_t>(id)];
      for (int cid : n.children) {
        TreeNode& c = tree.nodes[static_cast<size_t>(cid)];
        c.state = model.dynamics(stage, n.state, n.control, c.noise);
        if (!c.state.allFinite())
          throw NumericalError("solve_tree: non-finite state at node " + std::to_string(cid));
      }
    }
  }
}

/// Conditional-probability aggregated adjoint over the tree; fills
/// per-node co-states (lambda) and control gradients.
void tree_adjoint(const ProblemModel& model, const ScenarioTree& tree, std::vector<Vec>& lambda,
                  std::vector<Vec>& grad) {
  const int T = tree.horizon;
  for (int id : tree.stage_ids[static_cast<size_t>(T)])
    lambda[static_cast<size_t>(id)] =
        model.final_cost_dx(tree.nodes[static_cast<size_t>(id)].state);

  ProblemModel::StageEval ev;
  for (int stage = T - 1; stage >= 0; --stage) {
    for (int id : tree.stage_ids[static_cast<size_t>(stage)]) {
      const TreeNode& n = tree.nodes[static_cast<size_t>(id)];
      Vec lam = Vec::Zero(model.state_dims[static_cast<size_t>(stage)]);
      Vec g = Vec::Zero(model.control_dims[static_cast<size_t>(stage)]);
      for (int cid : n.children) {
        const TreeNode& c = tree.nodes[static_cast<size_t>(cid)];
        eval_stage(model, stage, n.state, n.control, c.noise, ev);
        const double cond = c.prob / n.prob;
        lam += cond * ev.cost_dx;
        lam.noalias() += cond * (ev.fx.transpose() * lambda[static_cast<size_t>(cid)]);
        g += cond * ev.cost_du;
        g.noalias() += cond * (ev.fu.transpose() * lambda[static_cast<size_t>(cid)]);
      }
      lambda[static_cast<size_t>(id)] = lam;
      grad[static_cast<size_t>(id)] = g;
    }
  }
}

}  // namespace

double tree_cost(const ProblemModel& model, const ScenarioTree& tree) {
  double acc = 0.0;
  for (int stage = 0; stage < tree.horizon; ++stage) {
    for (int id : tree.stage_ids[static_cast<size_t>(stage)]) {
      const TreeNode& n = tree.nodes[static_cast<size_t>(id)];
      for (int cid : n.children) {
        const TreeNode& c = tree.nodes[static_cast<size_t>(cid)];
        acc += c.prob * model.stage_cost(stage, n.state, n.control, c.noise);
      }
    }
  }
  for (int id : tree.stage_ids[static_cast<size_t>(tree.horizon)])
    acc += tree.nodes[static_cast<size_t>(id)].prob *
           model.final_cost(tree.nodes[static_cast<size_t>(id)].state);
  return acc;
}

ScenarioTree solve_tree(const ProblemModel& model, const ScenarioTree& tree_in,
                        const TreeOptSpec& opt) {
  model.validate();
  tree_in.validate();
  if (tree_in.horizon != model.horizon)
    throw InvalidArgument("solve_tree: tree horizon does not match the model");
  if (model.state_dims[0] != model.noise_dims[0])
    throw InvalidArgument("solve_tree: stage-0 noise must carry the initial state");
  if (!(opt.step_size > 0.0)) throw InvalidArgument("solve_tree: step size must be positive");

  ScenarioTree tree = tree_in;
  const int T = tree.horizon;
  for (TreeNode& n : tree.nodes)
    if (n.stage < T) n.control = model.control_bounds[static_cast<size_t>(n.stage)].midpoint();

  propagate_tree_states(model, tree);
  double cost = tree_cost(model, tree);
  double rho = opt.step_size;

  std::vector<Vec> lambda(tree.nodes.size()), grad(tree.nodes.size());
  int increase_streak = 0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    tree_adjoint(model, tree, lambda, grad);

    // Fixed-point residual of the projected-gradient map with unit step.
    double residual = 0.0;
    for (const TreeNode& n : tree.nodes) {
      if (n.stage >= T) continue;
      const Vec mapped = project_box(n.control - grad[static_cast<size_t>(n.id)],
                                     model.control_bounds[static_cast<size_t>(n.stage)]);
      residual += n.prob * (n.control - mapped).squaredNorm();
    }
    residual = std::sqrt(residual);
    if (residual <= opt.residual_tol) break;

    std::vector<Vec> saved;
    saved.reserve(tree.nodes.size());
    for (const TreeNode& n : tree.nodes) saved.push_back(n.control);

    double cand_cost = 0.0;
    int halvings = 0;
    for (;;) {
      for (TreeNode& n : tree.nodes)
        if (n.stage < T)
          n.control = project_box(saved[static_cast<size_t>(n.id)] -
                                      rho * grad[static_cast<size_t>(n.id)],
                                  model.control_bounds[static_cast<size_t>(n.stage)]);
      propagate_tree_states(model, tree);
      cand_cost = tree_cost(model, tree);
      if (!opt.halve_on_increase || cand_cost <= cost || halvings >= opt.max_halvings) break;
      rho *= 0.5;
      ++halvings;
    }

    if (cand_cost > cost) {
      if (++increase_streak >= opt.divergence_patience)
        throw NumericalError("solve_tree: cost grew for " + std::to_string(increase_streak) +
                             " consecutive iterations (iteration " + std::to_string(iter) + ")");
    } else {
      increase_streak = 0;
    }
    cost = cand_cost;
  }
  return tree;
}

std::vector<ScatterPoint> node_scatter(const ScenarioTree& tree, int stage) {
  if (stage < 0 || stage >= tree.horizon)
    throw InvalidArgument("node_scatter: stage must be in [0, T-1]");
  std::vector<ScatterPoint> points;
  for (int id : tree.stage_ids[static_cast<size_t>(stage)]) {
    const TreeNode& n = tree.nodes[static_cast<size_t>(id)];
    if (n.state.size() == 0 || n.control.size() == 0)
      throw InvalidArgument("node_scatter: tree is not solved");
    points.push_back({n.state, n.control, n.prob});
  }
  return points;
}

}  // namespace stoctrl
