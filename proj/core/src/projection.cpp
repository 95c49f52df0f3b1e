#include "stoctrl/projection.hpp"

#include <algorithm>
#include <cmath>

namespace stoctrl {

FiniteProbabilitySpace::FiniteProbabilitySpace(Vec p) : probs(std::move(p)) {
  if (probs.size() == 0) throw InvalidArgument("FiniteProbabilitySpace: no atoms");
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (!(probs[i] > 0.0)) throw InvalidArgument("FiniteProbabilitySpace: probabilities must be positive");
  if (std::abs(probs.sum() - 1.0) > 1e-12)
    throw InvalidArgument("FiniteProbabilitySpace: probabilities must sum to 1");
}

Partition::Partition(std::vector<int> assignment, int cell_count)
    : cell_of_atom(std::move(assignment)), cells(cell_count) {
  if (cell_of_atom.empty()) throw InvalidArgument("Partition: no atoms");
  if (cells < 1) throw InvalidArgument("Partition: no cells");
  std::vector<int> counts(static_cast<size_t>(cells), 0);
  for (int c : cell_of_atom) {
    if (c < 0 || c >= cells) throw InvalidArgument("Partition: cell id out of range");
    ++counts[static_cast<size_t>(c)];
  }
  for (int n : counts)
    if (n == 0) throw InvalidArgument("Partition: empty cell");
}

Partition Partition::singletons(int atoms) {
  std::vector<int> a(static_cast<size_t>(atoms));
  for (int i = 0; i < atoms; ++i) a[static_cast<size_t>(i)] = i;
  return Partition(std::move(a), atoms);
}

Partition Partition::trivial(int atoms) {
  return Partition(std::vector<int>(static_cast<size_t>(atoms), 0), 1);
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> m(static_cast<size_t>(cells));
  for (size_t i = 0; i < cell_of_atom.size(); ++i)
    m[static_cast<size_t>(cell_of_atom[i])].push_back(static_cast<int>(i));
  return m;
}

bool is_refinement(const Partition& fine, const Partition& coarse) {
  if (fine.cell_of_atom.size() != coarse.cell_of_atom.size()) return false;
  std::vector<int> image(static_cast<size_t>(fine.cells), -1);
  for (size_t i = 0; i < fine.cell_of_atom.size(); ++i) {
    int& img = image[static_cast<size_t>(fine.cell_of_atom[i])];
    if (img == -1) img = coarse.cell_of_atom[i];
    else if (img != coarse.cell_of_atom[i]) return false;
  }
  return true;
}

namespace {

void check_compatible(const SimpleRandomVariable& v, const FiniteProbabilitySpace& space,
                      const Partition& part) {
  if (v.atoms() != space.atoms() || v.atoms() != static_cast<int>(part.cell_of_atom.size()))
    throw InvalidArgument("projection: incompatible atom counts");
}

}  // namespace

SimpleRandomVariable cond_expectation(const SimpleRandomVariable& v,
                                      const FiniteProbabilitySpace& space,
                                      const Partition& part) {
  check_compatible(v, space, part);
  Mat cell_sum = Mat::Zero(part.cells, v.dim());
  Vec cell_mass = Vec::Zero(part.cells);
  for (int i = 0; i < v.atoms(); ++i) {
    const int c = part.cell_of_atom[static_cast<size_t>(i)];
    cell_sum.row(c) += space.probs[i] * v.values.row(i);
    cell_mass[c] += space.probs[i];
  }
  SimpleRandomVariable out;
  out.values.resize(v.atoms(), v.dim());
  for (int i = 0; i < v.atoms(); ++i) {
    const int c = part.cell_of_atom[static_cast<size_t>(i)];
    out.values.row(i) = cell_sum.row(c) / cell_mass[c];
  }
  return out;
}

SimpleRandomVariable project_measurable_box(const SimpleRandomVariable& v,
                                            const FiniteProbabilitySpace& space,
                                            const Partition& part,
                                            const std::vector<BoxSet>& box_per_cell) {
  check_compatible(v, space, part);
  if (static_cast<int>(box_per_cell.size()) != part.cells)
    throw InvalidArgument("project_measurable_box: need exactly one box per cell");
  for (const BoxSet& b : box_per_cell)
    if (b.dim() != v.dim()) throw InvalidArgument("project_measurable_box: box dim mismatch");

  SimpleRandomVariable out = cond_expectation(v, space, part);
  for (int i = 0; i < out.atoms(); ++i) {
    const BoxSet& box = box_per_cell[static_cast<size_t>(part.cell_of_atom[static_cast<size_t>(i)])];
    for (int d = 0; d < out.dim(); ++d)
      out.values(i, d) = std::clamp(out.values(i, d), box.lo[d], box.hi[d]);
  }
  return out;
}

double kkt_residual(const SimpleRandomVariable& v, const SimpleRandomVariable& grad,
                    const FiniteProbabilitySpace& space, const Partition& part,
                    const std::vector<BoxSet>& box_per_cell) {
  check_compatible(v, space, part);
  if (grad.atoms() != v.atoms() || grad.dim() != v.dim())
    throw InvalidArgument("kkt_residual: gradient shape mismatch");

  const SimpleRandomVariable g = cond_expectation(grad, space, part);
  SimpleRandomVariable step;
  step.values = v.values - g.values;  // unit step: the condition holds for every positive step
  const SimpleRandomVariable proj = project_measurable_box(step, space, part, box_per_cell);
  SimpleRandomVariable diff;
  diff.values = v.values - proj.values;
  return weighted_norm(diff, space);
}

double weighted_dot(const SimpleRandomVariable& a, const SimpleRandomVariable& b,
                    const FiniteProbabilitySpace& space) {
  if (a.atoms() != b.atoms() || a.dim() != b.dim() || a.atoms() != space.atoms())
    throw InvalidArgument("weighted_dot: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.atoms(); ++i)
    acc += space.probs[i] * a.values.row(i).dot(b.values.row(i));
  return acc;
}

double weighted_norm(const SimpleRandomVariable& a, const FiniteProbabilitySpace& space) {
  return std::sqrt(weighted_dot(a, a, space));
}

}  // namespace stoctrl
