#pragma once

#include <map>
#include <string>
#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/dam.hpp"

namespace stoctrl {

/// Plain-text configuration: one `key = value` per line, arrays as comma
/// lists, '#' starts a comment. Unknown keys are rejected by the consumers
/// that know the full key set.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<text>");

  bool has(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

/// Dam configuration from a parsed file; keys not present keep the
/// documented defaults. Rejects keys outside the known set.
DamConfig dam_config_from(const KeyValueConfig& config);

/// Solver knobs read from the same file (all optional).
struct SolverKnobs {
  int sdp_grid_n = 200;
  double particle_step = 0.1;
  double particle_tolerance = 1e-4;
  int particle_max_iterations = 500;
  std::string costate_interp = "kernel";
  std::string feedback_interp = "linear-1d";
  double kernel_bandwidth = 0.0;  // 0 = automatic
  std::vector<int> tree_branching;  // empty = doubling
  double tree_step = 0.1;
  int tree_max_iterations = 20000;
  int test_scenarios = 0;  // 0 = same as the training count
};

SolverKnobs solver_knobs_from(const KeyValueConfig& config);

}  // namespace stoctrl
