#include "stoctrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace stoctrl {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const std::string t = trim(s);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InvalidArgument("config: bad numeric value '" + s + "' for key " + key);
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config: expected 'key = value' at " + origin + ":" +
                            std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config: empty key at " + origin + ":" +
                                           std::to_string(lineno));
    if (cfg.entries_.count(key))
      throw InvalidArgument("config: duplicate key '" + key + "' at " + origin + ":" +
                            std::to_string(lineno));
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : to_double(it->second, key);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw InvalidArgument("config: key " + key + " must be an integer");
  return i;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) out.push_back(to_double(item, key));
  if (out.empty()) throw InvalidArgument("config: empty array for key " + key);
  return out;
}

DamConfig dam_config_from(const KeyValueConfig& config) {
  static const std::set<std::string> known = {
      "horizon",       "x_min",        "x_max",        "u_min",
      "u_max",         "price",        "mean_inflow",  "mean_demand",
      "delta_inflow",  "delta_demand", "smoothing_c",  "final_weight",
      "disturbance_levels",
      // solver knobs share the file
      "sdp_grid_n",    "particle_step", "particle_tolerance", "particle_max_iterations",
      "costate_interp", "feedback_interp", "kernel_bandwidth", "tree_branching",
      "tree_step",     "tree_max_iterations", "test_scenarios"};
  for (const auto& [key, value] : config.entries())
    if (!known.count(key)) throw InvalidArgument("config: unknown key '" + key + "'");

  DamConfig dam = DamConfig::defaults();
  const int horizon = config.get_int("horizon", dam.horizon);
  if (horizon != dam.horizon) {
    // Rebuild the default curves at the requested horizon before overrides.
    dam.horizon = horizon;
    if (horizon >= 1) {
      DamConfig base = DamConfig::defaults();
      auto resample = [&](const std::vector<double>& src) {
        std::vector<double> dst(static_cast<size_t>(horizon));
        for (int t = 0; t < horizon; ++t)
          dst[static_cast<size_t>(t)] = src[static_cast<size_t>(std::min<int>(
              t, static_cast<int>(src.size()) - 1))];
        return dst;
      };
      dam.price = resample(base.price);
      dam.mean_inflow = resample(base.mean_inflow);
      dam.mean_demand = resample(base.mean_demand);
    }
  }
  dam.x_min = config.get_double("x_min", dam.x_min);
  dam.x_max = config.get_double("x_max", dam.x_max);
  dam.u_min = config.get_double("u_min", dam.u_min);
  dam.u_max = config.get_double("u_max", dam.u_max);
  dam.price = config.get_doubles("price", dam.price);
  dam.mean_inflow = config.get_doubles("mean_inflow", dam.mean_inflow);
  dam.mean_demand = config.get_doubles("mean_demand", dam.mean_demand);
  dam.delta_inflow = config.get_double("delta_inflow", dam.delta_inflow);
  dam.delta_demand = config.get_double("delta_demand", dam.delta_demand);
  dam.disturbance_levels = config.get_int("disturbance_levels", dam.disturbance_levels);
  dam.smoothing_c = config.get_double("smoothing_c", dam.smoothing_c);
  dam.final_weight = config.get_double("final_weight", dam.final_weight);
  dam.validate();
  return dam;
}

SolverKnobs solver_knobs_from(const KeyValueConfig& config) {
  SolverKnobs knobs;
  knobs.sdp_grid_n = config.get_int("sdp_grid_n", knobs.sdp_grid_n);
  knobs.particle_step = config.get_double("particle_step", knobs.particle_step);
  knobs.particle_tolerance = config.get_double("particle_tolerance", knobs.particle_tolerance);
  knobs.particle_max_iterations =
      config.get_int("particle_max_iterations", knobs.particle_max_iterations);
  knobs.costate_interp = config.get_string("costate_interp", knobs.costate_interp);
  knobs.feedback_interp = config.get_string("feedback_interp", knobs.feedback_interp);
  knobs.kernel_bandwidth = config.get_double("kernel_bandwidth", knobs.kernel_bandwidth);
  for (double b : config.get_doubles("tree_branching", {}))
    knobs.tree_branching.push_back(static_cast<int>(b));
  knobs.tree_step = config.get_double("tree_step", knobs.tree_step);
  knobs.tree_max_iterations = config.get_int("tree_max_iterations", knobs.tree_max_iterations);
  knobs.test_scenarios = config.get_int("test_scenarios", knobs.test_scenarios);
  return knobs;
}

}  // namespace stoctrl
