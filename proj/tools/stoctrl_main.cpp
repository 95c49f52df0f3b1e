// Batch front-end: generates scenarios, runs the solvers, and emits the
// plot-ready CSV artifacts. One command per invocation; all randomness is
// keyed by the --seed flag so reruns are byte-identical.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stoctrl/config.hpp"
#include "stoctrl/csv.hpp"
#include "stoctrl/dam.hpp"
#include "stoctrl/parallel.hpp"
#include "stoctrl/particle.hpp"
#include "stoctrl/scentree.hpp"
#include "stoctrl/sdp.hpp"
#include "stoctrl/sim.hpp"

namespace fs = std::filesystem;
using namespace stoctrl;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  int workers = 0;
  bool quiet = false;
};

struct LoadedConfig {
  DamConfig dam;
  SolverKnobs knobs;
};

LoadedConfig load_config(const std::string& path) {
  LoadedConfig lc;
  if (path.empty()) {
    lc.dam = DamConfig::defaults();
    lc.knobs = SolverKnobs{};
  } else {
    const KeyValueConfig kv = KeyValueConfig::parse_file(path);
    lc.dam = dam_config_from(kv);
    lc.knobs = solver_knobs_from(kv);
  }
  return lc;
}

std::string timestamp_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

/// Run manifest: written before any computation, rewritten with the output
/// list on completion. Plain text, one per command.
class Manifest {
 public:
  Manifest(const std::string& out_dir, const std::string& command, const CommonFlags& flags,
           const std::vector<std::string>& methods, const std::string& extra = "") {
    path_ = out_dir + "/manifest-" + command + ".txt";
    header_ = "stoctrl " + std::string(kVersion) + "\n";
    header_ += "command = " + command + "\n";
    header_ += "config = " + (flags.config_path.empty() ? "(defaults)" : flags.config_path) + "\n";
    header_ += "seed = " + std::to_string(flags.seed) + "\n";
    header_ += "out = " + out_dir + "\n";
    std::string m;
    for (const auto& name : methods) m += (m.empty() ? "" : ",") + name;
    header_ += "methods = " + m + "\n";
    if (!extra.empty()) header_ += extra;
    header_ += "timestamp = " + timestamp_now() + "\n";
    write(false);
  }

  void add_output(const std::string& path) { outputs_.push_back(path); }

  void finalize() { write(true); }

  /// Removes every tracked output; used when a command fails midway.
  void remove_outputs() {
    for (const auto& p : outputs_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  void write(bool with_outputs) {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path_);
    out << header_;
    if (with_outputs) {
      out << "outputs:\n";
      for (const auto& p : outputs_) out << "  " << p << "\n";
    }
  }

  std::string path_;
  std::string header_;
  std::vector<std::string> outputs_;
};

void say(const CommonFlags& flags, const std::string& msg) {
  if (!flags.quiet) std::cout << msg << "\n";
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const CommonFlags& flags, int n_scenarios) {
  ensure_out_dir(flags.out_dir);
  const LoadedConfig lc = load_config(flags.config_path);
  Manifest manifest(flags.out_dir, "gen", flags, {},
                    "n_scenarios = " + std::to_string(n_scenarios) + "\n");

  const NoiseModel noise = dam_noise_model(lc.dam);
  ScenarioSet train = draw_scenarios(noise, n_scenarios, flags.seed);
  auto [train2, test] = split(train, flags.seed);
  if (lc.knobs.test_scenarios > 0 && lc.knobs.test_scenarios != n_scenarios) {
    test = draw_scenarios(noise, lc.knobs.test_scenarios, test.seed);
    test.role = ScenarioSet::Role::test;
  }

  const std::string train_path = flags.out_dir + "/train.csv";
  const std::string test_path = flags.out_dir + "/test.csv";
  write_scenarios(train_path, train2);
  manifest.add_output(train_path);
  write_scenarios(test_path, test);
  manifest.add_output(test_path);
  manifest.finalize();
  say(flags, "gen: wrote " + std::to_string(train2.count) + " train and " +
                 std::to_string(test.count) + " test scenarios to " + flags.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOutputs {
  double final_cost = 0.0;
  int iterations = 0;
};

std::string two_digits(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", t);
  return buf;
}

SolveOutputs solve_sdp_cmd(const CommonFlags& flags, const LoadedConfig& lc,
                           const ScenarioSet& train, Manifest& manifest) {
  const ProblemModel model = build_dam_model(lc.dam);
  const StateGridSpec grid = StateGridSpec::uniform(lc.dam.x_min, lc.dam.x_max, lc.knobs.sdp_grid_n);
  const InterpConfig interp{InterpMethod::linear1d, 0.0};
  const SdpResult result = solve_sdp(model, train, grid, interp);

  const std::string bellman_path = flags.out_dir + "/bellman.csv";
  write_bellman(bellman_path, result.table, result.policy);
  manifest.add_output(bellman_path);
  for (const auto& p : write_policy(flags.out_dir, "sdp_feedback", result.policy))
    manifest.add_output(p);

  SolveOutputs out;
  out.final_cost =
      expected_initial_cost(result.table, InitialLaw::uniform_law(lc.dam.x_min, lc.dam.x_max));
  out.iterations = 0;
  return out;
}

SolveOutputs solve_particle_cmd(const CommonFlags& flags, const LoadedConfig& lc,
                                const ScenarioSet& train, int max_iters, Manifest& manifest) {
  const ProblemModel model = build_dam_model(lc.dam);
  AlgoConfig config;
  config.step_size = lc.knobs.particle_step;
  config.tolerance = lc.knobs.particle_tolerance;
  config.max_iterations = max_iters >= 0 ? max_iters : lc.knobs.particle_max_iterations;
  config.costate_interp = {interp_method_from_string(lc.knobs.costate_interp),
                           lc.knobs.kernel_bandwidth};
  config.feedback_interp = {interp_method_from_string(lc.knobs.feedback_interp),
                            lc.knobs.kernel_bandwidth};
  config.smoothing_c = lc.dam.smoothing_c;

  const RunResult result = run(model, train, config);

  const std::string log_path = flags.out_dir + "/iterations.csv";
  write_iteration_log(log_path, result.reports);
  manifest.add_output(log_path);
  for (const auto& p : write_policy(flags.out_dir, "particle_feedback", result.policy))
    manifest.add_output(p);
  for (int t = 0; t < model.horizon; ++t) {
    std::vector<ScatterPoint> pts;
    for (int k = 0; k < train.count; ++k)
      pts.push_back({result.bundle.states[static_cast<size_t>(k)][static_cast<size_t>(t)],
                     result.bundle.controls[static_cast<size_t>(k)][static_cast<size_t>(t)], 1.0});
    const std::string path = flags.out_dir + "/particle_scatter_t" + two_digits(t) + ".csv";
    write_scatter(path, pts);
    manifest.add_output(path);
  }

  SolveOutputs out;
  out.final_cost = result.reports.empty()
                       ? mc_cost(model, train, result.bundle.states, result.bundle.controls)
                       : result.reports.back().cost;
  out.iterations = static_cast<int>(result.reports.size());
  return out;
}

SolveOutputs solve_tree_cmd(const CommonFlags& flags, const LoadedConfig& lc,
                            const ScenarioSet& train, int max_iters, Manifest& manifest) {
  const ProblemModel model = build_dam_model(lc.dam);
  BranchingSchedule schedule = BranchingSchedule::doubling(model.horizon);
  if (!lc.knobs.tree_branching.empty()) schedule.factors = lc.knobs.tree_branching;

  const ScenarioTree tree = build_tree(train, schedule);
  TreeOptSpec opt;
  opt.step_size = lc.knobs.tree_step;
  if (max_iters >= 0) opt.max_iterations = max_iters;
  else opt.max_iterations = lc.knobs.tree_max_iterations;
  const ScenarioTree solved = solve_tree(model, tree, opt);

  const std::string tree_path = flags.out_dir + "/tree.csv";
  write_tree(tree_path, solved);
  manifest.add_output(tree_path);
  for (int t = 0; t < model.horizon; ++t) {
    const std::string path = flags.out_dir + "/tree_scatter_t" + two_digits(t) + ".csv";
    write_scatter(path, node_scatter(solved, t));
    manifest.add_output(path);
  }

  SolveOutputs out;
  out.final_cost = tree_cost(model, solved);
  out.iterations = 0;
  return out;
}

int cmd_solve(const CommonFlags& flags, const std::string& method,
              const std::string& scenario_dir, int max_iters) {
  ensure_out_dir(flags.out_dir);
  const LoadedConfig lc = load_config(flags.config_path);
  Manifest manifest(flags.out_dir, "solve-" + method, flags, {method},
                    "scenarios = " + scenario_dir + "\n");
  try {
    const auto tic = std::chrono::steady_clock::now();
    const ScenarioSet train = read_scenarios(scenario_dir + "/train.csv");

    SolveOutputs out;
    if (method == "sdp") out = solve_sdp_cmd(flags, lc, train, manifest);
    else if (method == "particle") out = solve_particle_cmd(flags, lc, train, max_iters, manifest);
    else if (method == "tree") out = solve_tree_cmd(flags, lc, train, max_iters, manifest);
    else throw InvalidArgument("unknown method: " + method);

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    const std::string summary_path = flags.out_dir + "/summary.txt";
    {
      std::ofstream s(summary_path, std::ios::binary);
      s << "method = " << method << "\n"
        << "final_cost = " << format_double(out.final_cost) << "\n"
        << "iterations = " << out.iterations << "\n"
        << "wall_seconds = " << format_double(secs) << "\n";
    }
    manifest.add_output(summary_path);
    manifest.finalize();
    say(flags, "solve " + method + ": cost " + format_double(out.final_cost) + ", " +
                   std::to_string(out.iterations) + " iterations, " + format_double(secs) + " s");
    return 0;
  } catch (...) {
    manifest.remove_outputs();
    throw;
  }
}

// ---------------------------------------------------------------------------
// compare

struct SolveRunInfo {
  std::string dir;
  std::string method;
  std::string scenarios_dir;
};

SolveRunInfo read_solve_manifest(const std::string& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest-solve-", 0) != 0) continue;
    SolveRunInfo info;
    info.dir = dir;
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      const auto strip = [](std::string s) {
        const size_t b = s.find_first_not_of(' ');
        return b == std::string::npos ? std::string() : s.substr(b);
      };
      if (line.rfind("methods = ", 0) == 0) info.method = strip(line.substr(10));
      if (line.rfind("scenarios = ", 0) == 0) info.scenarios_dir = strip(line.substr(12));
    }
    if (info.method.empty()) throw IoError("manifest without method in " + dir);
    return info;
  }
  throw IoError("no solve manifest found in " + dir + " (run `stoctrl solve` first)");
}

Policy load_method_policy(const SolveRunInfo& info, const ProblemModel& model) {
  if (info.method == "sdp") return read_policy(info.dir, "sdp_feedback", model.horizon);
  if (info.method == "particle") return read_policy(info.dir, "particle_feedback", model.horizon);
  if (info.method == "tree") {
    // Trees carry no feedback law of their own; synthesize one per stage
    // from the node (state, control) scatter, as the comparison requires a
    // simulatable policy.
    const ScenarioTree tree = read_tree(info.dir + "/tree.csv");
    Policy policy;
    for (int t = 0; t < tree.horizon; ++t) {
      const auto pts = node_scatter(tree, t);
      Mat sites(static_cast<Eigen::Index>(pts.size()), 1);
      Mat values(static_cast<Eigen::Index>(pts.size()), 1);
      for (size_t i = 0; i < pts.size(); ++i) {
        sites(static_cast<Eigen::Index>(i), 0) = pts[i].state[0];
        values(static_cast<Eigen::Index>(i), 0) = pts[i].control[0];
      }
      policy.stages.emplace_back(std::move(sites), std::move(values),
                                 InterpConfig{InterpMethod::linear1d, 0.0});
    }
    return policy;
  }
  throw InvalidArgument("cannot load a policy for method " + info.method);
}

std::vector<std::vector<ScatterPoint>> load_method_scatter(const SolveRunInfo& info,
                                                           const ProblemModel& model) {
  std::vector<std::vector<ScatterPoint>> scatter(static_cast<size_t>(model.horizon));
  if (info.method == "tree") {
    const ScenarioTree tree = read_tree(info.dir + "/tree.csv");
    for (int t = 0; t < model.horizon; ++t) scatter[static_cast<size_t>(t)] = node_scatter(tree, t);
    return scatter;
  }
  if (info.method == "particle") {
    for (int t = 0; t < model.horizon; ++t)
      scatter[static_cast<size_t>(t)] =
          read_scatter(info.dir + "/particle_scatter_t" + two_digits(t) + ".csv");
    return scatter;
  }
  if (info.method == "sdp") {
    const Policy policy = read_policy(info.dir, "sdp_feedback", model.horizon);
    for (int t = 0; t < model.horizon; ++t) {
      const GridFunction& g = policy.stages[static_cast<size_t>(t)];
      for (int i = 0; i < g.size(); ++i)
        scatter[static_cast<size_t>(t)].push_back(
            {g.sites().row(i).transpose(), g.values().row(i).transpose(), 1.0});
    }
    return scatter;
  }
  throw InvalidArgument("cannot load scatter for method " + info.method);
}

int cmd_compare(const CommonFlags& flags, const std::vector<std::string>& dirs) {
  ensure_out_dir(flags.out_dir);
  const LoadedConfig lc = load_config(flags.config_path);
  const ProblemModel model = build_dam_model(lc.dam);

  std::vector<SolveRunInfo> infos;
  for (const auto& d : dirs) infos.push_back(read_solve_manifest(d));
  if (infos[0].method != "sdp")
    throw InvalidArgument("compare: the first directory must hold the sdp reference run");

  std::vector<std::string> methods;
  for (const auto& i : infos) methods.push_back(i.method);
  Manifest manifest(flags.out_dir, "compare", flags, methods);
  try {
    const ScenarioSet test = read_scenarios(infos[0].scenarios_dir + "/test.csv");
    const Policy reference = load_method_policy(infos[0], model);

    std::ostringstream summary;
    summary << "reference = sdp\n";

    const SimulationReport ref_sim = simulate_policy(model, reference, test);
    {
      const std::string p = flags.out_dir + "/sim_sdp.csv";
      write_sim_report(p, ref_sim);
      manifest.add_output(p);
    }
    summary << "sim_mean_sdp = " << format_double(ref_sim.mean)
            << " (stderr " << format_double(ref_sim.std_error) << ")\n";

    for (size_t m = 1; m < infos.size(); ++m) {
      const SolveRunInfo& info = infos[m];
      const std::string tag = info.method + (infos.size() > 2 ? std::to_string(m) : "");

      const Policy policy = load_method_policy(info, model);
      const SimulationReport sim = simulate_policy(model, policy, test);
      const std::string sim_path = flags.out_dir + "/sim_" + tag + ".csv";
      write_sim_report(sim_path, sim);
      manifest.add_output(sim_path);

      const auto scatter = load_method_scatter(info, model);
      const ComparisonReport cmp = compare(scatter, reference);
      const std::string cmp_path = flags.out_dir + "/comparison_" + tag + ".csv";
      write_comparison(cmp_path, cmp);
      manifest.add_output(cmp_path);

      const double gap = (sim.mean - ref_sim.mean) / ref_sim.mean;
      summary << "sim_mean_" << tag << " = " << format_double(sim.mean) << " (stderr "
              << format_double(sim.std_error) << ")\n";
      summary << "gap_" << tag << " = " << format_double(gap) << "\n";
      const int last = model.horizon - 1;
      const int first = std::max(0, model.horizon - 4);
      summary << "late_rms_" << tag << " = "
              << format_double(pooled_rms(scatter, reference, first, last)) << " (stages "
              << first << ".." << last << ")\n";
    }

    const std::string summary_path = flags.out_dir + "/summary.txt";
    {
      std::ofstream s(summary_path, std::ios::binary);
      s << summary.str();
    }
    manifest.add_output(summary_path);
    manifest.finalize();
    say(flags, "compare: wrote " + flags.out_dir + "/summary.txt");
    if (!flags.quiet) std::cout << summary.str();
    return 0;
  } catch (...) {
    manifest.remove_outputs();
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic optimal control toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  int n_scenarios = 200;
  int max_iters = -1;
  std::string method;
  std::string scenario_dir;
  std::vector<std::string> compare_dirs;

  auto add_common = [&](CLI::App* cmd, bool needs_out = true) {
    cmd->add_option("--config", flags.config_path, "configuration file (key = value lines)");
    cmd->add_option("--seed", flags.seed, "random seed");
    auto* out = cmd->add_option("--out", flags.out_dir, "output directory");
    if (needs_out) out->required();
    cmd->add_option("--workers", flags.workers, "worker thread cap (0 = machine parallelism)");
    cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
  };

  CLI::App* gen = app.add_subcommand("gen", "draw train/test noise scenarios");
  add_common(gen);
  gen->add_option("--n-scenarios", n_scenarios, "number of training scenarios");

  CLI::App* solve = app.add_subcommand("solve", "run one solution method");
  add_common(solve);
  solve->add_option("scenarios", scenario_dir, "directory holding train.csv")->required();
  solve->add_option("--method", method, "sdp | particle | tree")->required();
  solve->add_option("--max-iters", max_iters, "iteration cap override");

  CLI::App* cmp = app.add_subcommand("compare", "compare solve runs against the sdp reference");
  add_common(cmp);
  cmp->add_option("dirs", compare_dirs, "solve output directories (sdp reference first)")
      ->expected(2, 3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  set_max_workers(flags.workers);
  try {
    if (gen->parsed()) return cmd_gen(flags, n_scenarios);
    if (solve->parsed()) return cmd_solve(flags, method, scenario_dir, max_iters);
    if (cmp->parsed()) return cmd_compare(flags, compare_dirs);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
