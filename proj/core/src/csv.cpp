#include "stoctrl/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stoctrl {

namespace {

std::string schema_line(const std::string& kind, const std::string& extra = "") {
  std::string line = std::string("# ") + kCsvSchema + " " + kind;
  if (!extra.empty()) line += " " + extra;
  return line;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("bad numeric field '" + s + "' in " + path);
  return v;
}

long parse_long(const std::string& s, const std::string& path) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("bad integer field '" + s + "' in " + path);
  return v;
}

struct ParsedFile {
  std::string schema;                  // first comment line, without '# '
  std::string header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> trailing_comments;
};

ParsedFile parse_file(const std::string& path) {
  std::ifstream in = open_in(path);
  ParsedFile f;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!seen_header && f.schema.empty())
        f.schema = line.size() > 2 ? line.substr(2) : "";
      else
        f.trailing_comments.push_back(line);
      continue;
    }
    if (!seen_header) {
      f.header = line;
      seen_header = true;
      continue;
    }
    f.rows.push_back(split_csv(line));
  }
  if (!seen_header) throw IoError("missing header row in " + path);
  return f;
}

void expect_kind(const ParsedFile& f, const std::string& kind, const std::string& path) {
  const std::string want = std::string(kCsvSchema) + " " + kind;
  if (f.schema.compare(0, want.size(), want) != 0)
    throw IoError("unexpected schema in " + path + ": '" + f.schema + "'");
}

/// key=value tokens inside a schema comment.
std::string schema_field(const std::string& schema, const std::string& key) {
  std::istringstream in(schema);
  std::string tok;
  while (in >> tok) {
    if (tok.compare(0, key.size() + 1, key + "=") == 0) return tok.substr(key.size() + 1);
  }
  return "";
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_scenarios(const std::string& path, const ScenarioSet& scenarios) {
  scenarios.validate();
  std::ofstream out = open_out(path);
  out << schema_line("scenarios",
                     "role=" +
                         std::string(scenarios.role == ScenarioSet::Role::train ? "train" : "test") +
                         " seed=" + std::to_string(scenarios.seed) +
                         " count=" + std::to_string(scenarios.count) +
                         " horizon=" + std::to_string(scenarios.horizon))
      << "\n";
  out << "scenario,stage,component,value\n";
  for (int k = 0; k < scenarios.count; ++k)
    for (int t = 0; t <= scenarios.horizon; ++t) {
      const Vec& w = scenarios.at(k, t);
      for (Eigen::Index c = 0; c < w.size(); ++c)
        out << k << ',' << t << ',' << c << ',' << format_double(w[c]) << "\n";
    }
  if (!out) throw IoError("write failed: " + path);
}

ScenarioSet read_scenarios(const std::string& path) {
  ParsedFile f = parse_file(path);
  expect_kind(f, "scenarios", path);
  ScenarioSet set;
  const std::string role = schema_field(f.schema, "role");
  set.role = role == "test" ? ScenarioSet::Role::test : ScenarioSet::Role::train;
  const std::string seed = schema_field(f.schema, "seed");
  if (!seed.empty()) set.seed = static_cast<std::uint64_t>(parse_long(seed, path));

  int max_scn = -1, max_stage = -1;
  for (const auto& row : f.rows) {
    if (row.size() != 4) throw IoError("scenario rows need 4 fields in " + path);
    max_scn = std::max(max_scn, static_cast<int>(parse_long(row[0], path)));
    max_stage = std::max(max_stage, static_cast<int>(parse_long(row[1], path)));
  }
  if (max_scn < 0) throw IoError("no scenario rows in " + path);
  set.count = max_scn + 1;
  set.horizon = max_stage;

  std::vector<std::vector<std::vector<double>>> acc(
      static_cast<size_t>(set.count),
      std::vector<std::vector<double>>(static_cast<size_t>(set.horizon) + 1));
  for (const auto& row : f.rows) {
    const int k = static_cast<int>(parse_long(row[0], path));
    const int t = static_cast<int>(parse_long(row[1], path));
    const int c = static_cast<int>(parse_long(row[2], path));
    auto& slot = acc[static_cast<size_t>(k)][static_cast<size_t>(t)];
    if (static_cast<int>(slot.size()) <= c) slot.resize(static_cast<size_t>(c) + 1);
    slot[static_cast<size_t>(c)] = parse_double(row[3], path);
  }
  set.values.resize(static_cast<size_t>(set.count));
  for (int k = 0; k < set.count; ++k) {
    set.values[static_cast<size_t>(k)].resize(static_cast<size_t>(set.horizon) + 1);
    for (int t = 0; t <= set.horizon; ++t) {
      const auto& slot = acc[static_cast<size_t>(k)][static_cast<size_t>(t)];
      if (slot.empty()) throw IoError("missing scenario entry in " + path);
      Vec w(static_cast<Eigen::Index>(slot.size()));
      for (size_t c = 0; c < slot.size(); ++c) w[static_cast<Eigen::Index>(c)] = slot[c];
      set.values[static_cast<size_t>(k)][static_cast<size_t>(t)] = std::move(w);
    }
  }
  set.validate();
  return set;
}

void write_grid(const std::string& path, const GridFunction& grid) {
  std::ofstream out = open_out(path);
  out << schema_line("grid", "method=" + to_string(grid.config().method) +
                                 " bandwidth=" + format_double(grid.config().bandwidth))
      << "\n";
  for (int c = 0; c < grid.input_dim(); ++c) out << "site" << c << ',';
  for (int c = 0; c < grid.output_dim(); ++c)
    out << "value" << c << (c + 1 < grid.output_dim() ? "," : "");
  out << "\n";
  for (int i = 0; i < grid.size(); ++i) {
    for (int c = 0; c < grid.input_dim(); ++c) out << format_double(grid.sites()(i, c)) << ',';
    for (int c = 0; c < grid.output_dim(); ++c)
      out << format_double(grid.values()(i, c)) << (c + 1 < grid.output_dim() ? "," : "");
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

GridFunction read_grid(const std::string& path) {
  ParsedFile f = parse_file(path);
  expect_kind(f, "grid", path);
  InterpConfig cfg;
  cfg.method = interp_method_from_string(schema_field(f.schema, "method"));
  const std::string bw = schema_field(f.schema, "bandwidth");
  if (!bw.empty()) cfg.bandwidth = parse_double(bw, path);

  const auto header = split_csv(f.header);
  int in_dim = 0;
  for (const auto& h : header)
    if (h.rfind("site", 0) == 0) ++in_dim;
  const int out_dim = static_cast<int>(header.size()) - in_dim;
  if (in_dim < 1 || out_dim < 1) throw IoError("bad grid header in " + path);

  Mat sites(static_cast<Eigen::Index>(f.rows.size()), in_dim);
  Mat values(static_cast<Eigen::Index>(f.rows.size()), out_dim);
  for (size_t i = 0; i < f.rows.size(); ++i) {
    const auto& row = f.rows[i];
    if (static_cast<int>(row.size()) != in_dim + out_dim)
      throw IoError("bad grid row in " + path);
    for (int c = 0; c < in_dim; ++c)
      sites(static_cast<Eigen::Index>(i), c) = parse_double(row[static_cast<size_t>(c)], path);
    for (int c = 0; c < out_dim; ++c)
      values(static_cast<Eigen::Index>(i), c) =
          parse_double(row[static_cast<size_t>(in_dim + c)], path);
  }
  return GridFunction(std::move(sites), std::move(values), cfg);
}

namespace {
std::string stage_file(const std::string& dir, const std::string& prefix, int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_t%02d.csv", t);
  return dir + "/" + prefix + buf;
}
}  // namespace

std::vector<std::string> write_policy(const std::string& dir, const std::string& prefix,
                                      const Policy& policy) {
  std::vector<std::string> paths;
  for (int t = 0; t < policy.horizon(); ++t) {
    const std::string path = stage_file(dir, prefix, t);
    write_grid(path, policy.stages[static_cast<size_t>(t)]);
    paths.push_back(path);
  }
  return paths;
}

Policy read_policy(const std::string& dir, const std::string& prefix, int horizon) {
  Policy policy;
  for (int t = 0; t < horizon; ++t)
    policy.stages.push_back(read_grid(stage_file(dir, prefix, t)));
  return policy;
}

void write_bellman(const std::string& path, const BellmanTable& table, const Policy& policy) {
  std::ofstream out = open_out(path);
  out << schema_line("bellman") << "\n";
  out << "stage,state,value,control\n";
  const int T = table.horizon();
  for (int t = 0; t <= T; ++t) {
    const Vec& xs = table.states[static_cast<size_t>(t)];
    const Vec& vs = table.values[static_cast<size_t>(t)];
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      out << t << ',' << format_double(xs[i]) << ',' << format_double(vs[i]) << ',';
      if (t < T) out << format_double(policy.stages[static_cast<size_t>(t)].values()(i, 0));
      out << "\n";
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_iteration_log(const std::string& path, const std::vector<IterationReport>& reports) {
  std::ofstream out = open_out(path);
  out << schema_line("iterations") << "\n";
  out << "iter,cost,grad_norm,control_change,seconds\n";
  for (const auto& r : reports)
    out << r.iteration << ',' << format_double(r.cost) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.control_change) << ',' << format_double(r.seconds) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_scatter(const std::string& path, const std::vector<ScatterPoint>& points) {
  std::ofstream out = open_out(path);
  out << schema_line("scatter") << "\n";
  out << "state,control\n";
  for (const auto& p : points)
    out << format_double(p.state[0]) << ',' << format_double(p.control[0]) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ScatterPoint> read_scatter(const std::string& path) {
  ParsedFile f = parse_file(path);
  expect_kind(f, "scatter", path);
  std::vector<ScatterPoint> points;
  for (const auto& row : f.rows) {
    if (row.size() != 2) throw IoError("bad scatter row in " + path);
    points.push_back({scalar_vec(parse_double(row[0], path)),
                      scalar_vec(parse_double(row[1], path)), 1.0});
  }
  return points;
}

void write_tree(const std::string& path, const ScenarioTree& tree) {
  int noise_dim = 0;
  for (const TreeNode& n : tree.nodes)
    noise_dim = std::max(noise_dim, static_cast<int>(n.noise.size()));
  std::ofstream out = open_out(path);
  out << schema_line("tree", "horizon=" + std::to_string(tree.horizon)) << "\n";
  out << "node_id,stage,parent_id,prob";
  for (int c = 0; c < noise_dim; ++c) out << ",noise" << c;
  out << ",state,control\n";
  for (const TreeNode& n : tree.nodes) {
    out << n.id << ',' << n.stage << ',' << n.parent << ',' << format_double(n.prob);
    for (int c = 0; c < noise_dim; ++c) {
      out << ',';
      if (c < n.noise.size()) out << format_double(n.noise[c]);
    }
    out << ',';
    if (n.state.size() > 0) out << format_double(n.state[0]);
    out << ',';
    if (n.control.size() > 0) out << format_double(n.control[0]);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

ScenarioTree read_tree(const std::string& path) {
  ParsedFile f = parse_file(path);
  expect_kind(f, "tree", path);
  ScenarioTree tree;
  tree.horizon = static_cast<int>(parse_long(schema_field(f.schema, "horizon"), path));
  tree.stage_ids.resize(static_cast<size_t>(tree.horizon) + 1);

  const auto header = split_csv(f.header);
  int noise_dim = 0;
  for (const auto& h : header)
    if (h.rfind("noise", 0) == 0) ++noise_dim;

  tree.nodes.resize(f.rows.size());
  for (const auto& row : f.rows) {
    if (static_cast<int>(row.size()) != 6 + noise_dim) throw IoError("bad tree row in " + path);
    TreeNode n;
    n.id = static_cast<int>(parse_long(row[0], path));
    n.stage = static_cast<int>(parse_long(row[1], path));
    n.parent = static_cast<int>(parse_long(row[2], path));
    n.prob = parse_double(row[3], path);
    std::vector<double> noise;
    for (int c = 0; c < noise_dim; ++c)
      if (!row[static_cast<size_t>(4 + c)].empty())
        noise.push_back(parse_double(row[static_cast<size_t>(4 + c)], path));
    n.noise.resize(static_cast<Eigen::Index>(noise.size()));
    for (size_t c = 0; c < noise.size(); ++c) n.noise[static_cast<Eigen::Index>(c)] = noise[c];
    const std::string& state = row[static_cast<size_t>(4 + noise_dim)];
    if (!state.empty()) n.state = scalar_vec(parse_double(state, path));
    const std::string& control = row[static_cast<size_t>(5 + noise_dim)];
    if (!control.empty()) n.control = scalar_vec(parse_double(control, path));
    if (n.id < 0 || n.id >= static_cast<int>(tree.nodes.size()))
      throw IoError("tree node id out of range in " + path);
    tree.stage_ids[static_cast<size_t>(n.stage)].push_back(n.id);
    tree.nodes[static_cast<size_t>(n.id)] = std::move(n);
  }
  for (TreeNode& n : tree.nodes)
    if (n.parent >= 0) tree.nodes[static_cast<size_t>(n.parent)].children.push_back(n.id);
  return tree;
}

void write_sim_report(const std::string& path, const SimulationReport& report) {
  std::ofstream out = open_out(path);
  out << schema_line("simulation") << "\n";
  out << "scenario,cost\n";
  for (size_t k = 0; k < report.costs.size(); ++k)
    out << k << ',' << format_double(report.costs[k]) << "\n";
  out << "# summary mean=" << format_double(report.mean)
      << " stderr=" << format_double(report.std_error) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void write_comparison(const std::string& path, const ComparisonReport& report) {
  std::ofstream out = open_out(path);
  out << schema_line("comparison") << "\n";
  out << "stage,count,rms\n";
  for (const auto& s : report.stages) {
    out << s.stage << ',' << s.count << ',';
    if (!s.missing) out << format_double(s.rms);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace stoctrl
