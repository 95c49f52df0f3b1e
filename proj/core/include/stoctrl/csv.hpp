#pragma once

#include <string>
#include <vector>

#include "stoctrl/common.hpp"
#include "stoctrl/interp.hpp"
#include "stoctrl/particle.hpp"
#include "stoctrl/sampling.hpp"
#include "stoctrl/scentree.hpp"
#include "stoctrl/sdp.hpp"
#include "stoctrl/sim.hpp"

namespace stoctrl {

/// CSV conventions shared by every writer: UTF-8, LF line endings, one
/// schema comment line prefixed '#', then the header row. Doubles carry 17
/// significant digits so values round-trip exactly.

std::string format_double(double x);

/// Scenario files: header `scenario,stage,component,value`.
void write_scenarios(const std::string& path, const ScenarioSet& scenarios);
ScenarioSet read_scenarios(const std::string& path);

/// Grid files: header `site0,...,value0,...`; the interpolation config
/// rides along in the schema comment so policies rebuild identically.
void write_grid(const std::string& path, const GridFunction& grid);
GridFunction read_grid(const std::string& path);

/// Policies as one grid file per stage: <prefix>_t00.csv, ...
std::vector<std::string> write_policy(const std::string& dir, const std::string& prefix,
                                      const Policy& policy);
Policy read_policy(const std::string& dir, const std::string& prefix, int horizon);

/// Bellman files: header `stage,state,value,control`; the stage-T rows
/// carry an empty control field.
void write_bellman(const std::string& path, const BellmanTable& table, const Policy& policy);

/// Iteration logs: header `iter,cost,grad_norm,control_change,seconds`.
void write_iteration_log(const std::string& path, const std::vector<IterationReport>& reports);

/// Feedback scatter per stage: header `state,control`.
void write_scatter(const std::string& path, const std::vector<ScatterPoint>& points);
std::vector<ScatterPoint> read_scatter(const std::string& path);

/// Tree files: header `node_id,stage,parent_id,prob,noise...,state,control`
/// (noise columns padded to the widest stage; empty fields where absent).
void write_tree(const std::string& path, const ScenarioTree& tree);
ScenarioTree read_tree(const std::string& path);

/// Simulation reports: header `scenario,cost`, then a trailing comment line
/// `# summary mean=... stderr=...`.
void write_sim_report(const std::string& path, const SimulationReport& report);

/// Comparison tables: header `stage,count,rms` (empty rms when a stage has
/// no scatter).
void write_comparison(const std::string& path, const ComparisonReport& report);

}  // namespace stoctrl
