#pragma once

#include "flowplan/rollout.hpp"
#include "flowplan/sl_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flowplan {

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double value);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::string grid_to_json(const SimplicialGrid& grid);
/// Rebuilds a grid written by grid_to_json; throws IoError on malformed input.
SimplicialGrid grid_from_json(const std::string& text);

/// One row per grid point: coordinates, goal/obstacle flags, then one column per field.
std::string fields_csv(const SimplicialGrid& grid, const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields);
std::string policy_csv(const SimplicialGrid& grid, const PolicyField& policy);
std::string trajectory_csv(const Trajectory& trajectory, int state_dim, int control_dim);

/// A policy together with its value fields, as written by the solvers and
/// read back by rollout.
struct SolutionFile {
  std::string scenario;
  std::string method;
  bool cpi_grid = false;
  std::optional<double> alpha;
  double avg_time = 1.0;
  double avg_energy = 1.0;
  PolicyField policy;
  Field time;
  Field energy;
};

std::string solution_to_json(const SolutionFile& solution);
SolutionFile solution_from_json(const std::string& text);

}  // namespace flowplan
