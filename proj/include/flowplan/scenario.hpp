#pragma once

#include "flowplan/dynamics.hpp"
#include "flowplan/grid.hpp"
#include "flowplan/obstacles.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flowplan {

struct GridSpec {
  enum class Type { Structured, Unstructured };
  Type type = Type::Structured;
  std::vector<int> counts;            // structured
  int target_count = 0;               // unstructured
  int boundary_samples = 0;           // unstructured
  std::optional<int> cpi_target_count;  // unstructured grid size used by CPI, if different
  bool operator==(const GridSpec&) const = default;
};

/// Solver settings a scenario ships with; command-line flags override them.
struct SolverDefaults {
  int alphas = 15;
  double alpha_lo = 0.01;
  double alpha_hi = 1.0;
  int cpi_iters = 30;
  int population = 20;
  int generations = 60;
  int n_cp = 15;
  int n_par = 3;
  double sigma = 0.2;
  bool operator==(const SolverDefaults&) const = default;
};

struct Scenario {
  int version = 1;
  std::string name;
  std::string dynamics;
  FlowParams params;
  DomainBox domain;  // spatial axes only
  std::vector<double> goal;
  ObstacleSet obstacles;
  double dt = 0.0;
  ControlSet controls;
  GridSpec grid;
  std::optional<double> time_period;
  std::optional<std::vector<double>> start;
  SolverDefaults defaults;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

const std::vector<std::string>& builtin_scenario_names();
/// ex1_obstacles, ex2_linear3d, ex3_vortex, ex4_ocean or ex5_doublegyre.
Scenario builtin_scenario(const std::string& name);

/// A builtin name or a path to a scenario JSON file.
Scenario resolve_scenario(const std::string& name_or_path);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Model with time augmentation applied when the scenario has a period.
DynamicsModel make_model(const Scenario& scenario);
/// Grid for the scenario; `for_cpi` selects cpi_target_count when present.
SimplicialGrid make_grid(const Scenario& scenario, bool for_cpi = false);
State goal_state(const Scenario& scenario);

}  // namespace flowplan
