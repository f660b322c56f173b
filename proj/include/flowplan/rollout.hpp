#pragma once

#include "flowplan/nsga.hpp"
#include "flowplan/sl_core.hpp"

#include <vector>

namespace flowplan {

struct TrajectorySample {
  double t = 0.0;
  State state;
  Control control;  // applied over [t, t + dt); zero on the final sample
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double total_time = 0.0;
  double total_energy = 0.0;
  bool reached_goal = false;
  bool hit_obstacle = false;
};

/// Barycentric blend of the stored controls around x, clamped to the control
/// box. Falls back to the nearest grid point where x cannot be located.
Control policy_control(const Problem& problem, const PolicyField& policy, const State& x);

/// 1.5 times the mesh spacing around the goal.
double default_goal_radius(const SimplicialGrid& grid);
/// Ten times the recovered time at `start`; ten times the largest finite
/// recovered time when the start is unreachable.
double default_t_max(const Problem& problem, const Field& time_field, const State& start);

/// Closed-loop simulation with trapezoid steps of the problem's dt. Stops on
/// reaching the goal ball, entering an obstacle or leaving the domain, or at t_max.
Trajectory simulate(const Problem& problem, const PolicyField& policy, const State& start, double t_max,
                    double goal_radius);

/// Indices of the non-dominated solutions in input order. Duplicates are all kept.
std::vector<std::size_t> pareto_filter(const std::vector<Objectives>& solutions);

}  // namespace flowplan
