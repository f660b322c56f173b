#include "flowplan/rollout.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowplan {

Control policy_control(const Problem& problem, const PolicyField& policy, const State& x) {
  const SimplicialGrid& grid = problem.grid();
  if (policy.size() != grid.size()) throw std::invalid_argument("policy size does not match the grid");
  const int m = problem.controls().dim();
  Control u = Control::Zero(m);
  if (const auto st = grid.locate(x)) {
    for (int j = 0; j < st->count; ++j) u += st->weight[j] * policy.controls[static_cast<std::size_t>(st->index[j])];
  } else {
    const State y = grid.wrap(x);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d = (grid.point(i) - y).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    u = policy.controls[best];
  }
  return problem.controls().clamp(u);
}

double default_goal_radius(const SimplicialGrid& grid) { return 1.5 * grid.goal_spacing(); }

double default_t_max(const Problem& problem, const Field& time_field, const State& start) {
  const double at_start = recover_value({problem.grid().interpolate(time_field, start)})[0];
  if (std::isfinite(at_start) && at_start > 0.0) return 10.0 * at_start;
  double largest = 0.0;
  for (double v : recover_value(time_field))
    if (std::isfinite(v)) largest = std::max(largest, v);
  return largest > 0.0 ? 10.0 * largest : 1000.0 * problem.dt();
}

namespace {

bool blocked(const Problem& problem, const State& x) {
  const int n = problem.model().spatial_dim();
  return problem.obstacles().contains(x) || !problem.grid().domain().contains(problem.grid().wrap(x)) ||
         !x.head(n).allFinite();
}

bool in_goal_ball(const Problem& problem, const State& x, double radius) {
  const auto n = problem.goal().size();
  return (x.head(n) - problem.goal()).norm() <= radius;
}

}  // namespace

Trajectory simulate(const Problem& problem, const PolicyField& policy, const State& start, double t_max,
                    double goal_radius) {
  Trajectory out;
  if (problem.at_goal(start)) {
    out.reached_goal = true;
    return out;
  }
  const double dt = problem.dt();
  const int m = problem.controls().dim();
  if (blocked(problem, start)) {
    out.hit_obstacle = true;
    out.samples.push_back({0.0, start, Control::Zero(m)});
    return out;
  }
  State x = start;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (in_goal_ball(problem, x, goal_radius)) {
      out.reached_goal = true;
      out.samples.push_back({t, x, Control::Zero(m)});
      break;
    }
    if (t >= t_max) {
      out.samples.push_back({t, x, Control::Zero(m)});
      break;
    }
    const Control u = policy_control(problem, policy, x);
    out.samples.push_back({t, x, u});
    out.total_energy += dt * u.squaredNorm();
    x = trapezoid_step(problem.model(), x, u, dt).state;
    if (blocked(problem, x)) {
      out.hit_obstacle = true;
      out.samples.push_back({t + dt, x, Control::Zero(m)});
      break;
    }
  }
  out.total_time = out.samples.back().t;
  return out;
}

std::vector<std::size_t> pareto_filter(const std::vector<Objectives>& solutions) {
  for (const auto& s : solutions)
    if (!std::isfinite(s.first) || !std::isfinite(s.second))
      throw std::invalid_argument("pareto_filter requires finite objectives");
  return non_dominated_indices(solutions);
}

}  // namespace flowplan
