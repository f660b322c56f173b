#include "flowplan/sl_core.hpp"

#include "flowplan/parallel.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs Jacobi sweeps of `update(i, field)` over the free points until the
// sup-norm change and the geometric tail bound rho / (1 - rho) * change both
// drop below tol. Returns (sweeps, converged).
// Points listed in `absorbing` are held at 1 and skipped.
template <class Update>
std::pair<int, bool> iterate_to_fixed_point(const Problem& problem, Field& field,
                                            const SolveOptions& options, bool allow_damping,
                                            Update&& update, const std::vector<char>* absorbing = nullptr) {
  if (!(options.tol > 0.0)) throw ConfigError("tol must be positive");
  std::vector<long> free;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (problem.pinned(i)) continue;
    if (absorbing && (*absorbing)[i]) {
      field[i] = 1.0;
      continue;
    }
    free.push_back(static_cast<long>(i));
  }
  if (free.empty()) return {0, true};

  Field next = field;
  double previous_change = kInf;
  double damping = 1.0;
  const long n_free = static_cast<long>(free.size());
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double change = 0.0;
    bool rose = false;
#pragma omp parallel for num_threads(thread_count()) schedule(static) reduction(max : change) reduction(|| : rose)
    for (long k = 0; k < n_free; ++k) {
      const auto i = static_cast<std::size_t>(free[static_cast<std::size_t>(k)]);
      double v = update(i, field);
      if (damping < 1.0) v = field[i] + damping * (v - field[i]);
      v = std::clamp(v, 0.0, 1.0);
      if (v > field[i]) rose = true;
      change = std::max(change, std::abs(v - field[i]));
      next[i] = v;
    }
    for (long k = 0; k < n_free; ++k) {
      const auto i = static_cast<std::size_t>(free[static_cast<std::size_t>(k)]);
      field[i] = next[i];
    }
    // From the pessimistic start every sweep should only lower values; a rise
    // signals oscillation.
    if (allow_damping && rose && damping == 1.0) damping = 0.5;
    if (change == 0.0) return {sweep, true};
    const double rho = change / previous_change;
    if (change <= options.tol && rho < 1.0 && rho / (1.0 - rho) * change <= options.tol)
      return {sweep, true};
    previous_change = change;
  }
  return {options.max_sweeps, false};
}

// Marks points from which the frozen transitions never reach a goal point.
// Their only fixed point is 1 once every off-goal step has positive cost,
// while sweeps would approach it sublinearly.
std::vector<char> unreachable_points(const Problem& problem, const std::vector<Transition>& transitions) {
  const auto& grid = problem.grid();
  const std::size_t n = grid.size();
  std::vector<std::vector<std::size_t>> predecessors(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (problem.pinned(i)) continue;
    const Transition& t = transitions[i];
    for (int j = 0; j < t.count; ++j)
      if (t.weight[j] > 0.0) predecessors[static_cast<std::size_t>(t.index[j])].push_back(i);
  }
  std::vector<char> unreachable(n, 1);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.is_goal(i)) {
      unreachable[i] = 0;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t j = stack.back();
    stack.pop_back();
    for (std::size_t i : predecessors[j]) {
      if (!unreachable[i]) continue;
      unreachable[i] = 0;
      stack.push_back(i);
    }
  }
  return unreachable;
}

// d step_value / d next.
double step_slope(TransformKind kind, double next, double g) {
  if (kind == TransformKind::Kruzkov) return std::exp(-g);
  if (next >= 1.0) return 1.0;
  const double a = 1.0 / (1.0 - next);
  const double r = a / (a + g);
  return r * r;
}

// Newton iteration on v - T(v) = 0 over the free points. T is monotone and
// convex in v, so from a field with v >= T(v) the iterates decrease towards
// the fixed point. Returns true once a step and the residual are below tol.
bool newton_evaluation(const Problem& problem, const std::vector<Transition>& transitions,
                       const std::vector<double>& g, const std::vector<long>& free, Field& field, double tol) {
  const TransformKind kind = problem.transform();
  const auto n = static_cast<Eigen::Index>(free.size());
  std::vector<long> slot(field.size(), -1);
  for (std::size_t k = 0; k < free.size(); ++k) slot[static_cast<std::size_t>(free[k])] = static_cast<long>(k);

  auto residual = [&](Eigen::VectorXd& r) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(free[static_cast<std::size_t>(k)]);
      r(k) = field[i] - step_value(kind, gather(transitions[i], field), g[i]);
      worst = std::max(worst, std::abs(r(k)));
    }
    return worst;
  };

  Eigen::VectorXd r(n);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int iteration = 0; iteration < 50; ++iteration) {
    residual(r);
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(free[static_cast<std::size_t>(k)]);
      const Transition& t = transitions[i];
      entries.emplace_back(k, k, 1.0);
      const double slope = step_slope(kind, gather(t, field), g[i]);
      for (int j = 0; j < t.count; ++j) {
        const long col = slot[static_cast<std::size_t>(t.index[j])];
        if (col >= 0) entries.emplace_back(k, col, -slope * t.weight[j]);
      }
    }
    Eigen::SparseMatrix<double> jacobian(n, n);
    jacobian.setFromTriplets(entries.begin(), entries.end());
    lu.compute(jacobian);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd step = lu.solve(r);
    if (lu.info() != Eigen::Success || !step.allFinite()) return false;
    double moved = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(free[static_cast<std::size_t>(k)]);
      const double v = std::clamp(field[i] - step(k), 0.0, 1.0);
      moved = std::max(moved, std::abs(v - field[i]));
      field[i] = v;
    }
    if (moved <= tol && residual(r) <= tol) return true;
  }
  return false;
}

}  // namespace

CostKind CostKind::scalarized(double alpha, double eps) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return {CostType::Scalarized, alpha, eps};
}

double CostKind::stage(const Control& u) const {
  switch (type) {
    case CostType::Time:
      return 1.0;
    case CostType::Energy:
      return epsilon + u.squaredNorm();
    case CostType::Scalarized:
      return alpha + (1.0 - alpha) * (epsilon + u.squaredNorm());
  }
  return 1.0;
}

double running_cost_g(const CostKind& cost, bool start_at_goal, bool end_at_goal, const Control& u,
                      double dt) {
  const double l = cost.stage(u);
  return 0.5 * dt * ((start_at_goal ? 0.0 : l) + (end_at_goal ? 0.0 : l));
}

double step_value(TransformKind kind, double next, double g) {
  if (kind == TransformKind::Harmonic) {
    // 1 - 1/(1/(1 - I) + g): each operation is monotone in I, and I = 1 gives 1.
    return std::clamp(1.0 - 1.0 / (1.0 / (1.0 - next) + g), 0.0, 1.0);
  }
  return std::clamp(1.0 - (1.0 - next) * std::exp(-g), 0.0, 1.0);
}

Problem::Problem(const SimplicialGrid& grid, const DynamicsModel& model, const ObstacleSet& obstacles,
                 const ControlSet& controls, double dt, State goal, TransformKind transform)
    : grid_(&grid),
      model_(&model),
      obstacles_(&obstacles),
      controls_(&controls),
      dt_(dt),
      goal_(std::move(goal)),
      transform_(transform) {
  if (!(dt_ > 0.0)) throw ConfigError("dt must be positive");
  if (model.state_dim() != grid.dim()) throw ConfigError("model and grid dimensions differ");
  if (controls.dim() != model.control_dim()) throw ConfigError("control set and model control dimensions differ");
  if (goal_.size() != model.spatial_dim() && goal_.size() != model.state_dim())
    throw ConfigError("goal dimension does not match the model");
}

bool Problem::at_goal(const State& x) const {
  const auto n = goal_.size();
  return (x.head(n) - goal_).norm() <= 1e-12 * (1.0 + goal_.norm());
}

Field Problem::initial_field() const {
  Field f(grid_->size(), 1.0);
  apply_pins(f);
  return f;
}

void Problem::apply_pins(Field& field) const {
  for (std::size_t i = 0; i < field.size(); ++i)
    if (grid_->is_obstacle(i)) field[i] = 1.0;
  for (int g : grid_->goal_indices()) field[static_cast<std::size_t>(g)] = 0.0;
}

Transition make_transition(const Problem& problem, std::size_t point, const Control& u) {
  Transition t;
  const StepResult step = trapezoid_step(problem.model(), problem.grid().point(point), u, problem.dt());
  t.approximate = step.approximate;
  t.goal_end = problem.at_goal(step.state);
  if (!t.goal_end && problem.obstacles().contains(step.state)) return t;
  const auto st = problem.grid().locate(step.state);
  if (!st) return t;
  t.count = static_cast<std::int8_t>(st->count);
  t.index = st->index;
  t.weight = st->weight;
  return t;
}

TransitionTable build_transitions(const Problem& problem, std::vector<Control> controls) {
  if (controls.empty()) throw ConfigError("empty control list");
  TransitionTable table;
  table.controls = std::move(controls);
  table.n_points = problem.grid().size();
  const std::size_t n_c = table.controls.size();
  table.entries.resize(table.n_points * n_c);
  const long n = static_cast<long>(table.n_points);
#pragma omp parallel for num_threads(thread_count()) schedule(dynamic, 16)
  for (long i = 0; i < n; ++i)
    for (std::size_t c = 0; c < n_c; ++c)
      table.entries[static_cast<std::size_t>(i) * n_c + c] =
          make_transition(problem, static_cast<std::size_t>(i), table.controls[c]);
  return table;
}

PolicyField PolicyField::from_indices(const std::vector<Control>& table, std::vector<int> index) {
  PolicyField p;
  p.controls.reserve(index.size());
  for (int k : index) p.controls.push_back(table.at(static_cast<std::size_t>(k)));
  p.index = std::move(index);
  return p;
}

BellmanResult bellman_update(const Problem& problem, const TransitionTable& table, const CostKind& cost,
                             const Field& field) {
  if (table.controls.empty()) throw ConfigError("empty control list");
  const auto& grid = problem.grid();
  const std::size_t n_c = table.n_controls();
  std::vector<double> stage(n_c);
  for (std::size_t c = 0; c < n_c; ++c) stage[c] = cost.stage(table.controls[c]);

  BellmanResult out{field, {}};
  std::vector<int> argmin(grid.size(), 0);
  const long n = static_cast<long>(grid.size());
  const double half_dt = 0.5 * problem.dt();
  const TransformKind kind = problem.transform();
#pragma omp parallel for num_threads(thread_count()) schedule(static)
  for (long li = 0; li < n; ++li) {
    const auto i = static_cast<std::size_t>(li);
    const double start = grid.is_goal(i) ? 0.0 : 1.0;
    double best = kInf;
    int best_c = 0;
    for (std::size_t c = 0; c < n_c; ++c) {
      const Transition& t = table.at(i, c);
      const double g = half_dt * stage[c] * (start + (t.goal_end ? 0.0 : 1.0));
      const double q = step_value(kind, gather(t, field), g);
      if (q < best) {
        best = q;
        best_c = static_cast<int>(c);
      }
    }
    argmin[i] = best_c;
    if (!problem.pinned(i)) out.values[i] = best;
  }
  problem.apply_pins(out.values);
  out.policy = PolicyField::from_indices(table.controls, std::move(argmin));
  return out;
}

SolveResult value_iteration(const Problem& problem, const TransitionTable& table, const CostKind& cost,
                            const SolveOptions& options) {
  if (table.controls.empty()) throw ConfigError("empty control list");
  const std::size_t n_c = table.n_controls();
  std::vector<double> stage(n_c);
  for (std::size_t c = 0; c < n_c; ++c) stage[c] = cost.stage(table.controls[c]);
  const double half_dt = 0.5 * problem.dt();
  const TransformKind kind = problem.transform();

  SolveResult result;
  result.values = problem.initial_field();
  auto update = [&](std::size_t i, const Field& field) {
    double best = kInf;
    for (std::size_t c = 0; c < n_c; ++c) {
      const Transition& t = table.at(i, c);
      const double g = half_dt * stage[c] * (1.0 + (t.goal_end ? 0.0 : 1.0));
      best = std::min(best, step_value(kind, gather(t, field), g));
    }
    return best;
  };
  const auto [sweeps, converged] = iterate_to_fixed_point(problem, result.values, options, false, update);
  result.iterations = sweeps;
  result.converged = converged;
  result.policy = bellman_update(problem, table, cost, result.values).policy;
  return result;
}

std::vector<Transition> policy_transitions(const Problem& problem, const PolicyField& policy) {
  const std::size_t n = problem.grid().size();
  if (policy.size() != n) throw std::invalid_argument("policy size does not match the grid");
  std::vector<Transition> out(n);
  const long ln = static_cast<long>(n);
#pragma omp parallel for num_threads(thread_count()) schedule(dynamic, 16)
  for (long i = 0; i < ln; ++i)
    out[static_cast<std::size_t>(i)] =
        make_transition(problem, static_cast<std::size_t>(i), policy.controls[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Transition> policy_transitions(const TransitionTable& table, const PolicyField& policy) {
  if (policy.index.size() != table.n_points) throw std::invalid_argument("policy size does not match the table");
  std::vector<Transition> out(table.n_points);
  for (std::size_t i = 0; i < table.n_points; ++i) {
    const int c = policy.index[i];
    if (c < 0 || static_cast<std::size_t>(c) >= table.n_controls())
      throw std::invalid_argument("policy control is not in the transition table");
    out[i] = table.at(i, static_cast<std::size_t>(c));
  }
  return out;
}

EvaluationResult policy_evaluation(const Problem& problem, const std::vector<Transition>& transitions,
                                   const PolicyField& policy, const CostKind& cost,
                                   const SolveOptions& options) {
  const auto& grid = problem.grid();
  if (transitions.size() != grid.size() || policy.size() != grid.size())
    throw std::invalid_argument("policy_evaluation: size mismatch");
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    g[i] = running_cost_g(cost, grid.is_goal(i), transitions[i].goal_end, policy.controls[i], problem.dt());
  const TransformKind kind = problem.transform();

  EvaluationResult result;
  result.values = problem.initial_field();
  auto update = [&](std::size_t i, const Field& field) {
    return step_value(kind, gather(transitions[i], field), g[i]);
  };
  bool positive_cost = true;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!problem.pinned(i) && !(g[i] > 0.0)) positive_cost = false;
  const std::vector<char> absorbing =
      positive_cost ? unreachable_points(problem, transitions) : std::vector<char>(grid.size(), 0);
  SolveOptions first = options;
  first.max_sweeps = std::min(options.max_sweeps, std::max(options.newton_after, 1));
  auto [sweeps, converged] = iterate_to_fixed_point(problem, result.values, first, true, update, &absorbing);
  if (!converged) {
    std::vector<long> free;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (!problem.pinned(i) && !absorbing[i]) free.push_back(static_cast<long>(i));
    converged = newton_evaluation(problem, transitions, g, free, result.values, options.tol);
  }
  if (!converged && sweeps < options.max_sweeps) {
    SolveOptions rest = options;
    rest.max_sweeps = options.max_sweeps - sweeps;
    const auto [more, done] = iterate_to_fixed_point(problem, result.values, rest, true, update, &absorbing);
    sweeps += more;
    converged = done;
  }
  result.sweeps = sweeps;
  result.converged = converged;
  return result;
}

Improvement improve_policy(const Problem& problem, const TransitionTable& table, const CostKind& cost,
                           const Field& target, const PolicyField& incumbent, double keep_margin) {
  const auto& grid = problem.grid();
  const std::size_t n_c = table.n_controls();
  if (incumbent.index.size() != grid.size()) throw std::invalid_argument("improve_policy: size mismatch");
  std::vector<double> stage(n_c);
  for (std::size_t c = 0; c < n_c; ++c) stage[c] = cost.stage(table.controls[c]);
  const double half_dt = 0.5 * problem.dt();
  const TransformKind kind = problem.transform();

  std::vector<int> chosen(grid.size());
  std::size_t changed = 0;
  const long n = static_cast<long>(grid.size());
#pragma omp parallel for num_threads(thread_count()) schedule(static) reduction(+ : changed)
  for (long li = 0; li < n; ++li) {
    const auto i = static_cast<std::size_t>(li);
    const double start = grid.is_goal(i) ? 0.0 : 1.0;
    double best = kInf;
    int best_c = 0;
    double current = kInf;
    const int inc = incumbent.index[i];
    for (std::size_t c = 0; c < n_c; ++c) {
      const Transition& t = table.at(i, c);
      const double g = half_dt * stage[c] * (start + (t.goal_end ? 0.0 : 1.0));
      const double q = step_value(kind, gather(t, target), g);
      if (q < best) {
        best = q;
        best_c = static_cast<int>(c);
      }
      if (static_cast<int>(c) == inc) current = q;
    }
    const int pick = (inc >= 0 && !(best < current - keep_margin)) ? inc : best_c;
    chosen[i] = pick;
    if (pick != inc) ++changed;
  }
  return {PolicyField::from_indices(table.controls, std::move(chosen)), changed};
}

SolveResult policy_iteration(const Problem& problem, const TransitionTable& table, const CostKind& cost,
                             int max_iters, const SolveOptions& options) {
  if (table.controls.empty()) throw ConfigError("empty control list");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  const int zero = zero_control_index(table.controls);
  SolveResult result;
  result.policy = PolicyField::from_indices(table.controls, std::vector<int>(problem.grid().size(), zero));
  for (int it = 1; it <= max_iters; ++it) {
    const EvaluationResult eval =
        policy_evaluation(problem, policy_transitions(table, result.policy), result.policy, cost, options);
    result.values = eval.values;
    result.iterations = it;
    Improvement imp = improve_policy(problem, table, cost, eval.values, result.policy, options.tol);
    if (imp.changed == 0) {
      result.converged = eval.converged;
      return result;
    }
    if (it == max_iters) break;
    result.policy = std::move(imp.policy);
  }
  result.converged = false;
  return result;
}

std::vector<double> recover_value(const Field& field, TransformKind kind) {
  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = transform_inverse(kind, field[i]);
  return out;
}

double field_mean(const SimplicialGrid& grid, const Field& field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (grid.is_obstacle(i)) continue;
    sum += field[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace flowplan
