#pragma once

#include "flowplan/dynamics.hpp"
#include "flowplan/grid.hpp"
#include "flowplan/obstacles.hpp"
#include "flowplan/transform.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace flowplan {

using Field = std::vector<double>;

inline constexpr double kDefaultTol = 1e-8;
inline constexpr double kDefaultEpsilon = 0.01;

enum class CostType { Time, Energy, Scalarized };

/// Running cost: time (1), energy (eps + |u|^2) or alpha * time + (1 - alpha) * energy.
/// Every variant is zero at the goal.
struct CostKind {
  CostType type = CostType::Time;
  double alpha = 1.0;
  double epsilon = kDefaultEpsilon;

  static CostKind time() { return {CostType::Time, 1.0, kDefaultEpsilon}; }
  static CostKind energy(double eps = kDefaultEpsilon) { return {CostType::Energy, 0.0, eps}; }
  static CostKind scalarized(double alpha, double eps = kDefaultEpsilon);

  /// Off-goal running cost for control u.
  double stage(const Control& u) const;
};

/// Trapezoidal cost over one step: dt/2 * (l(x_k) + l(x_k+1)).
double running_cost_g(const CostKind& cost, bool start_at_goal, bool end_at_goal, const Control& u,
                      double dt);

/// Immutable bundle describing one discretized control problem.
class Problem {
 public:
  Problem(const SimplicialGrid& grid, const DynamicsModel& model, const ObstacleSet& obstacles,
          const ControlSet& controls, double dt, State goal,
          TransformKind transform = TransformKind::Harmonic);

  const SimplicialGrid& grid() const { return *grid_; }
  const DynamicsModel& model() const { return *model_; }
  const ObstacleSet& obstacles() const { return *obstacles_; }
  const ControlSet& controls() const { return *controls_; }
  double dt() const { return dt_; }
  const State& goal() const { return goal_; }
  TransformKind transform() const { return transform_; }

  /// True when the spatial part of x coincides with the goal.
  bool at_goal(const State& x) const;
  bool pinned(std::size_t i) const { return grid_->is_goal(i) || grid_->is_obstacle(i); }
  /// Field at its pins: 0 on goal points, 1 everywhere else.
  Field initial_field() const;
  void apply_pins(Field& field) const;

 private:
  const SimplicialGrid* grid_;
  const DynamicsModel* model_;
  const ObstacleSet* obstacles_;
  const ControlSet* controls_;
  double dt_;
  State goal_;
  TransformKind transform_;
};

/// Successor of one grid point under one control, resolved to its stencil.
/// A forbidden successor (outside the domain or hull, or inside an obstacle)
/// has count 0 and value 1.
struct Transition {
  std::array<int, kMaxVertices> index{};
  std::array<double, kMaxVertices> weight{};
  std::int8_t count = 0;
  bool goal_end = false;
  bool approximate = false;
};

Transition make_transition(const Problem& problem, std::size_t point, const Control& u);

inline double gather(const Transition& t, const Field& field) {
  if (t.count == 0) return 1.0;
  double v = 0.0;
  for (int j = 0; j < t.count; ++j) v += t.weight[j] * field[static_cast<std::size_t>(t.index[j])];
  return std::clamp(v, 0.0, 1.0);
}

/// One-step transformed value for interpolated successor value `next` and step cost g.
double step_value(TransformKind kind, double next, double g);

/// Transitions for every (point, enumerated control) pair, row-major by point.
struct TransitionTable {
  std::vector<Control> controls;
  std::vector<Transition> entries;
  std::size_t n_points = 0;

  std::size_t n_controls() const { return controls.size(); }
  const Transition& at(std::size_t point, std::size_t control) const {
    return entries[point * controls.size() + control];
  }
};

TransitionTable build_transitions(const Problem& problem, std::vector<Control> controls);

/// Per-point controls. `index` refers to an enumerated control list, or is -1
/// for controls outside that list (evolutionary offspring).
struct PolicyField {
  std::vector<Control> controls;
  std::vector<int> index;

  std::size_t size() const { return controls.size(); }
  static PolicyField from_indices(const std::vector<Control>& table, std::vector<int> index);
  bool operator==(const PolicyField&) const = default;
};

struct SolveOptions {
  double tol = kDefaultTol;
  int max_sweeps = 200000;
  /// Policy evaluation switches to Newton steps once this many sweeps have
  /// not converged.
  int newton_after = 500;
};

struct BellmanResult {
  Field values;
  PolicyField policy;
};

/// One Jacobi sweep of the transformed semi-Lagrangian operator. Ties go to
/// the lowest control index; pinned points keep their pins but still receive
/// the minimizing control.
BellmanResult bellman_update(const Problem& problem, const TransitionTable& table,
                             const CostKind& cost, const Field& field);

struct SolveResult {
  Field values;
  PolicyField policy;
  int iterations = 0;
  bool converged = false;
};

/// Sweeps from the pessimistic field until the sup-norm change and its
/// geometric tail estimate both fall below tol.
SolveResult value_iteration(const Problem& problem, const TransitionTable& table,
                            const CostKind& cost, const SolveOptions& options = {});

struct EvaluationResult {
  Field values;
  int sweeps = 0;
  bool converged = false;
};

/// Transitions of a fixed policy, one per point.
std::vector<Transition> policy_transitions(const Problem& problem, const PolicyField& policy);
std::vector<Transition> policy_transitions(const TransitionTable& table, const PolicyField& policy);

/// Fixed point of the frozen-policy recursion by damped Jacobi sweeps, with
/// Newton steps for slowly contracting policies. Points that can never reach
/// the goal are set to 1 directly.
EvaluationResult policy_evaluation(const Problem& problem, const std::vector<Transition>& transitions,
                                   const PolicyField& policy, const CostKind& cost,
                                   const SolveOptions& options = {});

struct Improvement {
  PolicyField policy;
  std::size_t changed = 0;
};

/// Greedy policy against `target`. A point keeps its incumbent control unless
/// the best control beats it by more than `keep_margin`.
Improvement improve_policy(const Problem& problem, const TransitionTable& table, const CostKind& cost,
                           const Field& target, const PolicyField& incumbent, double keep_margin);

/// Policy iteration from the zero control; converged once an improvement
/// step changes no point.
SolveResult policy_iteration(const Problem& problem, const TransitionTable& table,
                             const CostKind& cost, int max_iters = 30,
                             const SolveOptions& options = {});

/// Cost-to-go from a transformed field (+inf where the value is 1).
std::vector<double> recover_value(const Field& field, TransformKind kind = TransformKind::Harmonic);

/// Mean over non-obstacle points.
double field_mean(const SimplicialGrid& grid, const Field& field);

}  // namespace flowplan
