#pragma once

#include "flowplan/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowplan {

/// Box of admissible controls with an optional lattice discretization.
struct ControlSet {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> counts;  // empty when only the continuous box is needed

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
  Control clamp(const Control& u) const;
  Control half_range() const;
  bool contains(const Control& u, double tol = 0.0) const;
  bool operator==(const ControlSet&) const = default;
};

/// Lattice product of the per-axis counts, axis 0 varying slowest. A count of
/// 1 yields the midpoint of that axis.
std::vector<Control> enumerate_controls(const ControlSet& set);
/// Index of the enumerated control with the smallest norm (lowest index on ties).
int zero_control_index(const std::vector<Control>& controls);

/// Named builtin parameters: scalars are one-element vectors, matrices are
/// flattened row-major.
using FlowParams = std::map<std::string, std::vector<double>>;

/// x' = f1(x) + F2(x) u. For time-augmented models the last state coordinate
/// is time; it advances at unit rate and wraps modulo the period.
class DynamicsModel {
 public:
  using FlowFn = std::function<State(const State& x, double t)>;
  using SteeringFn = std::function<SmallMatrix(const State& x)>;

  DynamicsModel(int state_dim, int control_dim, FlowFn flow, SteeringFn steering,
                std::optional<double> natural_period = std::nullopt);

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  /// Spatial dimension (state_dim minus the time coordinate when augmented).
  int spatial_dim() const { return augmented_ ? state_dim_ - 1 : state_dim_; }
  bool augmented() const { return augmented_; }
  /// Wrap period of the time coordinate (augmented models only).
  std::optional<double> period() const { return augmented_ ? period_ : std::nullopt; }
  /// Period of the underlying time-varying flow, if any.
  std::optional<double> natural_period() const { return period_; }

  State flow(const State& x) const;
  SmallMatrix steering(const State& x) const;
  State rhs(const State& x, const Control& u) const;
  State wrap(const State& x) const;

  friend DynamicsModel augment_time(const DynamicsModel& model, double period);

 private:
  int state_dim_;
  int control_dim_;
  FlowFn flow_;
  SteeringFn steering_;
  std::optional<double> period_;
  bool augmented_ = false;
};

/// Appends t' = 1 with a zero steering row; t wraps modulo `period`.
DynamicsModel augment_time(const DynamicsModel& model, double period);

struct StepResult {
  State state;
  bool approximate = false;  // implicit solve failed, Heun step used instead
};

/// Implicit trapezoid step solved by fixed-point iteration from an Euler seed.
StepResult trapezoid_step(const DynamicsModel& model, const State& x, const Control& u, double dt);

/// Builtin flows: zero, linear, vortex, lamb_sum, double_gyre. Missing
/// parameters take their defaults; unknown names or keys raise ConfigError.
DynamicsModel builtin_flow(const std::string& name, const FlowParams& params = {});
/// Parameter table with every default filled in.
FlowParams builtin_flow_defaults(const std::string& name);
const std::vector<std::string>& builtin_flow_names();

}  // namespace flowplan
