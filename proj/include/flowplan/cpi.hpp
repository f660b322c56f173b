#pragma once

#include "flowplan/sl_core.hpp"

#include <vector>

namespace flowplan {

struct CpiConfig {
  std::vector<double> alphas;  // ascending, in (0, 1], distinct
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTol;
  int max_iters = 30;
  int max_sweeps = 200000;

  void validate() const;
};

/// Geometric progression from lo to hi inclusive.
std::vector<double> log_spaced_alphas(int n, double lo, double hi);

/// Pointwise min over s of harmonic_convex(time[s], energy[s], alpha).
Field best_current_value(const std::vector<Field>& time, const std::vector<Field>& energy, double alpha);

struct CpiMember {
  double alpha = 1.0;
  PolicyField policy;
  Field time;
  Field energy;
  double avg_time = 1.0;
  double avg_energy = 1.0;
  bool converged = false;  // no change accepted in the final sweep
  /// Scalarized objective mean(harmonic_convex(time, energy, alpha)) after
  /// the initial evaluation and after every sweep.
  std::vector<double> history;
};

struct CpiSolution {
  std::vector<CpiMember> members;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Concurrent policy iteration: one policy per weight, each improved against
/// the best value any member achieves for that weight. Every sweep accounts
/// for 2 * alphas.size() policy evaluations; a member whose policy did not
/// change reuses its fields. An improved policy whose scalarized objective
/// would rise is rejected, and the run converges once a sweep accepts none.
CpiSolution run_cpi(const Problem& problem, const TransitionTable& table, const CpiConfig& config);

double scalarized_objective(const SimplicialGrid& grid, const Field& time, const Field& energy, double alpha);

}  // namespace flowplan
