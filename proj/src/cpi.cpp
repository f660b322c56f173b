#include "flowplan/cpi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace flowplan {

void CpiConfig::validate() const {
  if (alphas.empty()) throw ConfigError("cpi: at least one alpha is required");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] <= 1.0)) throw ConfigError("cpi: alphas must lie in (0, 1]");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ConfigError("cpi: alphas must be strictly ascending");
  }
  if (!(epsilon > 0.0)) throw ConfigError("cpi: epsilon must be positive");
  if (!(tol > 0.0)) throw ConfigError("cpi: tol must be positive");
  if (max_iters < 1) throw ConfigError("cpi: max_iters must be at least 1");
}

std::vector<double> log_spaced_alphas(int n, double lo, double hi) {
  if (n < 2) throw ConfigError("log_spaced_alphas: n must be at least 2");
  if (!(lo > 0.0 && lo < hi && hi <= 1.0)) throw ConfigError("log_spaced_alphas: need 0 < lo < hi <= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

Field best_current_value(const std::vector<Field>& time, const std::vector<Field>& energy, double alpha) {
  if (time.empty() || time.size() != energy.size())
    throw std::invalid_argument("best_current_value: need matching, non-empty field lists");
  Field out(time.front().size(), std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < time.size(); ++s) {
    if (time[s].size() != out.size() || energy[s].size() != out.size())
      throw std::invalid_argument("best_current_value: field sizes differ");
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = std::min(out[i], harmonic_convex(time[s][i], energy[s][i], alpha));
  }
  return out;
}

double scalarized_objective(const SimplicialGrid& grid, const Field& time, const Field& energy, double alpha) {
  Field mix(time.size());
  for (std::size_t i = 0; i < time.size(); ++i) mix[i] = harmonic_convex(time[i], energy[i], alpha);
  return field_mean(grid, mix);
}

CpiSolution run_cpi(const Problem& problem, const TransitionTable& table, const CpiConfig& config) {
  config.validate();
  const auto& grid = problem.grid();
  const std::size_t n_p = config.alphas.size();
  const SolveOptions options{config.tol, config.max_sweeps};
  const CostKind time_cost = CostKind::time();
  const CostKind energy_cost = CostKind::energy(config.epsilon);

  CpiSolution sol;
  sol.members.resize(n_p);
  const int zero = zero_control_index(table.controls);
  std::vector<char> evaluations_converged(n_p, 1);

  // Evaluates the policy of `base`; the flag reports whether both solves converged.
  auto evaluate = [&](const CpiMember& base) {
    CpiMember m = base;
    const auto transitions = policy_transitions(table, m.policy);
    const auto t = policy_evaluation(problem, transitions, m.policy, time_cost, options);
    const auto e = policy_evaluation(problem, transitions, m.policy, energy_cost, options);
    m.time = t.values;
    m.energy = e.values;
    m.avg_time = field_mean(grid, m.time);
    m.avg_energy = field_mean(grid, m.energy);
    sol.evaluations += 2;
    return std::make_pair(std::move(m), t.converged && e.converged);
  };

  for (std::size_t i = 0; i < n_p; ++i) {
    CpiMember m;
    m.alpha = config.alphas[i];
    m.policy = PolicyField::from_indices(table.controls, std::vector<int>(grid.size(), zero));
    auto [member, ok] = evaluate(m);
    sol.members[i] = std::move(member);
    evaluations_converged[i] = ok;
    sol.members[i].history.push_back(scalarized_objective(grid, sol.members[i].time, sol.members[i].energy, m.alpha));
  }

  std::vector<Field> time(n_p), energy(n_p);
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    sol.iterations = iter;
    for (std::size_t s = 0; s < n_p; ++s) {
      time[s] = sol.members[s].time;
      energy[s] = sol.members[s].energy;
    }
    // Every weight improves against the same snapshot of the population.
    std::vector<Improvement> improved;
    improved.reserve(n_p);
    for (std::size_t i = 0; i < n_p; ++i) {
      const double alpha = config.alphas[i];
      const Field target = best_current_value(time, energy, alpha);
      improved.push_back(improve_policy(problem, table, CostKind::scalarized(alpha, config.epsilon), target,
                                        sol.members[i].policy, config.tol));
    }
    // The combined time/energy value only approximates the scalarized value
    // on the grid, so a greedy step can be slightly worse. Such steps are
    // rejected, which keeps every member's objective nonincreasing.
    bool any_accepted = false;
    for (std::size_t i = 0; i < n_p; ++i) {
      CpiMember& current = sol.members[i];
      bool accepted = false;
      if (improved[i].changed != 0) {
        CpiMember proposal = current;
        proposal.policy = std::move(improved[i].policy);
        auto [candidate, ok] = evaluate(proposal);
        const double objective = scalarized_objective(grid, candidate.time, candidate.energy, current.alpha);
        if (objective <= current.history.back()) {
          candidate.history.push_back(objective);
          current = std::move(candidate);
          evaluations_converged[i] = ok;
          accepted = true;
        }
      } else {
        sol.evaluations += 2;  // unchanged policy: its fields are reused
      }
      if (!accepted) current.history.push_back(current.history.back());
      current.converged = !accepted;
      any_accepted = any_accepted || accepted;
    }
    if (!any_accepted) {
      sol.converged = true;
      break;
    }
  }
  for (std::size_t i = 0; i < n_p; ++i) {
    sol.members[i].converged = sol.members[i].converged && evaluations_converged[i];
    sol.converged = sol.converged && evaluations_converged[i];
  }
  return sol;
}

}  // namespace flowplan
