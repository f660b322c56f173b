#pragma once

#include "flowplan/nsga.hpp"
#include "flowplan/sl_core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace flowplan {

struct MepiConfig {
  int population = 20;
  int generations = 60;
  int n_cp = 15;   // offspring produced by policy switching
  int n_par = 3;   // parents per policy-switching offspring
  double sigma = 0.2;
  std::uint64_t seed = 1;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTol;
  int max_sweeps = 200000;
  int extra_per_axis = 5;  // lattice of extra candidates for the random-weight elite

  void validate() const;
};

struct Individual {
  PolicyField policy;
  Field time;
  Field energy;
  Objectives objectives{1.0, 1.0};
  int rank = 0;
  double crowding = 0.0;
};

struct ProgressRow {
  int generation = 0;
  double best_time = 1.0;
  double median_time = 1.0;
  double best_energy = 1.0;
  double median_energy = 1.0;
  std::size_t front_size = 0;
};

struct MepiResult {
  std::vector<Individual> population;
  std::vector<std::size_t> archive;  // rank-0 members of the final population
  std::vector<ProgressRow> progress;
  bool evaluations_converged = true;
};

/// Per point: the candidate control (subset controls in order, then `extras`)
/// minimizing the one-step value against min_s harmonic_convex(time_s, energy_s, alpha).
PolicyField policy_switching(const Problem& problem, const std::vector<const Individual*>& subset,
                             double alpha, const std::vector<Control>& extras, double epsilon);

/// Pointwise lambda * a + (1 - lambda) * b.
PolicyField simple_crossover(const PolicyField& a, const PolicyField& b, double lambda);

/// Adds N(0, (sigma * half range)^2) per axis, then clamps to the box.
PolicyField gaussian_mutation(const PolicyField& policy, double sigma, const ControlSet& box,
                              std::mt19937_64& rng);

/// Uniform random control at every point.
PolicyField random_policy(std::size_t n_points, const ControlSet& box, std::mt19937_64& rng);

/// Evaluates time and energy fields and the averaged objectives.
bool evaluate_individual(const Problem& problem, Individual& individual, double epsilon,
                         const SolveOptions& options);

/// Assigns rank and per-front crowding distance to every member.
void assign_rank_and_crowding(std::vector<Individual>& population);

MepiResult run_mepi(const Problem& problem, const MepiConfig& config);

}  // namespace flowplan
