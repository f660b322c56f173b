#include "flowplan/mepi.hpp"

#include "flowplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace flowplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// (lower rank, then larger crowding, then lower index) wins.
std::size_t tournament(const std::vector<Individual>& pop, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  const std::size_t a = pick(rng);
  const std::size_t b = pick(rng);
  const auto& x = pop[a];
  const auto& y = pop[b];
  if (x.rank != y.rank) return x.rank < y.rank ? a : b;
  if (x.crowding != y.crowding) return x.crowding > y.crowding ? a : b;
  return std::min(a, b);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ProgressRow progress_row(int generation, const std::vector<Individual>& pop) {
  std::vector<double> t, e;
  std::size_t front = 0;
  for (const auto& ind : pop) {
    t.push_back(ind.objectives.first);
    e.push_back(ind.objectives.second);
    if (ind.rank == 0) ++front;
  }
  return {generation, *std::min_element(t.begin(), t.end()), median(t), *std::min_element(e.begin(), e.end()),
          median(e), front};
}

// Fills the last slots from the split front: members with infinite crowding
// first (they hold the per-objective extremes), then a crowding-weighted
// roulette without replacement.
std::vector<std::size_t> select_survivors(const std::vector<Individual>& pool, std::size_t n,
                                          std::mt19937_64& rng) {
  std::vector<Objectives> objs;
  for (const auto& ind : pool) objs.push_back(ind.objectives);
  const auto rank = fast_non_dominated_sort(objs);
  const int levels = rank.empty() ? 0 : *std::max_element(rank.begin(), rank.end()) + 1;
  std::vector<std::size_t> chosen;
  for (int level = 0; level < levels && chosen.size() < n; ++level) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (rank[i] == level) front.push_back(i);
    if (chosen.size() + front.size() <= n) {
      chosen.insert(chosen.end(), front.begin(), front.end());
      continue;
    }
    std::vector<Objectives> front_objs;
    for (std::size_t i : front) front_objs.push_back(objs[i]);
    const auto crowd = crowding_distance(front_objs);
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < front.size(); ++k) {
      if (std::isinf(crowd[k]) && chosen.size() < n)
        chosen.push_back(front[k]);
      else
        rest.push_back(k);
    }
    double max_finite = 0.0;
    for (double c : crowd)
      if (!std::isinf(c)) max_finite = std::max(max_finite, c);
    const double inf_weight = max_finite > 0.0 ? 2.0 * max_finite : 1.0;
    while (chosen.size() < n) {
      std::vector<double> w;
      double total = 0.0;
      for (std::size_t k : rest) {
        w.push_back(std::isinf(crowd[k]) ? inf_weight : crowd[k]);
        total += w.back();
      }
      if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0);
        total = static_cast<double>(w.size());
      }
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      std::size_t pick = rest.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < rest.size(); ++j) {
        acc += w[j];
        if (r < acc) {
          pick = j;
          break;
        }
      }
      chosen.push_back(front[rest[pick]]);
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  return chosen;
}

}  // namespace

void MepiConfig::validate() const {
  if (population < 4) throw ConfigError("mepi: population must be at least 4");
  if (generations < 0) throw ConfigError("mepi: generations must be nonnegative");
  if (n_cp < 0 || n_cp + 3 > population) throw ConfigError("mepi: need 0 <= n_cp and n_cp + 3 <= population");
  if (n_par < 2) throw ConfigError("mepi: n_par must be at least 2");
  if (!(sigma >= 0.0)) throw ConfigError("mepi: sigma must be nonnegative");
  if (!(epsilon > 0.0)) throw ConfigError("mepi: epsilon must be positive");
  if (!(tol > 0.0)) throw ConfigError("mepi: tol must be positive");
  if (extra_per_axis < 1) throw ConfigError("mepi: extra_per_axis must be positive");
}

PolicyField policy_switching(const Problem& problem, const std::vector<const Individual*>& subset,
                             double alpha, const std::vector<Control>& extras, double epsilon) {
  if (subset.empty()) throw std::invalid_argument("policy_switching: empty subset");
  const auto& grid = problem.grid();
  const std::size_t n = grid.size();
  Field target(n, kInf);
  for (const Individual* ind : subset)
    for (std::size_t i = 0; i < n; ++i)
      target[i] = std::min(target[i], harmonic_convex(ind->time[i], ind->energy[i], alpha));
  const CostKind cost = CostKind::scalarized(alpha, epsilon);
  const TransformKind kind = problem.transform();

  PolicyField out;
  out.controls.resize(n);
  out.index.assign(n, -1);
  const long ln = static_cast<long>(n);
#pragma omp parallel for num_threads(thread_count()) schedule(dynamic, 16)
  for (long li = 0; li < ln; ++li) {
    const auto i = static_cast<std::size_t>(li);
    double best = kInf;
    const Control* pick = nullptr;
    auto consider = [&](const Control& u) {
      const Transition t = make_transition(problem, i, u);
      const double g = running_cost_g(cost, grid.is_goal(i), t.goal_end, u, problem.dt());
      const double q = step_value(kind, gather(t, target), g);
      if (q < best) {
        best = q;
        pick = &u;
      }
    };
    for (const Individual* ind : subset) consider(ind->policy.controls[i]);
    for (const Control& u : extras) consider(u);
    out.controls[i] = *pick;
  }
  return out;
}

PolicyField simple_crossover(const PolicyField& a, const PolicyField& b, double lambda) {
  if (a.size() != b.size()) throw std::invalid_argument("simple_crossover: policies differ in size");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("simple_crossover: lambda outside [0, 1]");
  PolicyField out;
  out.controls.resize(a.size());
  out.index.assign(a.size(), -1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (lambda == 1.0)
      out.controls[i] = a.controls[i];
    else if (lambda == 0.0)
      out.controls[i] = b.controls[i];
    else
      out.controls[i] = lambda * a.controls[i] + (1.0 - lambda) * b.controls[i];
  }
  return out;
}

PolicyField gaussian_mutation(const PolicyField& policy, double sigma, const ControlSet& box,
                              std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_mutation: sigma must be nonnegative");
  PolicyField out = policy;
  std::fill(out.index.begin(), out.index.end(), -1);
  if (sigma == 0.0) return out;
  const Control half = box.half_range();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& u : out.controls) {
    for (int k = 0; k < box.dim(); ++k) u(k) += sigma * half(k) * normal(rng);
    u = box.clamp(u);
  }
  return out;
}

PolicyField random_policy(std::size_t n_points, const ControlSet& box, std::mt19937_64& rng) {
  PolicyField out;
  out.controls.reserve(n_points);
  out.index.assign(n_points, -1);
  for (std::size_t i = 0; i < n_points; ++i) {
    Control u(box.dim());
    for (int k = 0; k < box.dim(); ++k)
      u(k) = std::uniform_real_distribution<double>(box.lo[k], box.hi[k])(rng);
    out.controls.push_back(u);
  }
  return out;
}

bool evaluate_individual(const Problem& problem, Individual& individual, double epsilon,
                         const SolveOptions& options) {
  const auto transitions = policy_transitions(problem, individual.policy);
  const auto t = policy_evaluation(problem, transitions, individual.policy, CostKind::time(), options);
  const auto e = policy_evaluation(problem, transitions, individual.policy, CostKind::energy(epsilon), options);
  individual.time = t.values;
  individual.energy = e.values;
  individual.objectives = {field_mean(problem.grid(), individual.time), field_mean(problem.grid(), individual.energy)};
  return t.converged && e.converged;
}

void assign_rank_and_crowding(std::vector<Individual>& population) {
  std::vector<Objectives> objs;
  for (const auto& ind : population) objs.push_back(ind.objectives);
  const auto rank = fast_non_dominated_sort(objs);
  const int levels = rank.empty() ? 0 : *std::max_element(rank.begin(), rank.end()) + 1;
  for (int level = 0; level < levels; ++level) {
    std::vector<std::size_t> members;
    std::vector<Objectives> front;
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (rank[i] != level) continue;
      members.push_back(i);
      front.push_back(objs[i]);
    }
    const auto crowd = crowding_distance(front);
    for (std::size_t k = 0; k < members.size(); ++k) {
      population[members[k]].rank = level;
      population[members[k]].crowding = crowd[k];
    }
  }
}

MepiResult run_mepi(const Problem& problem, const MepiConfig& config) {
  config.validate();
  const auto& box = problem.controls();
  const std::size_t n_points = problem.grid().size();
  const auto pop_size = static_cast<std::size_t>(config.population);
  const SolveOptions options{config.tol, config.max_sweeps};

  ControlSet lattice = box;
  lattice.counts.assign(static_cast<std::size_t>(box.dim()), config.extra_per_axis);
  const std::vector<Control> extras = enumerate_controls(lattice);

  std::mt19937_64 rng(config.seed);
  MepiResult result;
  std::vector<Individual>& pop = result.population;
  pop.resize(pop_size);
  for (auto& ind : pop) ind.policy = random_policy(n_points, box, rng);
  for (auto& ind : pop)
    result.evaluations_converged = evaluate_individual(problem, ind, config.epsilon, options) && result.evaluations_converged;
  assign_rank_and_crowding(pop);
  result.progress.push_back(progress_row(0, pop));

  std::vector<const Individual*> everyone;
  for (int gen = 1; gen <= config.generations; ++gen) {
    everyone.clear();
    for (const auto& ind : pop) everyone.push_back(&ind);

    std::vector<Individual> offspring(pop_size);
    const double elite_alpha = uniform01(rng);
    offspring[0].policy = policy_switching(problem, everyone, 1.0, {}, config.epsilon);
    offspring[1].policy = policy_switching(problem, everyone, 0.0, {}, config.epsilon);
    offspring[2].policy = policy_switching(problem, everyone, elite_alpha, extras, config.epsilon);

    std::size_t next = 3;
    for (int j = 0; j < config.n_cp; ++j, ++next) {
      std::vector<const Individual*> parents;
      for (int k = 0; k < config.n_par; ++k) parents.push_back(&pop[tournament(pop, rng)]);
      const double alpha = uniform01(rng);
      offspring[next].policy = policy_switching(problem, parents, alpha, {}, config.epsilon);
    }
    for (; next < pop_size; ++next) {
      const std::size_t a = tournament(pop, rng);
      const std::size_t b = tournament(pop, rng);
      const double lambda = uniform01(rng);
      offspring[next].policy = simple_crossover(pop[a].policy, pop[b].policy, lambda);
    }
    for (std::size_t k = 3; k < pop_size; ++k)
      offspring[k].policy = gaussian_mutation(offspring[k].policy, config.sigma, box, rng);

    for (auto& ind : offspring)
      result.evaluations_converged = evaluate_individual(problem, ind, config.epsilon, options) && result.evaluations_converged;

    std::vector<Individual> pool = std::move(pop);
    for (auto& ind : offspring) pool.push_back(std::move(ind));
    const auto survivors = select_survivors(pool, pop_size, rng);
    std::vector<Individual> next_pop;
    next_pop.reserve(pop_size);
    for (std::size_t i : survivors) next_pop.push_back(std::move(pool[i]));
    pop = std::move(next_pop);
    assign_rank_and_crowding(pop);
    result.progress.push_back(progress_row(gen, pop));
  }

  for (std::size_t i = 0; i < pop.size(); ++i)
    if (pop[i].rank == 0) result.archive.push_back(i);
  return result;
}

}  // namespace flowplan
