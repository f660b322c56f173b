#include "flowplan/cpi.hpp"
#include "flowplan/nsga.hpp"
#include "flowplan/parallel.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowplan;
using testing_support::Gen;

namespace {

struct Bench {
  SimplicialGrid grid;
  DynamicsModel model;
  ObstacleSet obstacles;
  ControlSet controls;
  Problem problem;
  TransitionTable table;

  Bench(SimplicialGrid g, DynamicsModel m, ObstacleSet o, ControlSet c, double dt, State goal)
      : grid(std::move(g)),
        model(std::move(m)),
        obstacles(std::move(o)),
        controls(std::move(c)),
        problem(grid, model, obstacles, controls, dt, std::move(goal)),
        table(build_transitions(problem, enumerate_controls(controls))) {}
  Bench(const Bench&) = delete;
};

// Vortex flow around a wall at toy size.
std::unique_ptr<Bench> vortex(int n) {
  ObstacleSet obs({Polygon{{{-0.3, 0.3}, {-0.15, 0.3}, {-0.1, 1.0}, {-0.25, 1.0}}}});
  auto grid = build_structured_grid({{-1, -1}, {1, 1}}, {n, n}, make_state({-0.5, 0.6}), obs);
  return std::make_unique<Bench>(std::move(grid), builtin_flow("vortex"), obs, ControlSet{{-2, -2}, {2, 2}, {5, 5}},
                                 0.05, make_state({-0.5, 0.6}));
}

// Zero flow, goal in a corner, speeds up to 1.
std::unique_ptr<Bench> toy5() {
  auto grid = build_structured_grid({{0, 0}, {1, 1}}, {5, 5}, make_state({0, 0}), {});
  return std::make_unique<Bench>(std::move(grid), builtin_flow("zero"), ObstacleSet{},
                                 ControlSet{{-1, -1}, {1, 1}, {5, 5}}, 0.25, make_state({0, 0}));
}

CpiConfig config_for(std::vector<double> alphas, int max_iters = 30) {
  CpiConfig c;
  c.alphas = std::move(alphas);
  c.max_iters = max_iters;
  return c;
}

}  // namespace

TEST(LogSpacedAlphas, Examples) {
  const auto three = log_spaced_alphas(3, 0.01, 1.0);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0], 0.01);
  EXPECT_NEAR(three[1], 0.1, 1e-15);
  EXPECT_EQ(three[2], 1.0);
  EXPECT_EQ(log_spaced_alphas(2, 0.01, 1.0), (std::vector<double>{0.01, 1.0}));
  const auto fourteen = log_spaced_alphas(14, 0.01, 1.0);
  ASSERT_EQ(fourteen.size(), 14u);
  const double step = std::pow(100.0, 1.0 / 13.0);
  for (std::size_t i = 1; i < fourteen.size(); ++i) EXPECT_NEAR(fourteen[i] / fourteen[i - 1], step, 1e-12);
}

TEST(LogSpacedAlphas, RejectsBadRanges) {
  EXPECT_THROW(log_spaced_alphas(1, 0.01, 1.0), ConfigError);
  EXPECT_THROW(log_spaced_alphas(3, 0.0, 1.0), ConfigError);
  EXPECT_THROW(log_spaced_alphas(3, 0.5, 0.1), ConfigError);
  EXPECT_THROW(log_spaced_alphas(3, 0.1, 1.5), ConfigError);
}

TEST(CpiConfig, Validation) {
  EXPECT_THROW(config_for({}).validate(), ConfigError);
  EXPECT_THROW(config_for({0.5, 0.2}).validate(), ConfigError);
  EXPECT_THROW(config_for({0.2, 0.2}).validate(), ConfigError);
  EXPECT_THROW(config_for({0.0, 0.5}).validate(), ConfigError);
  EXPECT_THROW(config_for({0.5, 1.1}).validate(), ConfigError);
  EXPECT_NO_THROW(config_for({0.2, 1.0}).validate());
}

TEST(BestCurrentValue, Examples) {
  const Field t1{0.0, 0.3, 0.8, 1.0}, e1{0.0, 0.6, 0.2, 1.0};
  const Field t2{0.0, 0.2, 0.9, 1.0}, e2{0.0, 0.5, 0.3, 1.0};
  const auto single = best_current_value({t1}, {e1}, 0.4);
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(single[i], harmonic_convex(t1[i], e1[i], 0.4));
  const auto pure_time = best_current_value({t1, t2}, {e1, e2}, 1.0);
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(pure_time[i], std::min(t1[i], t2[i]));
  // A pair better in both fields attains the minimum.
  const Field t3{0.0, 0.1, 0.1, 1.0}, e3{0.0, 0.1, 0.1, 1.0};
  const auto dominated = best_current_value({t1, t3}, {e1, e3}, 0.7);
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_EQ(dominated[i], harmonic_convex(t3[i], e3[i], 0.7));
  EXPECT_THROW(best_current_value({}, {}, 0.5), std::invalid_argument);
}

TEST(Cpi, SingleTimeWeightReducesToPolicyIteration) {
  auto b = vortex(15);
  const auto sol = run_cpi(b->problem, b->table, config_for({1.0}));
  const auto pi = policy_iteration(b->problem, b->table, CostKind::time());
  ASSERT_TRUE(sol.converged);
  ASSERT_TRUE(pi.converged);
  EXPECT_EQ(sol.members[0].policy, pi.policy);
  EXPECT_EQ(sol.members[0].time, pi.values);
}

TEST(Cpi, CountsTwoEvaluationsPerWeightPerSweep) {
  auto b = vortex(11);
  const auto sol = run_cpi(b->problem, b->table, config_for(log_spaced_alphas(4, 0.05, 1.0)));
  EXPECT_EQ(sol.evaluations, 2 * 4 * (sol.iterations + 1));
}

TEST(Cpi, NonConvergenceIsFlagged) {
  auto b = vortex(15);
  const auto sol = run_cpi(b->problem, b->table, config_for(log_spaced_alphas(3, 0.05, 1.0), 1));
  EXPECT_FALSE(sol.converged);
  EXPECT_EQ(sol.iterations, 1);
}

TEST(CpiProperty, ScalarizedObjectiveNeverRises) {
  auto b = vortex(15);
  const auto sol = run_cpi(b->problem, b->table, config_for(log_spaced_alphas(6, 0.01, 1.0)));
  EXPECT_TRUE(sol.converged);
  for (const auto& m : sol.members) {
    ASSERT_EQ(m.history.size(), static_cast<std::size_t>(sol.iterations + 1));
    for (std::size_t k = 1; k < m.history.size(); ++k) EXPECT_LE(m.history[k], m.history[k - 1] + 10 * kDefaultTol);
    EXPECT_EQ(m.history.back(), scalarized_objective(b->grid, m.time, m.energy, m.alpha));
    EXPECT_DOUBLE_EQ(m.avg_time, field_mean(b->grid, m.time));
  }
}

TEST(CpiProperty, SharingIsNoWorseThanIsolation) {
  // Isolation: policy iteration on the scalarized cost alone, given as many
  // iterations as the shared run used sweeps.
  for (auto* bench : {vortex(13).release(), toy5().release()}) {
    std::unique_ptr<Bench> b(bench);
    const auto alphas = log_spaced_alphas(5, 0.02, 1.0);
    const auto shared = run_cpi(b->problem, b->table, config_for(alphas));
    ASSERT_TRUE(shared.converged);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      const auto isolated =
          policy_iteration(b->problem, b->table, CostKind::scalarized(alphas[i]), std::max(1, shared.iterations));
      EXPECT_LE(shared.members[i].history.back(), field_mean(b->grid, isolated.values) + 10 * kDefaultTol)
          << "alpha " << alphas[i];
    }
  }
}

TEST(CpiProperty, MatchesScalarizedValueIterationOnToyGrid) {
  // The combined time/energy value of each member should track the value of
  // the scalarized problem solved directly.
  auto b = toy5();
  const auto alphas = log_spaced_alphas(5, 0.02, 1.0);
  const auto sol = run_cpi(b->problem, b->table, config_for(alphas));
  ASSERT_TRUE(sol.converged);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const auto vi = value_iteration(b->problem, b->table, CostKind::scalarized(alphas[i]));
    const double direct = field_mean(b->grid, vi.values);
    EXPECT_NEAR(sol.members[i].history.back(), direct, 0.02) << "alpha " << alphas[i];
  }
}

TEST(CpiProperty, FrontIsOrderedByWeight) {
  auto b = toy5();
  const auto sol = run_cpi(b->problem, b->table, config_for(log_spaced_alphas(6, 0.01, 1.0)));
  std::vector<Objectives> objs;
  for (const auto& m : sol.members) objs.emplace_back(m.avg_time, m.avg_energy);
  const auto keep = non_dominated_indices(objs);
  ASSERT_FALSE(keep.empty());
  for (std::size_t k = 1; k < keep.size(); ++k) {
    EXPECT_LE(objs[keep[k]].first, objs[keep[k - 1]].first);
    EXPECT_GE(objs[keep[k]].second, objs[keep[k - 1]].second);
  }
  for (auto a : keep)
    for (auto c : keep) EXPECT_FALSE(dominates(objs[a], objs[c]));
}

TEST(CpiProperty, IndependentOfThreadCount) {
  auto b = vortex(13);
  const auto cfg = config_for(log_spaced_alphas(4, 0.05, 1.0));
  set_thread_count(1);
  const auto a = run_cpi(b->problem, b->table, cfg);
  set_thread_count(3);
  const auto c = run_cpi(b->problem, b->table, cfg);
  set_thread_count(0);
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    EXPECT_EQ(a.members[i].policy, c.members[i].policy);
    EXPECT_EQ(a.members[i].time, c.members[i].time);
    EXPECT_EQ(a.members[i].energy, c.members[i].energy);
  }
}
