// Acceptance checks: one PASS/FAIL/WARN line per criterion, exit status 1 if any FAILs.

#include "flowplan/cpi.hpp"
#include "flowplan/io.hpp"
#include "flowplan/mepi.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/rollout.hpp"
#include "flowplan/scenario.hpp"
#include "flowplan/sl_core.hpp"
#include "flowplan/transform.hpp"

#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace flowplan;
using testing_support::Gen;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Warn };

struct Verdict {
  Status status = Status::Pass;
  std::string detail;
};

// Collects failed checks; the first few messages make up the verdict detail.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : ", ") + text; }
  Verdict verdict() const {
    if (failures_ == 0) return {Status::Pass, notes_};
    return {Status::Fail, std::to_string(failures_) + " failed: " + messages_ + (notes_.empty() ? "" : " | " + notes_)};
  }

 private:
  int failures_ = 0;
  std::string messages_;
  std::string notes_;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double sup_diff(const Field& a, const Field& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Owns everything a Problem points at.
struct Bench {
  Scenario scenario;
  SimplicialGrid grid;
  DynamicsModel model;
  Problem problem;
  TransitionTable table;

  Bench(Scenario s, TransformKind kind = TransformKind::Harmonic)
      : scenario(std::move(s)),
        grid(make_grid(scenario)),
        model(make_model(scenario)),
        problem(grid, model, scenario.obstacles, scenario.controls, scenario.dt, goal_state(scenario), kind),
        table(build_transitions(problem, enumerate_controls(scenario.controls))) {}
  Bench(const Bench&) = delete;
};

Verdict transform_algebra() {
  Checks c;
  Gen gen(101);
  double worst_sum = 0, worst_convex = 0, worst_trip = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x1 = gen.uniform(0, 100), x2 = gen.uniform(0, 100);
    worst_sum = std::max(worst_sum, std::abs(harmonic_shift(harmonic(x1), x2) - harmonic(x1 + x2)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double vt = gen.uniform(0, 100), ve = gen.uniform(0, 100), a = gen.uniform(0, 1);
    worst_convex = std::max(worst_convex, std::abs(harmonic_convex(harmonic(vt), harmonic(ve), a) - harmonic(a * vt + (1 - a) * ve)));
  }
  for (int i = 0; i < 1000; ++i) {
    const double v = gen.uniform(0, 1e6);
    worst_trip = std::max(worst_trip, std::abs(harmonic_inverse(harmonic(v)) - v) / (1 + v));
  }
  c.expect(worst_sum <= 1e-12, "sum property off by " + num(worst_sum));
  c.expect(worst_convex <= 1e-12, "convex identity off by " + num(worst_convex));
  c.expect(worst_trip <= 1e-12, "round trip off by " + num(worst_trip) + " (relative, v up to 1e6)");
  c.note("sum " + num(worst_sum) + ", convex " + num(worst_convex) + ", round trip " + num(worst_trip));
  return c.verdict();
}

Verdict obstacle_course_contrast() {
  Checks c;
  Scenario s = builtin_scenario("ex1_obstacles");
  s.grid.counts = {71, 71};
  Bench harmonic_bench(s, TransformKind::Harmonic);
  Bench kruzkov_bench(s, TransformKind::Kruzkov);
  const auto h = value_iteration(harmonic_bench.problem, harmonic_bench.table, CostKind::time());
  const auto k = value_iteration(kruzkov_bench.problem, kruzkov_bench.table, CostKind::time());
  c.expect(h.converged, "harmonic value iteration did not converge");
  const auto h_time = recover_value(h.values, TransformKind::Harmonic);
  const auto& grid = harmonic_bench.grid;

  // Lattice travel-time oracle on the same 71 x 71 nodes.
  const int n = 71;
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = s.domain.lo[0] + (s.domain.hi[0] - s.domain.lo[0]) * i / (n - 1);
  const auto oracle = testing_support::lattice_travel_time(axis, axis, 35, 35, s.controls.hi[0], s.obstacles);
  auto lattice_index = [&](const State& x) {
    const double h_step = axis[1] - axis[0];
    const long ix = std::lround((x(0) - axis[0]) / h_step), iy = std::lround((x(1) - axis[0]) / h_step);
    return std::pair<long, long>{ix, iy};
  };

  std::size_t nonfinite = 0, unstable = 0;
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_obstacle(i)) continue;
    const auto [ix, iy] = lattice_index(grid.point(i));
    const double exact = oracle[static_cast<std::size_t>(iy * n + ix)];
    if (std::isfinite(exact) && !std::isfinite(h_time[i])) ++nonfinite;
    if (h_time[i] > 40 && (saturated(k.values[i]) || !std::isfinite(recover_value({k.values[i]}, TransformKind::Kruzkov)[0])))
      ++unstable;
    if (ix > 0 && iy > 0 && ix < n - 1 && iy < n - 1 && std::isfinite(exact) && !grid.is_goal(i)) interior.push_back(i);
  }
  c.expect(nonfinite == 0, std::to_string(nonfinite) + " reachable points with non-finite harmonic time");
  c.expect(unstable >= 1, "no Kruzkov saturation where the harmonic time exceeds 40");

  Gen gen(102);
  std::shuffle(interior.begin(), interior.end(), gen.engine());
  double worst = 0;
  for (std::size_t j = 0; j < 50 && j < interior.size(); ++j) {
    const std::size_t i = interior[j];
    const auto [ix, iy] = lattice_index(grid.point(i));
    const double exact = oracle[static_cast<std::size_t>(iy * n + ix)];
    const double rel = std::abs(h_time[i] - exact) / exact;
    worst = std::max(worst, rel);
    c.expect(rel <= 0.15, "time " + num(h_time[i]) + " vs oracle " + num(exact));
  }
  c.note(std::to_string(unstable) + " Kruzkov-saturated points beyond time 40");
  c.note("worst oracle deviation " + num(100 * worst) + "%");
  return c.verdict();
}

Verdict operator_properties() {
  Checks c;
  Gen gen(103);
  Scenario s = builtin_scenario("ex1_obstacles");
  s.grid.counts = {10, 10};
  std::vector<std::unique_ptr<Bench>> benches;
  benches.push_back(std::make_unique<Bench>(s));
  Scenario free = s;
  free.obstacles = ObstacleSet();
  benches.push_back(std::make_unique<Bench>(free));
  Scenario vortex = builtin_scenario("ex3_vortex");
  vortex.grid = {GridSpec::Type::Structured, {10, 10}, 0, 0, std::nullopt};
  benches.push_back(std::make_unique<Bench>(vortex));

  auto random_field = [&](const Bench& b, double hi) {
    Field f(b.grid.size());
    for (auto& v : f) v = gen.uniform(0, hi);
    b.problem.apply_pins(f);
    return f;
  };
  const CostKind time = CostKind::time();
  for (const auto& b : benches) {
    for (int trial = 0; trial < 100; ++trial) {
      const Field w = random_field(*b, 1.0);
      Field v = w;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!b->problem.pinned(i)) v[i] = std::min(1.0, v[i] + gen.uniform(0, 0.3));
      const auto tw = bellman_update(b->problem, b->table, time, w).values;
      const auto tv = bellman_update(b->problem, b->table, time, v).values;
      bool monotone = true;
      for (std::size_t i = 0; i < w.size(); ++i) monotone = monotone && tw[i] <= tv[i];
      c.expect(monotone, "monotonicity violated on " + b->scenario.name);

      const Field a = random_field(*b, 1.0), d = random_field(*b, 1.0);
      const auto ta = bellman_update(b->problem, b->table, time, a).values;
      const auto td = bellman_update(b->problem, b->table, time, d).values;
      c.expect(sup_diff(ta, td) <= sup_diff(a, d), "non-expansiveness violated on " + b->scenario.name);
    }
  }
  // Obstacle-free contraction with fields at most 0.9 off the goal; every step costs at least dt / 2.
  const Bench& f = *benches[1];
  const double factor = 1.0 / (1.0 + 0.1 * 0.5 * f.problem.dt());
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Field v = random_field(f, 0.9), w = random_field(f, 0.9);
    const double ratio = sup_diff(bellman_update(f.problem, f.table, time, v).values,
                                  bellman_update(f.problem, f.table, time, w).values) /
                         sup_diff(v, w);
    worst = std::max(worst, ratio);
    c.expect(ratio <= factor, "contraction ratio " + num(ratio) + " above " + num(factor));
  }
  c.note("worst contraction ratio " + num(worst) + " (bound " + num(factor) + ")");
  return c.verdict();
}

Verdict solver_cross_validation() {
  Checks c;
  Scenario s = builtin_scenario("ex2_linear3d");
  s.grid.counts = {8, 8, 8};
  Bench b(s);
  const CostKind time = CostKind::time();
  const auto vi = value_iteration(b.problem, b.table, time);
  const auto pi = policy_iteration(b.problem, b.table, time);
  CpiConfig config;
  config.alphas = {1.0};
  const auto cpi = run_cpi(b.problem, b.table, config);
  const double tol = kDefaultTol;
  c.expect(vi.converged && pi.converged && cpi.converged, "a solver did not converge");
  const double vi_pi = sup_diff(vi.values, pi.values);
  const double vi_cpi = sup_diff(vi.values, cpi.members[0].time);
  const double pi_cpi = sup_diff(pi.values, cpi.members[0].time);
  c.expect(vi_pi <= 10 * tol, "VI vs PI " + num(vi_pi));
  c.expect(vi_cpi <= 10 * tol, "VI vs CPI " + num(vi_cpi));
  c.expect(pi_cpi <= 10 * tol, "PI vs CPI " + num(pi_cpi));
  c.note(std::to_string(b.grid.size()) + " points, max gap " + num(std::max({vi_pi, vi_cpi, pi_cpi})));
  return c.verdict();
}

// x' = -x + u on [-1, 1] with |u| <= 1 and the goal at 0; the minimum time is ln(1 + |x|).
double scalar_linear_error(double dt) {
  const double dx = dt * dt;
  const int n = static_cast<int>(std::lround(2.0 / dx)) + 1;
  const auto grid = build_structured_grid({{-1}, {1}}, {n}, make_state({0}), {});
  const DynamicsModel model(
      1, 1, [](const State& x, double) { return State(-x); },
      [](const State&) { return SmallMatrix::Identity(1, 1); });
  const ObstacleSet obstacles;
  const ControlSet controls{{-1}, {1}, {41}};
  const Problem problem(grid, model, obstacles, controls, dt, make_state({0}));
  const auto table = build_transitions(problem, enumerate_controls(controls));
  const auto vi = value_iteration(problem, table, CostKind::time());
  const auto t = recover_value(vi.values);
  double err = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(t[i] - std::log1p(std::abs(grid.point(i)(0)))));
  return err;
}

Verdict consistency_trend() {
  Checks c;
  const double coarse = scalar_linear_error(0.2), fine = scalar_linear_error(0.1);
  c.expect(fine < coarse, "error did not decrease");
  c.note("sup error " + num(coarse) + " at dt 0.2, " + num(fine) + " at dt 0.1");
  return c.verdict();
}

struct Rollout {
  double time = 0, energy = 0;
  bool ok = false;
};

// Checks (a) to (c) for one archive; returns best (time, energy) objectives.
Objectives check_archive(Checks& c, const std::string& method, const Problem& problem, const std::vector<Objectives>& objectives,
                         const std::vector<const PolicyField*>& policies, const std::vector<const Field*>& time_fields,
                         const State& start) {
  for (std::size_t i = 0; i < objectives.size(); ++i)
    for (std::size_t j = 0; j < objectives.size(); ++j)
      c.expect(i == j || !dominates(objectives[i], objectives[j]), method + " archive has a dominated member");
  const double radius = default_goal_radius(problem.grid());
  std::vector<Rollout> rolls;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto t = simulate(problem, *policies[i], start, default_t_max(problem, *time_fields[i], start), radius);
    rolls.push_back({t.total_time, t.total_energy, t.reached_goal && !t.hit_obstacle});
    c.expect(rolls.back().ok, method + " member " + std::to_string(i) + " rollout " +
                                  (t.hit_obstacle ? "hit an obstacle" : "missed the goal"));
  }
  std::size_t fastest = 0, cheapest = 0;
  Objectives best{1.0, 1.0};
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    if (objectives[i].first < objectives[fastest].first) fastest = i;
    if (objectives[i].second < objectives[cheapest].second) cheapest = i;
    best.first = std::min(best.first, objectives[i].first);
    best.second = std::min(best.second, objectives[i].second);
  }
  c.expect(rolls[fastest].time <= 1.05 * rolls[cheapest].time,
           method + " min-time rollout " + num(rolls[fastest].time) + " slower than min-energy " + num(rolls[cheapest].time));
  c.expect(rolls[cheapest].energy <= 1.05 * rolls[fastest].energy,
           method + " min-energy rollout " + num(rolls[cheapest].energy) + " costlier than min-time " +
               num(rolls[fastest].energy));
  c.note(method + " archive " + std::to_string(objectives.size()) + ", rollout time " + num(rolls[fastest].time) + "/" +
         num(rolls[cheapest].time) + ", energy " + num(rolls[fastest].energy) + "/" + num(rolls[cheapest].energy));
  return best;
}

Scenario desk_vortex() {
  Scenario s = builtin_scenario("ex3_vortex");
  s.grid.target_count = 300;
  s.grid.boundary_samples = 48;
  s.grid.cpi_target_count.reset();
  return s;
}

Verdict multi_objective_outputs() {
  Checks c;
  Bench b(desk_vortex());
  const State start = make_state({0, 0.9});

  CpiConfig cpi_config;
  cpi_config.alphas = log_spaced_alphas(15, 0.01, 1.0);
  const auto cpi = run_cpi(b.problem, b.table, cpi_config);
  std::vector<Objectives> all;
  for (const auto& m : cpi.members) all.emplace_back(m.avg_time, m.avg_energy);
  std::vector<Objectives> cpi_obj;
  std::vector<const PolicyField*> cpi_pol;
  std::vector<const Field*> cpi_time;
  for (auto i : pareto_filter(all)) {
    cpi_obj.push_back(all[i]);
    cpi_pol.push_back(&cpi.members[i].policy);
    cpi_time.push_back(&cpi.members[i].time);
  }
  const Objectives cpi_best = check_archive(c, "CPI", b.problem, cpi_obj, cpi_pol, cpi_time, start);

  MepiConfig mepi_config;
  mepi_config.population = 20;
  mepi_config.generations = 40;
  mepi_config.seed = 7;
  const auto mepi = run_mepi(b.problem, mepi_config);
  std::vector<Objectives> mepi_obj;
  std::vector<const PolicyField*> mepi_pol;
  std::vector<const Field*> mepi_time;
  for (auto i : mepi.archive) {
    mepi_obj.push_back(mepi.population[i].objectives);
    mepi_pol.push_back(&mepi.population[i].policy);
    mepi_time.push_back(&mepi.population[i].time);
  }
  const Objectives mepi_best = check_archive(c, "MEPI", b.problem, mepi_obj, mepi_pol, mepi_time, start);

  Verdict v = c.verdict();
  const bool energy_ok = mepi_best.second <= cpi_best.second;
  const bool time_ok = cpi_best.first <= 1.1 * mepi_best.first;
  const std::string comparison = "best energy MEPI " + num(mepi_best.second) + " vs CPI " + num(cpi_best.second) +
                                 ", best time CPI " + num(cpi_best.first) + " vs MEPI " + num(mepi_best.first);
  v.detail += (v.detail.empty() ? "" : ", ") + comparison;
  if (v.status == Status::Pass && !(energy_ok && time_ok)) {
    v.status = Status::Warn;
    v.detail += " (method ordering differs from the reference observation)";
  }
  return v;
}

Verdict nsga_machinery() {
  Checks c;
  Gen gen(104);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = gen.integer(1, 50);
    std::vector<Objectives> pts;
    if (trial % 2 == 0) {
      pts = gen.objective_cloud(n, 6);
    } else {
      for (int i = 0; i < n; ++i) pts.emplace_back(gen.uniform(0, 1), gen.uniform(0, 1));
    }
    c.expect(fast_non_dominated_sort(pts) == testing_support::brute_force_ranks(pts),
             "rank mismatch on instance " + std::to_string(trial));
  }
  const double inf = std::numeric_limits<double>::infinity();
  c.expect(crowding_distance({{0, 2}, {1, 1}, {2, 0}}) == std::vector<double>{inf, 2.0, inf}, "three-point crowding");
  c.expect(crowding_distance({{0, 1}, {1, 0}}) == std::vector<double>{inf, inf}, "two-point crowding");
  c.expect(crowding_distance({{0.5, 0.5}}) == std::vector<double>{inf}, "single-point crowding");
  return c.verdict();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FLOWPLAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every output except the manifest, which records wall-clock time.
std::map<std::string, std::string> outputs(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "manifest.json") files[e.path().filename().string()] = slurp(e.path());
  return files;
}

Verdict determinism() {
  Checks c;
  const fs::path root = fs::temp_directory_path() / "flowplan_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  Scenario s = desk_vortex();
  s.defaults.generations = 10;
  const std::string scenario = (root / "scenario.json").string();
  save_scenario(s, scenario);

  for (const std::string command : {"solve-mepi --seed 11", "solve-cpi"}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* threads : {"1", "1", "4"}) {
      const fs::path out = root / ("run" + std::to_string(runs.size()) + "_" + command.substr(6, 4));
      const int code = run_cli(command + " --scenario '" + scenario + "' --threads " + threads + " --out '" + out.string() + "'");
      c.expect(code == 0, command + " exited with " + std::to_string(code));
      runs.push_back(outputs(out));
    }
    c.expect(!runs[0].empty() && runs[0].count("archive.csv"), command + " wrote no archive");
    c.expect(runs[0] == runs[1], command + " outputs differ between repeated runs");
    c.expect(runs[0] == runs[2], command + " outputs differ between 1 and 4 threads");
    c.note(command.substr(0, 10) + " " + std::to_string(runs[0].size()) + " files identical");
  }
  return c.verdict();
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "transform algebra", 1, transform_algebra},
      {2, "obstacle course transform contrast", 120, obstacle_course_contrast},
      {3, "operator properties", 30, operator_properties},
      {4, "solver cross-validation", 120, solver_cross_validation},
      {5, "consistency trend", 120, consistency_trend},
      {6, "multi-objective outputs", 600, multi_objective_outputs},
      {7, "NSGA machinery", 10, nsga_machinery},
      {8, "determinism", 600, determinism},
  };
  bool failed = false;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > cr.limit_seconds && v.status != Status::Fail) {
      v.status = Status::Fail;
      v.detail += " (over the " + num(cr.limit_seconds) + " s budget)";
    }
    const char* label = v.status == Status::Pass ? "PASS" : v.status == Status::Warn ? "WARN" : "FAIL";
    failed = failed || v.status == Status::Fail;
    std::cout << "criterion " << cr.id << ": " << label << "  " << cr.title << " [" << num(seconds) << " s] " << v.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}
