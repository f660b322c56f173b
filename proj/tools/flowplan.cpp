#include "flowplan/cpi.hpp"
#include "flowplan/io.hpp"
#include "flowplan/mepi.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/rollout.hpp"
#include "flowplan/scenario.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace flowplan;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::string scenario;
  std::string out;
  int threads = -1;
  bool dump_grid = false;
  std::optional<double> dt;
  std::optional<int> controls_per_axis;
  double tol = kDefaultTol;
};

struct CpiOptions {
  std::optional<int> alphas;
  std::optional<double> alpha_lo;
  std::optional<double> alpha_hi;
  std::optional<int> max_iters;
};

struct MepiOptions {
  std::optional<int> population;
  std::optional<int> generations;
  std::optional<int> n_cp;
  std::optional<int> n_par;
  std::optional<double> sigma;
  std::uint64_t seed = 1;
  int extra_per_axis = 5;
};

struct CompareOptions {
  std::optional<int> grid;
};

struct RolloutOptions {
  std::string solution;
  std::string start;
  std::optional<double> t_max;
  std::optional<double> goal_radius;
};

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

// Writes the manifest before any work starts and rewrites it when the run ends.
class RunLog {
 public:
  RunLog(std::string command, const CommonOptions& common, const Scenario& scenario, json config)
      : dir_(common.out), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_ + "': " + ec.message());
    manifest_["status"] = "incomplete";
    manifest_["command"] = std::move(command);
    manifest_["scenario"] = json::parse(scenario_to_json(scenario));
    manifest_["config"] = std::move(config);
    manifest_["threads"] = thread_count();
    flush();
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write(const std::string& name, const std::string& content) {
    write_text(path(name), content);
    outputs_.push_back(name);
  }

  void finish(bool converged, json extra = json::object()) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_["status"] = "complete";
    manifest_["converged"] = converged;
    manifest_["wall_clock_seconds"] = seconds;
    manifest_["outputs"] = outputs_;
    for (auto& [k, v] : extra.items()) manifest_[k] = v;
    flush();
  }

 private:
  void flush() { write_text(path("manifest.json"), manifest_.dump(2) + "\n"); }

  std::string dir_;
  std::chrono::steady_clock::time_point start_;
  json manifest_;
  std::vector<std::string> outputs_;
};

void apply_threads(int threads) {
  if (threads < 0) {
    if (const char* env = std::getenv("FLOWPLAN_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError("FLOWPLAN_THREADS: expected an integer");
      }
    }
  }
  if (threads < 0) threads = 0;
  set_thread_count(threads);
}

Scenario load_with_overrides(const CommonOptions& common) {
  Scenario s = resolve_scenario(common.scenario);
  if (common.dt) s.dt = *common.dt;
  if (common.controls_per_axis) s.controls.counts.assign(static_cast<std::size_t>(s.controls.dim()), *common.controls_per_axis);
  if (!(common.tol > 0.0)) throw ConfigError("--tol: must be positive");
  s.validate();
  return s;
}

// Grid, model and problem built from one scenario; the problem refers to the others.
struct Setup {
  Scenario scenario;
  SimplicialGrid grid;
  DynamicsModel model;
  Problem problem;

  Setup(Scenario s, bool cpi_grid, TransformKind kind = TransformKind::Harmonic)
      : scenario(std::move(s)),
        grid(make_grid(scenario, cpi_grid)),
        model(make_model(scenario)),
        problem(grid, model, scenario.obstacles, scenario.controls, scenario.dt, goal_state(scenario), kind) {}
};

SolutionFile make_solution(const Setup& setup, const std::string& method, bool cpi_grid,
                           std::optional<double> alpha, const PolicyField& policy, const Field& time,
                           const Field& energy) {
  SolutionFile s;
  s.scenario = setup.scenario.name;
  s.method = method;
  s.cpi_grid = cpi_grid;
  s.alpha = alpha;
  s.avg_time = field_mean(setup.grid, time);
  s.avg_energy = field_mean(setup.grid, energy);
  s.policy = policy;
  s.time = time;
  s.energy = energy;
  return s;
}

int solve_cpi(const CommonOptions& common, const CpiOptions& opts) {
  Scenario scenario = load_with_overrides(common);
  const auto& d = scenario.defaults;
  const int n = opts.alphas.value_or(d.alphas);
  const double lo = opts.alpha_lo.value_or(d.alpha_lo);
  const double hi = opts.alpha_hi.value_or(d.alpha_hi);
  if (n < 1) throw ConfigError("--alphas: must be at least 1");
  if (!(lo > 0.0 && lo <= hi && hi <= 1.0)) throw ConfigError("--alpha-lo/--alpha-hi: need 0 < lo <= hi <= 1");
  CpiConfig config;
  config.alphas = n == 1 ? std::vector<double>{hi} : log_spaced_alphas(n, lo, hi);
  config.tol = common.tol;
  config.max_iters = opts.max_iters.value_or(d.cpi_iters);
  config.validate();

  json cfg = {{"alphas", config.alphas},     {"epsilon", config.epsilon},       {"tol", config.tol},
              {"max_iters", config.max_iters}, {"max_sweeps", config.max_sweeps}, {"cpi_grid", true}};
  Setup setup(std::move(scenario), true);
  RunLog log("solve-cpi", common, setup.scenario, cfg);
  if (common.dump_grid) log.write("grid.json", grid_to_json(setup.grid));

  const TransitionTable table = build_transitions(setup.problem, enumerate_controls(setup.scenario.controls));
  const CpiSolution result = run_cpi(setup.problem, table, config);

  std::vector<Objectives> objectives;
  for (const auto& m : result.members) objectives.emplace_back(m.avg_time, m.avg_energy);
  const auto front = pareto_filter(objectives);
  std::vector<char> on_front(objectives.size(), 0);
  for (auto i : front) on_front[i] = 1;

  std::string table_csv = "member,alpha,avg_time,avg_energy,scalarized,converged,non_dominated\n";
  std::string archive_csv = "member,alpha,avg_time,avg_energy,solution\n";
  std::string history_csv = "member,alpha,step,objective\n";
  for (std::size_t i = 0; i < result.members.size(); ++i) {
    const auto& m = result.members[i];
    const std::string name = "solution_" + two_digits(i) + ".json";
    table_csv += std::to_string(i) + "," + format_double(m.alpha) + "," + format_double(m.avg_time) + "," +
                 format_double(m.avg_energy) + "," +
                 format_double(scalarized_objective(setup.grid, m.time, m.energy, m.alpha)) + "," +
                 (m.converged ? "1" : "0") + "," + (on_front[i] ? "1" : "0") + "\n";
    if (on_front[i])
      archive_csv += std::to_string(i) + "," + format_double(m.alpha) + "," + format_double(m.avg_time) + "," +
                     format_double(m.avg_energy) + "," + name + "\n";
    for (std::size_t k = 0; k < m.history.size(); ++k)
      history_csv += std::to_string(i) + "," + format_double(m.alpha) + "," + std::to_string(k) + "," +
                     format_double(m.history[k]) + "\n";
    log.write(name, solution_to_json(make_solution(setup, "cpi", true, m.alpha, m.policy, m.time, m.energy)));
    log.write("fields_" + two_digits(i) + ".csv", fields_csv(setup.grid, {"time", "energy"}, {&m.time, &m.energy}));
    log.write("policy_" + two_digits(i) + ".csv", policy_csv(setup.grid, m.policy));
  }
  log.write("objectives.csv", table_csv);
  log.write("archive.csv", archive_csv);
  log.write("history.csv", history_csv);
  log.finish(result.converged, {{"iterations", result.iterations}, {"evaluations", result.evaluations}});
  std::cout << "solve-cpi: " << result.members.size() << " weights, " << result.iterations << " sweeps, "
            << front.size() << " non-dominated, " << (result.converged ? "converged" : "NOT converged") << "\n";
  return result.converged ? 0 : kExitNotConverged;
}

int solve_mepi(const CommonOptions& common, const MepiOptions& opts) {
  Scenario scenario = load_with_overrides(common);
  const auto& d = scenario.defaults;
  MepiConfig config;
  config.population = opts.population.value_or(d.population);
  config.generations = opts.generations.value_or(d.generations);
  config.n_cp = opts.n_cp.value_or(d.n_cp);
  config.n_par = opts.n_par.value_or(d.n_par);
  config.sigma = opts.sigma.value_or(d.sigma);
  config.seed = opts.seed;
  config.extra_per_axis = opts.extra_per_axis;
  config.tol = common.tol;
  config.validate();

  json cfg = {{"population", config.population}, {"generations", config.generations}, {"n_cp", config.n_cp},
              {"n_par", config.n_par},           {"sigma", config.sigma},             {"seed", config.seed},
              {"epsilon", config.epsilon},       {"tol", config.tol},                 {"max_sweeps", config.max_sweeps},
              {"extra_per_axis", config.extra_per_axis}, {"cpi_grid", false}};
  Setup setup(std::move(scenario), false);
  RunLog log("solve-mepi", common, setup.scenario, cfg);
  if (common.dump_grid) log.write("grid.json", grid_to_json(setup.grid));

  const MepiResult result = run_mepi(setup.problem, config);

  std::string progress = "generation,best_time,median_time,best_energy,median_energy,front_size\n";
  for (const auto& r : result.progress)
    progress += std::to_string(r.generation) + "," + format_double(r.best_time) + "," +
                format_double(r.median_time) + "," + format_double(r.best_energy) + "," +
                format_double(r.median_energy) + "," + std::to_string(r.front_size) + "\n";
  std::string population = "member,avg_time,avg_energy,rank,crowding\n";
  for (std::size_t i = 0; i < result.population.size(); ++i) {
    const auto& ind = result.population[i];
    population += std::to_string(i) + "," + format_double(ind.objectives.first) + "," +
                  format_double(ind.objectives.second) + "," + std::to_string(ind.rank) + "," +
                  format_double(ind.crowding) + "\n";
  }
  std::string archive = "member,avg_time,avg_energy,solution\n";
  for (std::size_t i : result.archive) {
    const auto& ind = result.population[i];
    const std::string name = "solution_" + two_digits(i) + ".json";
    archive += std::to_string(i) + "," + format_double(ind.objectives.first) + "," +
               format_double(ind.objectives.second) + "," + name + "\n";
    log.write(name, solution_to_json(make_solution(setup, "mepi", false, std::nullopt, ind.policy, ind.time, ind.energy)));
    log.write("policy_" + two_digits(i) + ".csv", policy_csv(setup.grid, ind.policy));
  }
  log.write("progress.csv", progress);
  log.write("population.csv", population);
  log.write("archive.csv", archive);
  log.finish(result.evaluations_converged, {{"seed", config.seed}});
  std::cout << "solve-mepi: " << config.generations << " generations, archive of " << result.archive.size()
            << (result.evaluations_converged ? "" : ", some evaluations NOT converged") << "\n";
  return result.evaluations_converged ? 0 : kExitNotConverged;
}

int compare_transforms(const CommonOptions& common, const CompareOptions& opts) {
  Scenario scenario = load_with_overrides(common);
  if (opts.grid) {
    if (scenario.grid.type != GridSpec::Type::Structured) throw ConfigError("--grid: scenario grid is not structured");
    scenario.grid.counts.assign(scenario.grid.counts.size(), *opts.grid);
    scenario.validate();
  }
  json cfg = {{"tol", common.tol}, {"grid_counts", scenario.grid.counts}};
  Setup harmonic(scenario, false, TransformKind::Harmonic);
  Setup kruzkov(scenario, false, TransformKind::Kruzkov);
  RunLog log("compare-transforms", common, harmonic.scenario, cfg);
  if (common.dump_grid) log.write("grid.json", grid_to_json(harmonic.grid));

  const auto controls = enumerate_controls(scenario.controls);
  SolveOptions options;
  options.tol = common.tol;
  const SolveResult h = value_iteration(harmonic.problem, build_transitions(harmonic.problem, controls), CostKind::time(), options);
  const SolveResult k = value_iteration(kruzkov.problem, build_transitions(kruzkov.problem, controls), CostKind::time(), options);
  const auto h_time = recover_value(h.values, TransformKind::Harmonic);
  const auto k_time = recover_value(k.values, TransformKind::Kruzkov);

  struct Tally {
    std::size_t nonfinite = 0;
    std::size_t saturated = 0;
    double max_time = 0.0;
    json to_json(int iterations, bool converged) const {
      return {{"nonfinite", nonfinite}, {"saturated", saturated}, {"max_time", max_time},
              {"iterations", iterations}, {"converged", converged}};
    }
  };
  Tally ht, kt;
  std::size_t free_points = 0, lost = 0;
  double first_lost = std::numeric_limits<double>::infinity();
  auto tally = [](Tally& t, double field, double time) {
    if (!std::isfinite(time)) ++t.nonfinite; else t.max_time = std::max(t.max_time, time);
    if (saturated(field)) ++t.saturated;
  };
  for (std::size_t i = 0; i < harmonic.grid.size(); ++i) {
    if (harmonic.grid.is_obstacle(i)) continue;
    ++free_points;
    tally(ht, h.values[i], h_time[i]);
    tally(kt, k.values[i], k_time[i]);
    if (!saturated(h.values[i]) && saturated(k.values[i])) {
      ++lost;
      first_lost = std::min(first_lost, h_time[i]);
    }
  }
  json summary = {{"points", harmonic.grid.size()},
                  {"free_points", free_points},
                  {"harmonic", ht.to_json(h.iterations, h.converged)},
                  {"kruzkov", kt.to_json(k.iterations, k.converged)},
                  {"kruzkov_saturated_where_harmonic_resolved", lost},
                  {"smallest_harmonic_time_saturated_by_kruzkov",
                   std::isfinite(first_lost) ? json(first_lost) : json(nullptr)}};

  std::vector<double> hr(h_time), kr(k_time);
  log.write("fields.csv", fields_csv(harmonic.grid, {"harmonic_field", "harmonic_time", "kruzkov_field", "kruzkov_time"},
                                     {&h.values, &hr, &k.values, &kr}));
  log.write("summary.json", summary.dump(2) + "\n");
  const bool converged = h.converged && k.converged;
  log.finish(converged);
  std::cout << "compare-transforms: saturated points harmonic " << ht.saturated << ", kruzkov " << kt.saturated
            << " of " << free_points << " free points\n";
  return converged ? 0 : kExitNotConverged;
}

State parse_start(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--start: expected comma-separated numbers, got '" + text + "'");
    }
  }
  State x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) x(static_cast<Eigen::Index>(k)) = v[k];
  return x;
}

int rollout(const CommonOptions& common, const RolloutOptions& opts) {
  Scenario scenario = load_with_overrides(common);
  const SolutionFile solution = solution_from_json(read_text(opts.solution));
  State start = parse_start(opts.start);
  const int grid_dim = static_cast<int>(scenario.domain.dim()) + (scenario.time_period ? 1 : 0);
  if (scenario.time_period && start.size() == grid_dim - 1) {
    start.conservativeResize(grid_dim);
    start(grid_dim - 1) = 0.0;
  }
  if (start.size() != grid_dim) throw ConfigError("--start: expected " + std::to_string(grid_dim) + " coordinates");

  Setup setup(std::move(scenario), solution.cpi_grid);
  if (solution.policy.size() != setup.grid.size())
    throw ConfigError("--solution: policy has " + std::to_string(solution.policy.size()) + " points, grid has " +
                      std::to_string(setup.grid.size()));
  const double t_max = opts.t_max.value_or(default_t_max(setup.problem, solution.time, start));
  const double radius = opts.goal_radius.value_or(default_goal_radius(setup.grid));
  json cfg = {{"solution", opts.solution}, {"start", std::vector<double>(start.data(), start.data() + start.size())},
              {"t_max", t_max}, {"goal_radius", radius}};
  RunLog log("rollout", common, setup.scenario, cfg);

  const Trajectory traj = simulate(setup.problem, solution.policy, start, t_max, radius);
  log.write("trajectory.csv", trajectory_csv(traj, grid_dim, setup.problem.controls().dim()));
  json summary = {{"reached_goal", traj.reached_goal}, {"hit_obstacle", traj.hit_obstacle},
                  {"total_time", traj.total_time},     {"total_energy", traj.total_energy},
                  {"steps", traj.samples.empty() ? 0 : traj.samples.size() - 1}};
  log.write("summary.json", summary.dump(2) + "\n");
  log.finish(true);
  std::cout << "rollout: reached_goal=" << traj.reached_goal << " hit_obstacle=" << traj.hit_obstacle
            << " time=" << format_double(traj.total_time) << " energy=" << format_double(traj.total_energy) << "\n";
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& c, bool solver_flags) {
  cmd->add_option("--scenario", c.scenario, "Builtin scenario name or path to a scenario JSON file")->required();
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--threads", c.threads, "Worker threads (default: FLOWPLAN_THREADS or all cores)");
  if (solver_flags) {
    cmd->add_option("--dt", c.dt, "Override the time step");
    cmd->add_option("--controls-per-axis", c.controls_per_axis, "Override the control lattice size per axis");
    cmd->add_option("--tol", c.tol, "Fixed-point tolerance");
    cmd->add_flag("--dump-grid", c.dump_grid, "Also write the grid as grid.json");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective optimal path planning in flow fields"};
  app.require_subcommand(1);

  CommonOptions common;
  CpiOptions cpi;
  MepiOptions mepi;
  CompareOptions compare;
  RolloutOptions roll;
  std::string export_name, export_path;

  auto* cmd_cpi = app.add_subcommand("solve-cpi", "Concurrent policy iteration over log-spaced weights");
  add_common(cmd_cpi, common, true);
  cmd_cpi->add_option("--alphas", cpi.alphas, "Number of weights");
  cmd_cpi->add_option("--alpha-lo", cpi.alpha_lo, "Smallest weight");
  cmd_cpi->add_option("--alpha-hi", cpi.alpha_hi, "Largest weight");
  cmd_cpi->add_option("--max-iters", cpi.max_iters, "Improvement sweeps");

  auto* cmd_mepi = app.add_subcommand("solve-mepi", "Evolutionary policy iteration");
  add_common(cmd_mepi, common, true);
  cmd_mepi->add_option("--pop", mepi.population, "Population size");
  cmd_mepi->add_option("--gens", mepi.generations, "Generations");
  cmd_mepi->add_option("--ncp", mepi.n_cp, "Policy-switching offspring per generation");
  cmd_mepi->add_option("--npar", mepi.n_par, "Parents per policy-switching offspring");
  cmd_mepi->add_option("--sigma", mepi.sigma, "Mutation scale relative to the control half range");
  cmd_mepi->add_option("--seed", mepi.seed, "Random seed");
  cmd_mepi->add_option("--extra-per-axis", mepi.extra_per_axis,
                       "Points per axis of the fixed control lattice offered to the random-weight elite");

  auto* cmd_cmp = app.add_subcommand("compare-transforms", "Minimum-time value iteration under both transforms");
  add_common(cmd_cmp, common, true);
  cmd_cmp->add_option("--grid", compare.grid, "Points per axis of the structured grid");

  auto* cmd_roll = app.add_subcommand("rollout", "Closed-loop simulation of a stored policy");
  add_common(cmd_roll, common, false);
  cmd_roll->add_option("--solution", roll.solution, "Solution JSON written by a solver")->required();
  cmd_roll->add_option("--start", roll.start, "Start state, comma separated")->required();
  cmd_roll->add_option("--t-max", roll.t_max, "Simulation horizon");
  cmd_roll->add_option("--goal-radius", roll.goal_radius, "Arrival radius around the goal");

  auto* cmd_export = app.add_subcommand("export-scenario", "Write a scenario as JSON");
  cmd_export->add_option("--scenario", export_name, "Builtin scenario name or path")->required();
  cmd_export->add_option("--out", export_path, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*cmd_export) {
      write_text(export_path, scenario_to_json(resolve_scenario(export_name)));
      return 0;
    }
    apply_threads(common.threads);
    if (*cmd_cpi) return solve_cpi(common, cpi);
    if (*cmd_mepi) return solve_mepi(common, mepi);
    if (*cmd_cmp) return compare_transforms(common, compare);
    if (*cmd_roll) return rollout(common, roll);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
