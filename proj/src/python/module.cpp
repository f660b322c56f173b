#include "flowplan/cpi.hpp"
#include "flowplan/io.hpp"
#include "flowplan/mepi.hpp"
#include "flowplan/nsga.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/rollout.hpp"
#include "flowplan/scenario.hpp"
#include "flowplan/sl_core.hpp"
#include "flowplan/transform.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace flowplan;

namespace {

using Array = py::array_t<double>;

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Array to_matrix(const std::vector<State>& rows, int cols) {
  Array out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(cols)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < cols; ++k) m(static_cast<py::ssize_t>(i), k) = rows[i](k);
  return out;
}

State to_state(const std::vector<double>& v) {
  State s(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) s(static_cast<Eigen::Index>(k)) = v[k];
  return s;
}

TransformKind parse_transform(const std::string& name) {
  if (name == "harmonic") return TransformKind::Harmonic;
  if (name == "kruzkov") return TransformKind::Kruzkov;
  throw ConfigError("transform must be 'harmonic' or 'kruzkov', got '" + name + "'");
}

// "time", "energy" or a float weight on time.
CostKind parse_cost(const py::object& cost) {
  if (py::isinstance<py::str>(cost)) {
    const auto name = cost.cast<std::string>();
    if (name == "time") return CostKind::time();
    if (name == "energy") return CostKind::energy();
    throw ConfigError("cost must be 'time', 'energy' or a weight in [0, 1], got '" + name + "'");
  }
  return CostKind::scalarized(cost.cast<double>());
}

py::dict policy_dict(const Problem& problem, const PolicyField& policy) {
  py::dict d;
  d["controls"] = to_matrix(policy.controls, problem.controls().dim());
  d["control_index"] = policy.index;
  return d;
}

PolicyField policy_from(const Problem& problem, const Array& controls) {
  const auto m = controls.unchecked<2>();
  const int dim = problem.controls().dim();
  if (m.shape(0) != static_cast<py::ssize_t>(problem.grid().size()) || m.shape(1) != dim)
    throw ConfigError("controls must have shape (" + std::to_string(problem.grid().size()) + ", " +
                      std::to_string(dim) + ")");
  PolicyField policy;
  for (py::ssize_t i = 0; i < m.shape(0); ++i) {
    Control u(dim);
    for (int k = 0; k < dim; ++k) u(k) = m(i, k);
    policy.controls.push_back(u);
    policy.index.push_back(-1);
  }
  return policy;
}

// Scenario with its grid, model and discretized problem, built once.
class Planner {
 public:
  Planner(const std::string& scenario, bool cpi_grid, const std::string& transform,
          std::optional<std::vector<int>> grid_counts, std::optional<int> target_count)
      : scenario_(resolve_scenario(scenario)) {
    if (grid_counts) {
      if (scenario_.grid.type != GridSpec::Type::Structured) throw ConfigError("grid_counts: scenario grid is not structured");
      scenario_.grid.counts = *grid_counts;
    }
    if (target_count) {
      if (scenario_.grid.type != GridSpec::Type::Unstructured)
        throw ConfigError("target_count: scenario grid is not unstructured");
      scenario_.grid.target_count = *target_count;
      scenario_.grid.cpi_target_count.reset();
    }
    scenario_.validate();
    grid_ = std::make_unique<SimplicialGrid>(make_grid(scenario_, cpi_grid));
    model_ = std::make_unique<DynamicsModel>(make_model(scenario_));
    problem_ = std::make_unique<Problem>(*grid_, *model_, scenario_.obstacles, scenario_.controls, scenario_.dt,
                                         goal_state(scenario_), parse_transform(transform));
  }

  std::string name() const { return scenario_.name; }
  std::string scenario_json() const { return scenario_to_json(scenario_); }
  std::size_t size() const { return grid_->size(); }
  Array points() const { return to_matrix(grid_->points(), grid_->dim()); }
  std::vector<bool> obstacle_mask() const {
    std::vector<bool> out(grid_->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid_->is_obstacle(i);
    return out;
  }
  std::vector<int> goal_indices() const { return grid_->goal_indices(); }

  py::dict solve(const py::object& cost, const std::string& method, double tol, int max_iters) {
    const CostKind kind = parse_cost(cost);
    SolveOptions options;
    options.tol = tol;
    SolveResult r;
    {
      py::gil_scoped_release release;
      const auto& t = table();
      if (method == "value_iteration")
        r = value_iteration(*problem_, t, kind, options);
      else if (method == "policy_iteration")
        r = policy_iteration(*problem_, t, kind, max_iters, options);
      else
        throw ConfigError("method must be 'value_iteration' or 'policy_iteration', got '" + method + "'");
    }
    py::dict d = policy_dict(*problem_, r.policy);
    d["values"] = to_array(r.values);
    d["cost_to_go"] = to_array(recover_value(r.values, problem_->transform()));
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["mean_value"] = field_mean(*grid_, r.values);
    return d;
  }

  py::dict evaluate(const Array& controls, double tol) {
    const PolicyField policy = policy_from(*problem_, controls);
    SolveOptions options;
    options.tol = tol;
    Individual ind;
    ind.policy = policy;
    bool converged;
    {
      py::gil_scoped_release release;
      converged = evaluate_individual(*problem_, ind, kDefaultEpsilon, options);
    }
    py::dict d;
    d["time"] = to_array(ind.time);
    d["energy"] = to_array(ind.energy);
    d["avg_time"] = ind.objectives.first;
    d["avg_energy"] = ind.objectives.second;
    d["converged"] = converged;
    return d;
  }

  py::dict cpi(std::optional<std::vector<double>> alphas, int max_iters, double tol) {
    CpiConfig config;
    const auto& d = scenario_.defaults;
    config.alphas = alphas ? *alphas : log_spaced_alphas(d.alphas, d.alpha_lo, d.alpha_hi);
    config.max_iters = max_iters;
    config.tol = tol;
    config.validate();
    CpiSolution s;
    {
      py::gil_scoped_release release;
      s = run_cpi(*problem_, table(), config);
    }
    py::list members;
    std::vector<Objectives> objectives;
    for (const auto& m : s.members) {
      py::dict e = policy_dict(*problem_, m.policy);
      e["alpha"] = m.alpha;
      e["time"] = to_array(m.time);
      e["energy"] = to_array(m.energy);
      e["avg_time"] = m.avg_time;
      e["avg_energy"] = m.avg_energy;
      e["converged"] = m.converged;
      e["history"] = m.history;
      members.append(e);
      objectives.emplace_back(m.avg_time, m.avg_energy);
    }
    py::dict out;
    out["members"] = members;
    out["archive"] = pareto_filter(objectives);
    out["iterations"] = s.iterations;
    out["evaluations"] = s.evaluations;
    out["converged"] = s.converged;
    return out;
  }

  py::dict mepi(std::optional<int> population, std::optional<int> generations, std::optional<int> n_cp,
                std::optional<int> n_par, std::optional<double> sigma, std::uint64_t seed, int extra_per_axis) {
    const auto& d = scenario_.defaults;
    MepiConfig config;
    config.population = population.value_or(d.population);
    config.generations = generations.value_or(d.generations);
    config.n_cp = n_cp.value_or(d.n_cp);
    config.n_par = n_par.value_or(d.n_par);
    config.sigma = sigma.value_or(d.sigma);
    config.seed = seed;
    config.extra_per_axis = extra_per_axis;
    config.validate();
    MepiResult r;
    {
      py::gil_scoped_release release;
      r = run_mepi(*problem_, config);
    }
    py::list members;
    for (const auto& ind : r.population) {
      py::dict e = policy_dict(*problem_, ind.policy);
      e["time"] = to_array(ind.time);
      e["energy"] = to_array(ind.energy);
      e["avg_time"] = ind.objectives.first;
      e["avg_energy"] = ind.objectives.second;
      e["rank"] = ind.rank;
      e["crowding"] = ind.crowding;
      members.append(e);
    }
    py::list progress;
    for (const auto& p : r.progress) {
      py::dict row;
      row["generation"] = p.generation;
      row["best_time"] = p.best_time;
      row["median_time"] = p.median_time;
      row["best_energy"] = p.best_energy;
      row["median_energy"] = p.median_energy;
      row["front_size"] = p.front_size;
      progress.append(row);
    }
    py::dict out;
    out["population"] = members;
    out["archive"] = r.archive;
    out["progress"] = progress;
    out["converged"] = r.evaluations_converged;
    return out;
  }

  py::dict rollout(const Array& controls, const std::vector<double>& start, std::optional<double> t_max,
                   std::optional<double> goal_radius, std::optional<Array> time_field) {
    const PolicyField policy = policy_from(*problem_, controls);
    State x = to_state(start);
    if (model_->augmented() && x.size() == grid_->dim() - 1) {
      x.conservativeResize(grid_->dim());
      x(grid_->dim() - 1) = 0.0;
    }
    if (x.size() != grid_->dim()) throw ConfigError("start must have " + std::to_string(grid_->dim()) + " coordinates");
    double horizon;
    if (t_max) {
      horizon = *t_max;
    } else if (time_field) {
      const auto v = time_field->unchecked<1>();
      Field f(static_cast<std::size_t>(v.shape(0)));
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = v(static_cast<py::ssize_t>(i));
      horizon = default_t_max(*problem_, f, x);
    } else {
      throw ConfigError("rollout needs t_max or time_field");
    }
    const Trajectory t = simulate(*problem_, policy, x, horizon, goal_radius.value_or(default_goal_radius(*grid_)));
    std::vector<double> times;
    std::vector<State> states, applied;
    for (const auto& s : t.samples) {
      times.push_back(s.t);
      states.push_back(s.state);
      applied.push_back(s.control);
    }
    py::dict d;
    d["t"] = to_array(times);
    d["states"] = to_matrix(states, grid_->dim());
    d["controls"] = to_matrix(applied, problem_->controls().dim());
    d["total_time"] = t.total_time;
    d["total_energy"] = t.total_energy;
    d["reached_goal"] = t.reached_goal;
    d["hit_obstacle"] = t.hit_obstacle;
    return d;
  }

 private:
  const TransitionTable& table() {
    if (!table_) table_ = std::make_unique<TransitionTable>(build_transitions(*problem_, enumerate_controls(scenario_.controls)));
    return *table_;
  }

  Scenario scenario_;
  std::unique_ptr<SimplicialGrid> grid_;
  std::unique_ptr<DynamicsModel> model_;
  std::unique_ptr<Problem> problem_;
  std::unique_ptr<TransitionTable> table_;
};

}  // namespace

PYBIND11_MODULE(_flowplan, m) {
  m.doc() = "Semi-Lagrangian multi-objective path planning in flow fields.";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("harmonic", &harmonic, py::arg("v"));
  m.def("harmonic_inverse", &harmonic_inverse, py::arg("h"));
  m.def("harmonic_shift", &harmonic_shift, py::arg("h"), py::arg("x"));
  m.def("harmonic_convex", &harmonic_convex, py::arg("h_time"), py::arg("h_energy"), py::arg("alpha"));
  m.def("kruzkov", &kruzkov, py::arg("v"));
  m.def("kruzkov_inverse", &kruzkov_inverse, py::arg("h"));

  m.def("fast_non_dominated_sort", &fast_non_dominated_sort, py::arg("points"),
        "Rank of every (time, energy) pair; 0 is the non-dominated front.");
  m.def("crowding_distance", &crowding_distance, py::arg("front"));
  m.def("pareto_filter", &pareto_filter, py::arg("points"));
  m.def("log_spaced_alphas", &log_spaced_alphas, py::arg("n"), py::arg("lo"), py::arg("hi"));

  m.def("builtin_scenarios", &builtin_scenario_names);
  m.def("scenario_json", [](const std::string& s) { return scenario_to_json(resolve_scenario(s)); }, py::arg("scenario"),
        "Resolved scenario (builtin name or JSON path) as JSON text.");
  m.def("set_threads", &set_thread_count, py::arg("n"), "Caps solver worker threads; 0 restores the default.");

  py::class_<Planner>(m, "Planner")
      .def(py::init<const std::string&, bool, const std::string&, std::optional<std::vector<int>>, std::optional<int>>(),
           py::arg("scenario"), py::arg("cpi_grid") = false, py::arg("transform") = "harmonic",
           py::arg("grid_counts") = py::none(), py::arg("target_count") = py::none())
      .def_property_readonly("name", &Planner::name)
      .def_property_readonly("size", &Planner::size)
      .def_property_readonly("points", &Planner::points)
      .def_property_readonly("obstacle_mask", &Planner::obstacle_mask)
      .def_property_readonly("goal_indices", &Planner::goal_indices)
      .def("scenario_json", &Planner::scenario_json)
      .def("solve", &Planner::solve, py::arg("cost") = "time", py::arg("method") = "value_iteration",
           py::arg("tol") = kDefaultTol, py::arg("max_iters") = 30)
      .def("evaluate", &Planner::evaluate, py::arg("controls"), py::arg("tol") = kDefaultTol,
           "Time and energy fields of a per-point control array.")
      .def("cpi", &Planner::cpi, py::arg("alphas") = py::none(), py::arg("max_iters") = 30, py::arg("tol") = kDefaultTol)
      .def("mepi", &Planner::mepi, py::arg("population") = py::none(), py::arg("generations") = py::none(),
           py::arg("n_cp") = py::none(), py::arg("n_par") = py::none(), py::arg("sigma") = py::none(),
           py::arg("seed") = 1, py::arg("extra_per_axis") = 5)
      .def("rollout", &Planner::rollout, py::arg("controls"), py::arg("start"), py::arg("t_max") = py::none(),
           py::arg("goal_radius") = py::none(), py::arg("time_field") = py::none());
}
