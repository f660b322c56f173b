#include "flowplan/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace flowplan {
namespace {

using json = nlohmann::ordered_json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError((path.empty() ? "" : path + ".") + key + ": unknown key");
}

const json& field(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError((path.empty() ? "" : path + ".") + key + ": missing required field");
  return obj.at(key);
}

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> integers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Shape parse_shape(const json& v, const std::string& path) {
  const std::string type = field(v, path, "type").is_string() ? v.at("type").get<std::string>() : "";
  if (type == "polygon") {
    check_keys(v, path, {"type", "vertices"});
    const json& verts = field(v, path, "vertices");
    if (!verts.is_array()) throw ConfigError(path + ".vertices: expected an array of [x, y] pairs");
    Polygon p;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const std::string vp = path + ".vertices[" + std::to_string(i) + "]";
      const auto xy = numbers(verts[i], vp);
      if (xy.size() != 2) throw ConfigError(vp + ": expected [x, y]");
      p.vertices.push_back({xy[0], xy[1]});
    }
    return p;
  }
  if (type == "box") {
    check_keys(v, path, {"type", "lo", "hi"});
    return Box{numbers(field(v, path, "lo"), path + ".lo"), numbers(field(v, path, "hi"), path + ".hi")};
  }
  throw ConfigError(path + ".type: expected \"polygon\" or \"box\"");
}

json shape_json(const Shape& shape) {
  if (const auto* p = std::get_if<Polygon>(&shape)) {
    json verts = json::array();
    for (const auto& v : p->vertices) verts.push_back({v[0], v[1]});
    return {{"type", "polygon"}, {"vertices", verts}};
  }
  const auto& b = std::get<Box>(shape);
  return {{"type", "box"}, {"lo", b.lo}, {"hi", b.hi}};
}

Scenario base(const std::string& name, const std::string& flow) {
  Scenario s;
  s.name = name;
  s.dynamics = flow;
  s.params = builtin_flow_defaults(flow);
  return s;
}

Scenario ex1() {
  Scenario s = base("ex1_obstacles", "zero");
  s.domain = {{-10, -10}, {10, 10}};
  s.goal = {0, 0};
  // Two walls forcing detours (representative of the published figure).
  s.obstacles = ObstacleSet({Box{{-6, -7}, {-4, 5}}, Box{{3, -4}, {5, 8}}});
  s.dt = 1.0;
  s.controls = {{-0.2, -0.2}, {0.2, 0.2}, {5, 5}};
  s.grid.counts = {141, 141};
  s.start = std::vector<double>{-9, 9};
  s.defaults.alphas = 1;
  s.defaults.alpha_lo = 1.0;
  s.defaults.alpha_hi = 1.0;
  return s;
}

Scenario ex2() {
  Scenario s = base("ex2_linear3d", "linear");
  s.domain = {{-1, -1, -1}, {1, 1, 1}};
  s.goal = {-0.2, 0.2, 0};
  s.dt = 0.1;
  s.controls = {{-2, -2, -2}, {2, 2, 2}, {9, 9, 9}};
  s.grid.counts = {11, 11, 11};
  s.start = std::vector<double>{-0.9, -0.9, 0.9};
  s.defaults.alphas = 14;
  s.defaults.cpi_iters = 15;
  s.defaults.generations = 60;
  return s;
}

Scenario ex3() {
  Scenario s = base("ex3_vortex", "vortex");
  s.domain = {{-1, -1}, {1, 1}};
  s.goal = {-0.5, 0.6};
  // A wall hanging from the top edge between the start region and the goal.
  s.obstacles = ObstacleSet({Polygon{{{-0.3, 0.3}, {-0.15, 0.3}, {-0.1, 1.0}, {-0.25, 1.0}}}});
  s.dt = 0.05;
  s.controls = {{-2, -2}, {2, 2}, {15, 15}};
  s.grid.type = GridSpec::Type::Unstructured;
  s.grid.target_count = 596;
  s.grid.boundary_samples = 95;
  s.grid.cpi_target_count = 796;
  s.start = std::vector<double>{0, 0.9};
  s.defaults.alphas = 15;
  s.defaults.cpi_iters = 30;
  s.defaults.generations = 100;
  return s;
}

Scenario ex4() {
  Scenario s = base("ex4_ocean", "lamb_sum");
  s.domain = {{0, 0}, {100, 100}};
  s.goal = {80, 80};
  s.obstacles = ObstacleSet({Polygon{{{36, 42}, {46, 40}, {50, 50}, {44, 58}, {35, 54}}},
                             Polygon{{{66, 46}, {76, 44}, {80, 52}, {72, 58}}}});
  s.dt = 1.0;
  s.controls = {{-3, -3}, {3, 3}, {15, 15}};
  s.grid.type = GridSpec::Type::Unstructured;
  s.grid.target_count = 3412;
  s.grid.boundary_samples = 120;
  s.start = std::vector<double>{16, 50};
  s.defaults.alphas = 15;
  s.defaults.cpi_iters = 30;
  s.defaults.generations = 60;
  return s;
}

Scenario ex5() {
  Scenario s = base("ex5_doublegyre", "double_gyre");
  s.domain = {{0, 0}, {2, 1}};
  s.goal = {1.5, 0.5};
  s.dt = 0.2;
  s.controls = {{-0.8, -0.8}, {0.8, 0.8}, {15, 15}};
  s.grid.counts = {15, 15, 25};
  s.time_period = 5.0;
  s.start = std::vector<double>{0.2, 0.2, 0.0};
  s.defaults.alphas = 12;
  s.defaults.cpi_iters = 14;
  s.defaults.generations = 30;
  s.defaults.n_cp = 17;
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names{"ex1_obstacles", "ex2_linear3d", "ex3_vortex", "ex4_ocean",
                                              "ex5_doublegyre"};
  return names;
}

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  if (name == "ex1_obstacles")
    s = ex1();
  else if (name == "ex2_linear3d")
    s = ex2();
  else if (name == "ex3_vortex")
    s = ex3();
  else if (name == "ex4_ocean")
    s = ex4();
  else if (name == "ex5_doublegyre")
    s = ex5();
  else
    throw ConfigError("unknown scenario '" + name + "' (builtins: " + join(builtin_scenario_names()) + ")");
  s.validate();
  return s;
}

Scenario resolve_scenario(const std::string& name_or_path) {
  for (const auto& n : builtin_scenario_names())
    if (n == name_or_path) return builtin_scenario(n);
  if (std::filesystem::exists(name_or_path)) return load_scenario(name_or_path);
  throw ConfigError("unknown scenario '" + name_or_path + "': not a file and not a builtin (builtins: " +
                    join(builtin_scenario_names()) + ")");
}

void Scenario::validate() const {
  if (version != 1) throw ConfigError("version: only version 1 is supported");
  if (name.empty()) throw ConfigError("name: must not be empty");
  const int n = domain.dim();
  if (n < 1 || domain.hi.size() != domain.lo.size()) throw ConfigError("domain: lo and hi must have the same length");
  for (int k = 0; k < n; ++k)
    if (!(domain.lo[k] < domain.hi[k])) throw ConfigError("domain: lo must be below hi on every axis");
  if (static_cast<int>(goal.size()) != n) throw ConfigError("goal: expected " + std::to_string(n) + " coordinates");
  State g(n);
  for (int k = 0; k < n; ++k) g(k) = goal[static_cast<std::size_t>(k)];
  if (!domain.contains(g, 0.0)) throw ConfigError("goal: lies outside the domain");
  if (obstacles.contains(g)) throw ConfigError("goal: lies inside an obstacle");
  if (!(dt > 0.0)) throw ConfigError("dt: must be positive");
  controls.validate();
  if (time_period && !(*time_period > 0.0)) throw ConfigError("time_period: must be positive");

  const DynamicsModel model = make_model(*this);
  if (model.spatial_dim() != n) throw ConfigError("dynamics: state dimension does not match the domain");
  if (model.control_dim() != controls.dim()) throw ConfigError("controls: dimension does not match the dynamics");

  const int grid_dim = n + (time_period ? 1 : 0);
  if (grid.type == GridSpec::Type::Structured) {
    if (static_cast<int>(grid.counts.size()) != grid_dim)
      throw ConfigError("grid.counts: expected " + std::to_string(grid_dim) + " counts");
    for (int c : grid.counts)
      if (c < 2) throw ConfigError("grid.counts: each count must be at least 2");
  } else {
    if (n != 2 || time_period) throw ConfigError("grid.type: unstructured grids require a static 2-D scenario");
    if (grid.target_count <= 3) throw ConfigError("grid.target_count: must exceed 3");
    if (grid.boundary_samples < 0) throw ConfigError("grid.boundary_samples: must be nonnegative");
    if (grid.cpi_target_count && *grid.cpi_target_count <= 3)
      throw ConfigError("grid.cpi_target_count: must exceed 3");
  }
  if (start) {
    if (static_cast<int>(start->size()) != grid_dim) throw ConfigError("start: expected " + std::to_string(grid_dim) + " coordinates");
  }
  const auto& d = defaults;
  if (d.alphas < 1 || !(d.alpha_lo > 0.0 && d.alpha_lo <= d.alpha_hi && d.alpha_hi <= 1.0))
    throw ConfigError("defaults: alpha settings must satisfy 0 < alpha_lo <= alpha_hi <= 1");
  if (d.cpi_iters < 1 || d.population < 4 || d.generations < 0 || d.n_cp < 0 || d.n_cp + 3 > d.population ||
      d.n_par < 2 || !(d.sigma >= 0.0))
    throw ConfigError("defaults: invalid solver defaults");
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = s.version;
  j["name"] = s.name;
  json params = json::object();
  for (const auto& [k, v] : s.params) {
    if (v.size() == 1)
      params[k] = v[0];
    else
      params[k] = v;
  }
  j["dynamics"] = {{"name", s.dynamics}, {"params", params}};
  j["domain"] = {{"lo", s.domain.lo}, {"hi", s.domain.hi}};
  j["goal"] = s.goal;
  json obstacles = json::array();
  for (const auto& shape : s.obstacles.shapes()) obstacles.push_back(shape_json(shape));
  j["obstacles"] = obstacles;
  j["dt"] = s.dt;
  json controls = {{"lo", s.controls.lo}, {"hi", s.controls.hi}};
  if (!s.controls.counts.empty()) controls["counts"] = s.controls.counts;
  j["controls"] = controls;
  if (s.grid.type == GridSpec::Type::Structured) {
    j["grid"] = {{"type", "structured"}, {"counts", s.grid.counts}};
  } else {
    json g = {{"type", "unstructured"}, {"target_count", s.grid.target_count},
              {"boundary_samples", s.grid.boundary_samples}};
    if (s.grid.cpi_target_count) g["cpi_target_count"] = *s.grid.cpi_target_count;
    j["grid"] = g;
  }
  if (s.time_period) j["time_period"] = *s.time_period;
  if (s.start) j["start"] = *s.start;
  const auto& d = s.defaults;
  j["defaults"] = {{"alphas", d.alphas},           {"alpha_lo", d.alpha_lo},       {"alpha_hi", d.alpha_hi},
                   {"cpi_iters", d.cpi_iters},     {"population", d.population}, {"generations", d.generations},
                   {"n_cp", d.n_cp},               {"n_par", d.n_par},           {"sigma", d.sigma}};
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: malformed JSON: ") + e.what());
  }
  check_keys(j, "", {"version", "name", "dynamics", "domain", "goal", "obstacles", "dt", "controls", "grid",
                     "time_period", "start", "defaults"});
  Scenario s;
  s.version = integer(field(j, "", "version"), "version");
  const json& name = field(j, "", "name");
  if (!name.is_string()) throw ConfigError("name: expected a string");
  s.name = name.get<std::string>();

  const json& dyn = field(j, "", "dynamics");
  check_keys(dyn, "dynamics", {"name", "params"});
  const json& dyn_name = field(dyn, "dynamics", "name");
  if (!dyn_name.is_string()) throw ConfigError("dynamics.name: expected a string");
  s.dynamics = dyn_name.get<std::string>();
  s.params = builtin_flow_defaults(s.dynamics);
  if (dyn.contains("params")) {
    const json& params = dyn.at("params");
    if (!params.is_object()) throw ConfigError("dynamics.params: expected an object");
    for (const auto& [key, value] : params.items()) {
      const std::string path = "dynamics.params." + key;
      if (!s.params.count(key)) throw ConfigError(path + ": unknown key");
      s.params[key] = value.is_array() ? numbers(value, path) : std::vector<double>{number(value, path)};
    }
  }

  const json& domain = field(j, "", "domain");
  check_keys(domain, "domain", {"lo", "hi"});
  s.domain = {numbers(field(domain, "domain", "lo"), "domain.lo"), numbers(field(domain, "domain", "hi"), "domain.hi")};
  s.goal = numbers(field(j, "", "goal"), "goal");

  if (j.contains("obstacles")) {
    const json& obs = j.at("obstacles");
    if (!obs.is_array()) throw ConfigError("obstacles: expected an array");
    std::vector<Shape> shapes;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      shapes.push_back(parse_shape(obs[i], path));
      try {
        validate(shapes.back());
      } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
      }
    }
    s.obstacles = ObstacleSet(std::move(shapes));
  }

  s.dt = number(field(j, "", "dt"), "dt");

  const json& controls = field(j, "", "controls");
  check_keys(controls, "controls", {"lo", "hi", "counts"});
  s.controls.lo = numbers(field(controls, "controls", "lo"), "controls.lo");
  s.controls.hi = numbers(field(controls, "controls", "hi"), "controls.hi");
  if (controls.contains("counts")) s.controls.counts = integers(controls.at("counts"), "controls.counts");

  const json& grid = field(j, "", "grid");
  const json& type = field(grid, "grid", "type");
  if (type == "structured") {
    check_keys(grid, "grid", {"type", "counts"});
    s.grid.type = GridSpec::Type::Structured;
    s.grid.counts = integers(field(grid, "grid", "counts"), "grid.counts");
  } else if (type == "unstructured") {
    check_keys(grid, "grid", {"type", "target_count", "boundary_samples", "cpi_target_count"});
    s.grid.type = GridSpec::Type::Unstructured;
    s.grid.target_count = integer(field(grid, "grid", "target_count"), "grid.target_count");
    s.grid.boundary_samples =
        grid.contains("boundary_samples") ? integer(grid.at("boundary_samples"), "grid.boundary_samples") : 0;
    if (grid.contains("cpi_target_count"))
      s.grid.cpi_target_count = integer(grid.at("cpi_target_count"), "grid.cpi_target_count");
  } else {
    throw ConfigError("grid.type: expected \"structured\" or \"unstructured\"");
  }

  if (j.contains("time_period")) s.time_period = number(j.at("time_period"), "time_period");
  if (j.contains("start")) s.start = numbers(j.at("start"), "start");
  if (j.contains("defaults")) {
    const json& d = j.at("defaults");
    check_keys(d, "defaults", {"alphas", "alpha_lo", "alpha_hi", "cpi_iters", "population", "generations", "n_cp",
                               "n_par", "sigma"});
    auto& o = s.defaults;
    auto get_int = [&](const char* key, int& out) {
      if (d.contains(key)) out = integer(d.at(key), sub("defaults", key));
    };
    auto get_num = [&](const char* key, double& out) {
      if (d.contains(key)) out = number(d.at(key), sub("defaults", key));
    };
    get_int("alphas", o.alphas);
    get_num("alpha_lo", o.alpha_lo);
    get_num("alpha_hi", o.alpha_hi);
    get_int("cpi_iters", o.cpi_iters);
    get_int("population", o.population);
    get_int("generations", o.generations);
    get_int("n_cp", o.n_cp);
    get_int("n_par", o.n_par);
    get_num("sigma", o.sigma);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file '" + path + "'");
  out << scenario_to_json(scenario);
  if (!out) throw IoError("failed writing scenario file '" + path + "'");
}

DynamicsModel make_model(const Scenario& scenario) {
  DynamicsModel model = builtin_flow(scenario.dynamics, scenario.params);
  if (scenario.time_period) return augment_time(model, *scenario.time_period);
  return model;
}

State goal_state(const Scenario& scenario) {
  State g(static_cast<Eigen::Index>(scenario.goal.size()));
  for (std::size_t k = 0; k < scenario.goal.size(); ++k) g(static_cast<Eigen::Index>(k)) = scenario.goal[k];
  return g;
}

SimplicialGrid make_grid(const Scenario& scenario, bool for_cpi) {
  const State goal = goal_state(scenario);
  if (scenario.grid.type == GridSpec::Type::Structured) {
    DomainBox box = scenario.domain;
    if (scenario.time_period) {
      box.lo.push_back(0.0);
      box.hi.push_back(*scenario.time_period);
    }
    return build_structured_grid(box, scenario.grid.counts, goal, scenario.obstacles, scenario.time_period);
  }
  const int target = for_cpi && scenario.grid.cpi_target_count ? *scenario.grid.cpi_target_count
                                                               : scenario.grid.target_count;
  return build_unstructured_grid(scenario.domain, target, goal, scenario.obstacles, scenario.grid.boundary_samples);
}

}  // namespace flowplan
