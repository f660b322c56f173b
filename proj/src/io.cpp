#include "flowplan/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace flowplan {

using json = nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

void append_vector(std::string& out, const State& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) out += "," + format_double(v(k));
}

std::string axis_header(const char* prefix, Eigen::Index n) {
  std::string out;
  for (Eigen::Index k = 0; k < n; ++k) out += std::string(",") + prefix + std::to_string(k);
  return out;
}

// nlohmann prints doubles with enough digits to round-trip.
json vector_json(const State& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

}  // namespace

std::string grid_to_json(const SimplicialGrid& grid) {
  json points = json::array();
  for (const auto& p : grid.points()) points.push_back(vector_json(p));
  json simplices = json::array();
  for (const auto& s : grid.simplices()) {
    json row = json::array();
    for (int j = 0; j <= grid.dim(); ++j) row.push_back(s[static_cast<std::size_t>(j)]);
    simplices.push_back(row);
  }
  json flags = json::array();
  for (char f : grid.obstacle_flags()) flags.push_back(f ? 1 : 0);
  json j;
  j["dim"] = grid.dim();
  j["domain"] = {{"lo", grid.domain().lo}, {"hi", grid.domain().hi}};
  if (grid.period()) j["period"] = *grid.period();
  j["points"] = points;
  j["simplices"] = simplices;
  j["goal_index"] = grid.goal_index();
  j["goal_indices"] = grid.goal_indices();
  j["obstacle_flags"] = flags;
  j["boundary_points"] = grid.boundary_points();
  return j.dump() + "\n";
}

SimplicialGrid grid_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int dim = j.at("dim").get<int>();
    std::vector<State> points;
    for (const auto& row : j.at("points")) {
      const auto v = row.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != dim) throw IoError("grid file: point of wrong dimension");
      State x(dim);
      for (int k = 0; k < dim; ++k) x(k) = v[static_cast<std::size_t>(k)];
      points.push_back(x);
    }
    std::vector<SimplexIndices> simplices;
    for (const auto& row : j.at("simplices")) {
      const auto v = row.get<std::vector<int>>();
      if (static_cast<int>(v.size()) != dim + 1) throw IoError("grid file: simplex of wrong size");
      SimplexIndices s{};
      std::copy(v.begin(), v.end(), s.begin());
      simplices.push_back(s);
    }
    std::vector<char> flags;
    for (int f : j.at("obstacle_flags").get<std::vector<int>>()) flags.push_back(f ? 1 : 0);
    DomainBox domain{j.at("domain").at("lo").get<std::vector<double>>(), j.at("domain").at("hi").get<std::vector<double>>()};
    std::optional<double> period;
    if (j.contains("period")) period = j.at("period").get<double>();
    std::vector<int> goals = j.contains("goal_indices") ? j.at("goal_indices").get<std::vector<int>>()
                                                         : std::vector<int>{j.at("goal_index").get<int>()};
    return SimplicialGrid(dim, std::move(points), std::move(simplices), std::move(goals), std::move(flags),
                          j.at("boundary_points").get<std::vector<int>>(), std::move(domain), period);
  } catch (const json::exception& e) {
    throw IoError(std::string("grid file: ") + e.what());
  }
}

std::string fields_csv(const SimplicialGrid& grid, const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields) {
  std::string out = "point" + axis_header("x", grid.dim()) + ",goal,obstacle";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += std::to_string(i);
    append_vector(out, grid.point(i));
    out += grid.is_goal(i) ? ",1" : ",0";
    out += grid.is_obstacle(i) ? ",1" : ",0";
    for (const Field* f : fields) out += "," + format_double((*f)[i]);
    out += "\n";
  }
  return out;
}

std::string policy_csv(const SimplicialGrid& grid, const PolicyField& policy) {
  const Eigen::Index m = policy.size() ? policy.controls.front().size() : 0;
  std::string out = "point" + axis_header("x", grid.dim()) + axis_header("u", m) + ",control_index\n";
  for (std::size_t i = 0; i < policy.size(); ++i) {
    out += std::to_string(i);
    append_vector(out, grid.point(i));
    append_vector(out, policy.controls[i]);
    out += "," + std::to_string(policy.index[i]) + "\n";
  }
  return out;
}

std::string trajectory_csv(const Trajectory& trajectory, int state_dim, int control_dim) {
  std::string out = "t" + axis_header("x", state_dim) + axis_header("u", control_dim) + "\n";
  for (const auto& row : trajectory.samples) {
    out += format_double(row.t);
    append_vector(out, row.state);
    append_vector(out, row.control);
    out += "\n";
  }
  return out;
}

std::string solution_to_json(const SolutionFile& s) {
  json controls = json::array();
  for (const auto& u : s.policy.controls) controls.push_back(vector_json(u));
  json j;
  j["scenario"] = s.scenario;
  j["method"] = s.method;
  j["cpi_grid"] = s.cpi_grid;
  j["alpha"] = s.alpha ? json(*s.alpha) : json(nullptr);
  j["avg_time"] = s.avg_time;
  j["avg_energy"] = s.avg_energy;
  j["controls"] = controls;
  j["control_index"] = s.policy.index;
  j["time"] = s.time;
  j["energy"] = s.energy;
  return j.dump() + "\n";
}

SolutionFile solution_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SolutionFile s;
    s.scenario = j.at("scenario").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.cpi_grid = j.at("cpi_grid").get<bool>();
    if (!j.at("alpha").is_null()) s.alpha = j.at("alpha").get<double>();
    s.avg_time = j.at("avg_time").get<double>();
    s.avg_energy = j.at("avg_energy").get<double>();
    for (const auto& row : j.at("controls")) {
      const auto v = row.get<std::vector<double>>();
      Control u(static_cast<Eigen::Index>(v.size()));
      for (std::size_t k = 0; k < v.size(); ++k) u(static_cast<Eigen::Index>(k)) = v[k];
      s.policy.controls.push_back(u);
    }
    s.policy.index = j.at("control_index").get<std::vector<int>>();
    s.time = j.at("time").get<Field>();
    s.energy = j.at("energy").get<Field>();
    if (s.policy.index.size() != s.policy.controls.size() || s.time.size() != s.policy.size() ||
        s.energy.size() != s.policy.size())
      throw IoError("solution file: inconsistent array lengths");
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("solution file: ") + e.what());
  }
}

}  // namespace flowplan
