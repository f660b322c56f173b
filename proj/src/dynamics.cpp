#include "flowplan/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flowplan {
namespace {

constexpr int kMaxIterations = 50;
constexpr double kResidualTol = 1e-10;

SmallMatrix identity(int n) { return SmallMatrix::Identity(n, n); }

double scalar(const FlowParams& p, const std::string& key) { return p.at(key).at(0); }

void require_size(const FlowParams& p, const std::string& key, std::size_t n) {
  if (p.at(key).size() != n)
    throw ConfigError("dynamics.params." + key + ": expected " + std::to_string(n) + " values");
}

FlowParams merge(const std::string& name, const FlowParams& given) {
  FlowParams p = builtin_flow_defaults(name);
  for (const auto& [key, value] : given) {
    if (!p.count(key)) throw ConfigError("dynamics.params." + key + ": unknown parameter for flow '" + name + "'");
    p[key] = value;
  }
  return p;
}

}  // namespace

void ControlSet::validate() const {
  if (lo.empty() || lo.size() != hi.size() || static_cast<int>(lo.size()) > kMaxDim)
    throw ConfigError("controls: lo and hi must have the same length (1..4)");
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(lo[k] <= hi[k])) throw ConfigError("controls: lo must not exceed hi");
  if (!counts.empty()) {
    if (counts.size() != lo.size()) throw ConfigError("controls.counts: one count per axis required");
    for (int c : counts)
      if (c < 1) throw ConfigError("controls.counts: counts must be positive");
  }
}

Control ControlSet::clamp(const Control& u) const {
  Control v = u;
  for (int k = 0; k < dim(); ++k) v(k) = std::clamp(v(k), lo[k], hi[k]);
  return v;
}

Control ControlSet::half_range() const {
  Control h(dim());
  for (int k = 0; k < dim(); ++k) h(k) = 0.5 * (hi[k] - lo[k]);
  return h;
}

bool ControlSet::contains(const Control& u, double tol) const {
  if (u.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k)
    if (u(k) < lo[k] - tol || u(k) > hi[k] + tol) return false;
  return true;
}

std::vector<Control> enumerate_controls(const ControlSet& set) {
  set.validate();
  if (set.counts.empty()) throw ConfigError("controls.counts: a discretization is required");
  const int m = set.dim();
  std::size_t total = 1;
  for (int c : set.counts) total *= static_cast<std::size_t>(c);
  auto value = [&](int k, int i) {
    const int c = set.counts[k];
    if (c == 1) return 0.5 * (set.lo[k] + set.hi[k]);
    if (i == c - 1) return set.hi[k];
    return set.lo[k] + i * (set.hi[k] - set.lo[k]) / (c - 1);
  };
  std::vector<Control> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Control u(m);
    std::size_t rem = flat;
    for (int k = m - 1; k >= 0; --k) {
      const auto c = static_cast<std::size_t>(set.counts[k]);
      u(k) = value(k, static_cast<int>(rem % c));
      rem /= c;
    }
    out.push_back(u);
  }
  return out;
}

int zero_control_index(const std::vector<Control>& controls) {
  if (controls.empty()) throw ConfigError("empty control list");
  int best = 0;
  for (int i = 1; i < static_cast<int>(controls.size()); ++i)
    if (controls[i].squaredNorm() < controls[best].squaredNorm()) best = i;
  return best;
}

DynamicsModel::DynamicsModel(int state_dim, int control_dim, FlowFn flow, SteeringFn steering,
                             std::optional<double> natural_period)
    : state_dim_(state_dim),
      control_dim_(control_dim),
      flow_(std::move(flow)),
      steering_(std::move(steering)),
      period_(natural_period) {
  if (state_dim_ < 1 || state_dim_ > kMaxDim || control_dim_ < 1 || control_dim_ > kMaxDim)
    throw ConfigError("dynamics: state and control dimensions must be in 1..4");
}

State DynamicsModel::flow(const State& x) const {
  if (!augmented_) return flow_(x, 0.0);
  const int n = spatial_dim();
  State out(state_dim_);
  out.head(n) = flow_(x.head(n), x(n));
  out(n) = 1.0;
  return out;
}

SmallMatrix DynamicsModel::steering(const State& x) const {
  if (!augmented_) return steering_(x);
  const int n = spatial_dim();
  SmallMatrix out = SmallMatrix::Zero(state_dim_, control_dim_);
  out.topRows(n) = steering_(x.head(n));
  return out;
}

State DynamicsModel::rhs(const State& x, const Control& u) const {
  return flow(x) + steering(x) * u;
}

State DynamicsModel::wrap(const State& x) const {
  if (!augmented_) return x;
  State y = x;
  const int t = state_dim_ - 1;
  double r = std::fmod(y(t), *period_);
  if (r < 0.0) r += *period_;
  if (r >= *period_) r = 0.0;
  y(t) = r;
  return y;
}

DynamicsModel augment_time(const DynamicsModel& model, double period) {
  if (model.augmented_) throw ConfigError("dynamics: model is already time-augmented");
  if (!(period > 0.0)) throw ConfigError("time_period must be positive");
  if (model.state_dim_ + 1 > kMaxDim) throw ConfigError("dynamics: augmented dimension exceeds 4");
  DynamicsModel out = model;
  out.state_dim_ = model.state_dim_ + 1;
  out.period_ = period;
  out.augmented_ = true;
  return out;
}

StepResult trapezoid_step(const DynamicsModel& model, const State& x, const Control& u, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const State fk = model.rhs(x, u);
  State y = x + dt * fk;
  const double tol = kResidualTol * (1.0 + x.norm());
  for (int it = 0; it < kMaxIterations; ++it) {
    const State next = x + 0.5 * dt * (fk + model.rhs(y, u));
    const double residual = (next - y).norm();
    y = next;
    if (residual <= tol) return {model.wrap(y), false};
  }
  const State predictor = x + dt * fk;
  return {model.wrap(x + 0.5 * dt * (fk + model.rhs(predictor, u))), true};
}

const std::vector<std::string>& builtin_flow_names() {
  static const std::vector<std::string> names{"zero", "linear", "vortex", "lamb_sum", "double_gyre"};
  return names;
}

FlowParams builtin_flow_defaults(const std::string& name) {
  if (name == "zero") return {{"dim", {2}}};
  if (name == "linear")
    return {{"A", {-1, 1.2094, 0.6937, -1.2094, -1, 2.6564, -0.6937, -2.6564, -1}},
            {"B", {-0.2415, 0.3971, 0.8855, -0.9701, -0.0744, -0.2312, -0.0259, -0.9148, 0.4031}}};
  if (name == "vortex") return {{"A", {-1, 3, -3, -1}}, {"center", {0.5, 0.0}}, {"regularizer", {0.01}}};
  if (name == "lamb_sum")
    return {{"gamma", {-50, 50, 50, 50}},
            {"delta", {10, 10, 10, 10}},
            {"centers", {20, 30, 60, 70, 27, 65, 60, 30}}};
  if (name == "double_gyre")
    return {{"theta", {0.1}}, {"epsilon", {0.25}}, {"omega", {2.0 * std::numbers::pi / 5.0}}};
  std::string valid;
  for (const auto& n : builtin_flow_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("dynamics.name: unknown flow '" + name + "' (valid: " + valid + ")");
}

DynamicsModel builtin_flow(const std::string& name, const FlowParams& given) {
  const FlowParams p = merge(name, given);

  if (name == "zero") {
    const double d = scalar(p, "dim");
    if (d != std::round(d) || d < 1 || d > kMaxDim) throw ConfigError("dynamics.params.dim: expected an integer in 1..4");
    const int n = static_cast<int>(d);
    return DynamicsModel(
        n, n, [n](const State&, double) { return State(State::Zero(n)); },
        [n](const State&) { return identity(n); });
  }

  if (name == "linear") {
    const auto& a = p.at("A");
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.size()))));
    if (n < 1 || n > kMaxDim || static_cast<std::size_t>(n * n) != a.size())
      throw ConfigError("dynamics.params.A: expected a square matrix of size 1..4");
    const auto& b = p.at("B");
    if (b.empty() || b.size() % static_cast<std::size_t>(n) != 0 || b.size() / n > kMaxDim)
      throw ConfigError("dynamics.params.B: expected n rows");
    const int m = static_cast<int>(b.size()) / n;
    SmallMatrix A(n, n), B(n, m);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) A(r, c) = a[static_cast<std::size_t>(r * n + c)];
      for (int c = 0; c < m; ++c) B(r, c) = b[static_cast<std::size_t>(r * m + c)];
    }
    return DynamicsModel(
        n, m, [A](const State& x, double) { return State(A * x); }, [B](const State&) { return B; });
  }

  if (name == "vortex") {
    require_size(p, "A", 4);
    require_size(p, "center", 2);
    const auto& a = p.at("A");
    const auto& c = p.at("center");
    const double reg = scalar(p, "regularizer");
    if (!(reg > 0.0)) throw ConfigError("dynamics.params.regularizer: must be positive");
    return DynamicsModel(
        2, 2,
        [a, c, reg](const State& x, double) {
          const double dx = x(0) - c[0], dy = x(1) - c[1];
          const double fx = a[0] * dx + a[1] * dy;
          const double fy = a[2] * dx + a[3] * dy;
          const double s = 1.0 / (reg + std::hypot(fx, fy));
          return make_state({s * fx, s * fy});
        },
        [](const State&) { return identity(2); });
  }

  if (name == "lamb_sum") {
    const auto& gamma = p.at("gamma");
    const std::size_t k = gamma.size();
    require_size(p, "delta", k);
    require_size(p, "centers", 2 * k);
    const auto& delta = p.at("delta");
    const auto& centers = p.at("centers");
    for (double d : delta)
      if (!(d > 0.0)) throw ConfigError("dynamics.params.delta: radii must be positive");
    return DynamicsModel(
        2, 2,
        [gamma, delta, centers, k](const State& x, double) {
          double fx = 0.0, fy = 0.0;
          for (std::size_t i = 0; i < k; ++i) {
            const double dx = x(0) - centers[2 * i];
            const double dy = x(1) - centers[2 * i + 1];
            const double r2 = dx * dx + dy * dy;
            if (r2 == 0.0) continue;  // analytic limit at the core is zero
            const double s = gamma[i] * (-std::expm1(-r2 / (delta[i] * delta[i]))) /
                             (2.0 * std::numbers::pi * r2);
            fx -= s * dy;
            fy += s * dx;
          }
          return make_state({fx, fy});
        },
        [](const State&) { return identity(2); });
  }

  // double_gyre
  const double theta = scalar(p, "theta");
  const double eps = scalar(p, "epsilon");
  const double omega = scalar(p, "omega");
  if (!(omega > 0.0)) throw ConfigError("dynamics.params.omega: must be positive");
  const double pi = std::numbers::pi;
  return DynamicsModel(
      2, 2,
      [theta, eps, omega, pi](const State& x, double t) {
        const double a = eps * std::sin(omega * t);
        const double b = 1.0 - 2.0 * eps * std::sin(omega * t);
        const double phase = pi * (a * x(0) * x(0) + b * x(0));
        return make_state({-theta * pi * std::sin(phase) * std::cos(pi * x(1)),
                           theta * pi * (2.0 * a * x(0) + b) * std::cos(phase) * std::sin(pi * x(1))});
      },
      [](const State&) { return identity(2); }, 2.0 * pi / omega);
}

}  // namespace flowplan
