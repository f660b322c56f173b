#include "flowplan/dynamics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace flowplan;
using testing_support::Gen;

namespace {

DynamicsModel constant_flow(const State& c) {
  const int n = static_cast<int>(c.size());
  return DynamicsModel(
      n, n, [c](const State&, double) { return c; },
      [n](const State&) { return SmallMatrix(SmallMatrix::Identity(n, n)); });
}

DynamicsModel scalar_linear(double lambda) {
  return DynamicsModel(
      1, 1, [lambda](const State& x, double) { return State(lambda * x); },
      [](const State&) { return SmallMatrix(SmallMatrix::Zero(1, 1)); });
}

}  // namespace

TEST(Trapezoid, ConstantFlowIsExact) {
  const auto m = constant_flow(make_state({0.3, -0.7}));
  const auto r = trapezoid_step(m, make_state({1, 2}), make_state({0, 0}), 0.5);
  EXPECT_FALSE(r.approximate);
  EXPECT_NEAR(r.state(0), 1.15, 1e-14);
  EXPECT_NEAR(r.state(1), 1.65, 1e-14);
}

TEST(Trapezoid, ScalarLinearClosedForm) {
  const auto m = scalar_linear(-1.0);
  for (double dt : {0.05, 0.2, 1.0}) {
    const auto r = trapezoid_step(m, make_state({2.0}), make_state({0.0}), dt);
    EXPECT_NEAR(r.state(0), 2.0 * (1 - dt / 2) / (1 + dt / 2), 1e-10 * 3);
  }
}

TEST(Trapezoid, ZeroFlowMovesByControl) {
  const auto m = builtin_flow("zero");
  const auto r = trapezoid_step(m, make_state({1, 1}), make_state({0.2, -0.1}), 2.0);
  EXPECT_NEAR(r.state(0), 1.4, 1e-15);
  EXPECT_NEAR(r.state(1), 0.8, 1e-15);
}

TEST(Trapezoid, LocalErrorIsThirdOrder) {
  const auto m = scalar_linear(-1.0);
  double previous = 0;
  for (int k = 0; k < 5; ++k) {
    const double dt = 0.2 / std::pow(2.0, k);
    const double err = std::abs(trapezoid_step(m, make_state({1.0}), make_state({0.0}), dt).state(0) - std::exp(-dt));
    if (k > 0) {
      const double ratio = previous / err;
      EXPECT_GT(ratio, 7.0);
      EXPECT_LT(ratio, 9.0);
    }
    previous = err;
  }
}

TEST(Trapezoid, StiffStepFallsBackToHeun) {
  const auto m = scalar_linear(-50.0);
  const auto r = trapezoid_step(m, make_state({1.0}), make_state({0.0}), 1.0);
  EXPECT_TRUE(r.approximate);
  // Heun: x + dt/2 (f(x) + f(x + dt f(x))) = 1 + 0.5 (-50 + -50 * -49).
  EXPECT_DOUBLE_EQ(r.state(0), 1 + 0.5 * (-50 + 2450));
}

TEST(Trapezoid, RejectsNonPositiveStep) {
  EXPECT_THROW(trapezoid_step(builtin_flow("zero"), make_state({0, 0}), make_state({0, 0}), 0.0), ConfigError);
}

TEST(Controls, EnumerationCounts) {
  EXPECT_EQ(enumerate_controls({{-2, -2}, {2, 2}, {15, 15}}).size(), 225u);
  EXPECT_EQ(enumerate_controls({{-2, -2, -2}, {2, 2, 2}, {9, 9, 9}}).size(), 729u);
  const auto single = enumerate_controls({{0, 0}, {0, 0}, {1, 1}});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].norm(), 0.0);
}

TEST(Controls, EnumerationOrderAxisZeroSlowest) {
  const auto c = enumerate_controls({{0, 10}, {1, 12}, {2, 3}});
  ASSERT_EQ(c.size(), 6u);
  EXPECT_EQ(c[0], make_state({0, 10}));
  EXPECT_EQ(c[1], make_state({0, 11}));
  EXPECT_EQ(c[2], make_state({0, 12}));
  EXPECT_EQ(c[3], make_state({1, 10}));
  EXPECT_EQ(c[5], make_state({1, 12}));
  const auto mid = enumerate_controls({{-1}, {3}, {1}});
  EXPECT_EQ(mid[0](0), 1.0);
}

TEST(Controls, ZeroControlIndex) {
  const auto c = enumerate_controls({{-2, -2}, {2, 2}, {5, 5}});
  EXPECT_EQ(zero_control_index(c), 12);
  EXPECT_EQ(c[12].norm(), 0.0);
  EXPECT_EQ(zero_control_index(enumerate_controls({{-1}, {1}, {2}})), 0);
}

TEST(Controls, ValidationAndClamp) {
  EXPECT_THROW((ControlSet{{1}, {0}, {}}).validate(), ConfigError);
  EXPECT_THROW((ControlSet{{0}, {1}, {0}}).validate(), ConfigError);
  const ControlSet box{{-1, -1}, {1, 2}, {}};
  EXPECT_EQ(box.clamp(make_state({-3, 5})), make_state({-1, 2}));
  EXPECT_EQ(box.half_range(), make_state({1, 1.5}));
  EXPECT_TRUE(box.contains(make_state({1, 2})));
  EXPECT_FALSE(box.contains(make_state({1.1, 0})));
}

TEST(BuiltinFlow, VortexCenterIsStill) {
  const auto m = builtin_flow("vortex");
  EXPECT_EQ(m.flow(make_state({0.5, 0.0})).norm(), 0.0);
  // Away from the center the magnitude is |f| / (0.01 + |f|) < 1.
  const State f = m.flow(make_state({0.0, 0.5}));
  const double dx = -0.5, dy = 0.5;
  const double bx = -dx + 3 * dy, by = -3 * dx - dy;
  const double n = std::hypot(bx, by);
  EXPECT_NEAR(f(0), bx / (0.01 + n), 1e-15);
  EXPECT_NEAR(f(1), by / (0.01 + n), 1e-15);
}

TEST(BuiltinFlow, DoubleGyreAtTimeZero) {
  const auto m = builtin_flow("double_gyre");
  const double pi = std::numbers::pi;
  Gen gen(3);
  for (int i = 0; i < 20; ++i) {
    const double x = gen.uniform(0, 2), y = gen.uniform(0, 1);
    const State f = m.flow(make_state({x, y}));
    EXPECT_NEAR(f(0), -0.1 * pi * std::sin(pi * x) * std::cos(pi * y), 1e-14);
    EXPECT_NEAR(f(1), 0.1 * pi * std::cos(pi * x) * std::sin(pi * y), 1e-14);
  }
  ASSERT_TRUE(m.natural_period().has_value());
  EXPECT_NEAR(*m.natural_period(), 5.0, 1e-14);
}

TEST(BuiltinFlow, DoubleGyreIsPeriodic) {
  const auto m = augment_time(builtin_flow("double_gyre"), 5.0);
  Gen gen(4);
  for (int i = 0; i < 20; ++i) {
    const double x = gen.uniform(0, 2), y = gen.uniform(0, 1), t = gen.uniform(0, 5);
    const State a = m.flow(make_state({x, y, t}));
    const State b = m.flow(make_state({x, y, t + 5.0}));
    EXPECT_NEAR((a - b).norm(), 0.0, 1e-12);
    EXPECT_EQ(a(2), 1.0);
  }
}

TEST(BuiltinFlow, LambVortexLimits) {
  const auto m = builtin_flow("lamb_sum");
  const double centers[4][2] = {{20, 30}, {60, 70}, {27, 65}, {60, 30}};
  for (const auto& c : centers) {
    EXPECT_TRUE(m.flow(make_state({c[0], c[1]})).allFinite());
    const State near = m.flow(make_state({c[0] + 1e-6, c[1]}));
    EXPECT_TRUE(near.allFinite());
    EXPECT_LT(near.norm(), 10.0);
  }
  double previous = m.flow(make_state({1e3, 1e3})).norm();
  for (double r : {1e4, 1e5, 1e6}) {
    const double now = m.flow(make_state({r, r})).norm();
    EXPECT_LT(now, previous);
    previous = now;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(BuiltinFlow, SingleLambVortexMatchesFormula) {
  const auto m = builtin_flow("lamb_sum", {{"gamma", {50}}, {"delta", {10}}, {"centers", {0, 0}}});
  const double x = 3, y = 4, r2 = 25;
  const double speed = 50 * (1 - std::exp(-r2 / 100)) / (2 * std::numbers::pi * std::sqrt(r2));
  const State f = m.flow(make_state({x, y}));
  EXPECT_NEAR(f.norm(), speed, 1e-14);
  EXPECT_NEAR(f(0) * x + f(1) * y, 0.0, 1e-14);
}

TEST(BuiltinFlow, DecompositionHoldsForEveryBuiltin) {
  Gen gen(9);
  for (const auto& name : builtin_flow_names()) {
    auto m = builtin_flow(name);
    if (name == "double_gyre") m = augment_time(m, 5.0);
    for (int i = 0; i < 100; ++i) {
      State x(m.state_dim());
      for (int k = 0; k < m.state_dim(); ++k) x(k) = gen.uniform(-1, 1);
      Control u(m.control_dim());
      for (int k = 0; k < m.control_dim(); ++k) u(k) = gen.uniform(-2, 2);
      const State expected = m.flow(x) + m.steering(x) * u;
      EXPECT_EQ(m.rhs(x, u), expected) << name;
    }
  }
}

TEST(BuiltinFlow, LinearUsesStatedMatrices) {
  const auto m = builtin_flow("linear");
  const auto p = builtin_flow_defaults("linear");
  const State x = make_state({0.1, -0.2, 0.3});
  const auto& a = p.at("A");
  const auto& b = p.at("B");
  const State f = m.flow(x);
  const SmallMatrix s = m.steering(x);
  for (int i = 0; i < 3; ++i) {
    double expect = 0;
    for (int j = 0; j < 3; ++j) {
      expect += a[3 * i + j] * x(j);
      EXPECT_EQ(s(i, j), b[3 * i + j]);
    }
    EXPECT_NEAR(f(i), expect, 1e-15);
  }
}

TEST(BuiltinFlow, ErrorsAreConfigErrors) {
  EXPECT_THROW(builtin_flow("tornado"), ConfigError);
  EXPECT_THROW(builtin_flow("vortex", {{"spin", {1}}}), ConfigError);
  EXPECT_THROW(builtin_flow("lamb_sum", {{"gamma", {1, 2}}}), ConfigError);
}

TEST(AugmentTime, WrapsModuloPeriod) {
  const auto m = augment_time(builtin_flow("zero"), 5.0);
  EXPECT_EQ(m.state_dim(), 3);
  EXPECT_EQ(m.spatial_dim(), 2);
  const auto r = trapezoid_step(m, make_state({0, 0, 4.9}), make_state({0, 0}), 0.2);
  EXPECT_NEAR(r.state(2), 0.1, 1e-12);
  EXPECT_EQ(m.steering(make_state({0, 0, 1})).row(2).norm(), 0.0);
  EXPECT_THROW(augment_time(m, 5.0), ConfigError);
}

TEST(AugmentTime, StaticModelKeepsSpatialPath) {
  const auto base = builtin_flow("vortex");
  const auto aug = augment_time(base, 3.0);
  Gen gen(12);
  for (int i = 0; i < 20; ++i) {
    const State x = make_state({gen.uniform(-1, 1), gen.uniform(-1, 1)});
    const Control u = make_state({gen.uniform(-2, 2), gen.uniform(-2, 2)});
    const State a = trapezoid_step(base, x, u, 0.05).state;
    const State b = trapezoid_step(aug, make_state({x(0), x(1), gen.uniform(0, 3)}), u, 0.05).state;
    EXPECT_NEAR((a - b.head(2)).norm(), 0.0, 1e-9);
  }
}
