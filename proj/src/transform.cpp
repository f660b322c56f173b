#include "flowplan/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flowplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_cost(double v, const char* what) {
  if (!(v >= 0.0)) throw std::domain_error(std::string(what) + ": expected a nonnegative value");
}

void require_unit(double h, const char* what) {
  if (!(h >= 0.0 && h <= 1.0))
    throw std::domain_error(std::string(what) + ": expected a value in [0, 1]");
}

}  // namespace

const char* to_string(TransformKind kind) {
  return kind == TransformKind::Harmonic ? "harmonic" : "kruzkov";
}

double harmonic(double v) {
  require_cost(v, "harmonic");
  if (std::isinf(v)) return 1.0;
  return v / (1.0 + v);
}

double harmonic_inverse(double h) {
  require_unit(h, "harmonic_inverse");
  if (h == 1.0) return kInf;
  return h / (1.0 - h);
}

double harmonic_shift(double h, double x) {
  require_unit(h, "harmonic_shift");
  require_cost(x, "harmonic_shift");
  // H(v + x) scaled through by 1 - h = 1 / (1 + v).
  const double c = x * (1.0 - h);
  return std::clamp((h + c) / (1.0 + c), 0.0, 1.0);
}

double harmonic_convex(double h_time, double h_energy, double alpha) {
  require_unit(h_time, "harmonic_convex");
  require_unit(h_energy, "harmonic_convex");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::domain_error("harmonic_convex: alpha must lie in [0, 1]");
  if (alpha == 1.0) return h_time;
  if (alpha == 0.0) return h_energy;
  // With a = 1 - h_time and b = 1 - h_energy the result is n / (a b + n),
  // n = alpha h_time b + (1 - alpha) h_energy a. All terms are nonnegative,
  // so nothing cancels near 1 and an input at 1 yields exactly 1.
  const double a = 1.0 - h_time;
  const double b = 1.0 - h_energy;
  const double n = alpha * h_time * b + (1.0 - alpha) * h_energy * a;
  const double d = a * b + n;
  if (d == 0.0) return h_time == 1.0 || h_energy == 1.0 ? 1.0 : 0.0;
  return std::clamp(n / d, 0.0, 1.0);
}

double kruzkov(double v) {
  require_cost(v, "kruzkov");
  if (std::isinf(v)) return 1.0;
  return -std::expm1(-v);
}

double kruzkov_inverse(double h) {
  require_unit(h, "kruzkov_inverse");
  if (h == 1.0) return kInf;
  return -std::log1p(-h);
}

double kruzkov_shift(double h, double x) {
  require_unit(h, "kruzkov_shift");
  require_cost(x, "kruzkov_shift");
  return std::clamp(1.0 - (1.0 - h) * std::exp(-x), 0.0, 1.0);
}

double transform(TransformKind kind, double v) {
  return kind == TransformKind::Harmonic ? harmonic(v) : kruzkov(v);
}

double transform_inverse(TransformKind kind, double h) {
  return kind == TransformKind::Harmonic ? harmonic_inverse(h) : kruzkov_inverse(h);
}

double transform_shift(TransformKind kind, double h, double x) {
  return kind == TransformKind::Harmonic ? harmonic_shift(h, x) : kruzkov_shift(h, x);
}

bool saturated(double h) { return 1.0 - h <= std::numeric_limits<double>::epsilon(); }

}  // namespace flowplan
