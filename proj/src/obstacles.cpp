#include "flowplan/obstacles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flowplan {
namespace {

constexpr double kOnBoundary = 1e-12;

double segment_distance(double px, double py, const std::array<double, 2>& a,
                        const std::array<double, 2>& b) {
  const double dx = b[0] - a[0];
  const double dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a[0] + t * dx), py - (a[1] + t * dy));
}

std::vector<std::array<double, 2>> box_corners(const Box& b) {
  return {{b.lo[0], b.lo[1]}, {b.hi[0], b.lo[1]}, {b.hi[0], b.hi[1]}, {b.lo[0], b.hi[1]}};
}

bool polygon_contains(const std::vector<std::array<double, 2>>& poly, double x, double y) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (segment_distance(x, y, poly[j], poly[i]) <= kOnBoundary) return true;
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > y) != (b[1] > y)) {
      const double xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

double polygon_boundary_distance(const std::vector<std::array<double, 2>>& poly, double x,
                                 double y) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    d = std::min(d, segment_distance(x, y, poly[j], poly[i]));
  return d;
}

std::vector<State> sample_loop(const std::vector<std::array<double, 2>>& poly, int count) {
  std::vector<State> out;
  if (count <= 0) return out;
  const std::size_t n = poly.size();
  std::vector<double> cumulative(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    cumulative[i + 1] = cumulative[i] + std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  const double total = cumulative[n];
  out.reserve(static_cast<std::size_t>(count));
  std::size_t edge = 0;
  for (int k = 0; k < count; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(count);
    while (edge + 1 < n && cumulative[edge + 1] <= s) ++edge;
    const auto& a = poly[edge];
    const auto& b = poly[(edge + 1) % n];
    const double len = cumulative[edge + 1] - cumulative[edge];
    const double t = len > 0.0 ? (s - cumulative[edge]) / len : 0.0;
    out.push_back(make_state({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}));
  }
  return out;
}

}  // namespace

void validate(const Shape& shape) {
  if (const auto* p = std::get_if<Polygon>(&shape)) {
    if (p->vertices.size() < 3) throw ConfigError("polygon obstacle needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t i = 0, j = p->vertices.size() - 1; i < p->vertices.size(); j = i++)
      area2 += p->vertices[j][0] * p->vertices[i][1] - p->vertices[i][0] * p->vertices[j][1];
    if (std::abs(area2) <= 0.0) throw ConfigError("polygon obstacle has zero area");
    return;
  }
  const auto& b = std::get<Box>(shape);
  if (b.lo.empty() || b.lo.size() != b.hi.size() || b.lo.size() > kMaxDim)
    throw ConfigError("box obstacle needs matching lo/hi of dimension 1.." +
                      std::to_string(kMaxDim));
  for (std::size_t k = 0; k < b.lo.size(); ++k)
    if (!(b.lo[k] < b.hi[k])) throw ConfigError("box obstacle needs lo < hi on every axis");
}

bool contains(const Shape& shape, const State& x) {
  if (const auto* p = std::get_if<Polygon>(&shape))
    return x.size() >= 2 && polygon_contains(p->vertices, x(0), x(1));
  const auto& b = std::get<Box>(shape);
  if (x.size() < static_cast<Eigen::Index>(b.lo.size())) return false;
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    if (x(i) < b.lo[k] - kOnBoundary || x(i) > b.hi[k] + kOnBoundary) return false;
  }
  return true;
}

double distance_to_boundary(const Shape& shape, const State& x) {
  if (const auto* p = std::get_if<Polygon>(&shape))
    return polygon_boundary_distance(p->vertices, x(0), x(1));
  const auto& b = std::get<Box>(shape);
  if (b.lo.size() == 2) return polygon_boundary_distance(box_corners(b), x(0), x(1));
  // n-D box: distance to the nearest face for interior points, Euclidean
  // distance to the box otherwise.
  double outside2 = 0.0;
  double inside = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    const double v = x(static_cast<Eigen::Index>(k));
    const double below = b.lo[k] - v;
    const double above = v - b.hi[k];
    const double out = std::max({below, above, 0.0});
    outside2 += out * out;
    inside = std::min(inside, std::min(v - b.lo[k], b.hi[k] - v));
  }
  return outside2 > 0.0 ? std::sqrt(outside2) : std::max(inside, 0.0);
}

double perimeter(const Shape& shape) {
  std::vector<std::array<double, 2>> loop;
  if (const auto* p = std::get_if<Polygon>(&shape)) {
    loop = p->vertices;
  } else {
    const auto& b = std::get<Box>(shape);
    if (b.lo.size() != 2) throw ConfigError("boundary sampling is only defined for 2-D shapes");
    loop = box_corners(b);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& a = loop[i];
    const auto& c = loop[(i + 1) % loop.size()];
    total += std::hypot(c[0] - a[0], c[1] - a[1]);
  }
  return total;
}

std::vector<State> sample_boundary(const Shape& shape, int count) {
  if (const auto* p = std::get_if<Polygon>(&shape)) return sample_loop(p->vertices, count);
  const auto& b = std::get<Box>(shape);
  if (b.lo.size() != 2) throw ConfigError("boundary sampling is only defined for 2-D shapes");
  return sample_loop(box_corners(b), count);
}

ObstacleSet::ObstacleSet(std::vector<Shape> shapes) : shapes_(std::move(shapes)) {
  for (const auto& s : shapes_) validate(s);
}

bool ObstacleSet::contains(const State& x) const {
  return std::any_of(shapes_.begin(), shapes_.end(),
                     [&](const Shape& s) { return flowplan::contains(s, x); });
}

double ObstacleSet::distance_to_boundary(const State& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : shapes_) d = std::min(d, flowplan::distance_to_boundary(s, x));
  return d;
}

std::vector<State> ObstacleSet::boundary_samples(int total) const {
  std::vector<State> out;
  if (shapes_.empty() || total <= 0) return out;
  std::vector<double> per(shapes_.size());
  std::transform(shapes_.begin(), shapes_.end(), per.begin(),
                 [](const Shape& s) { return perimeter(s); });
  const double sum = std::accumulate(per.begin(), per.end(), 0.0);
  std::vector<int> counts(shapes_.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const double exact = total * per[i] / sum;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[static_cast<std::size_t>(k)].second];
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    auto pts = sample_boundary(shapes_[i], counts[i]);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

}  // namespace flowplan
