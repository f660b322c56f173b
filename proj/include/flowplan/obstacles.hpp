#pragma once

#include "flowplan/types.hpp"

#include <variant>
#include <vector>

namespace flowplan {

/// Simple polygon in the plane of the first two state coordinates.
struct Polygon {
  std::vector<std::array<double, 2>> vertices;
  bool operator==(const Polygon&) const = default;
};

/// Axis-aligned box acting on the leading lo.size() state coordinates.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
  bool operator==(const Box&) const = default;
};

using Shape = std::variant<Polygon, Box>;

// Closed membership: points on the boundary count as inside.
bool contains(const Shape& shape, const State& x);
double distance_to_boundary(const Shape& shape, const State& x);
double perimeter(const Shape& shape);
/// `count` points evenly spaced by arc length along the boundary (2-D only).
std::vector<State> sample_boundary(const Shape& shape, int count);
void validate(const Shape& shape);

class ObstacleSet {
 public:
  ObstacleSet() = default;
  explicit ObstacleSet(std::vector<Shape> shapes);

  const std::vector<Shape>& shapes() const { return shapes_; }
  bool empty() const { return shapes_.empty(); }

  bool contains(const State& x) const;
  double distance_to_boundary(const State& x) const;

  /// Distributes `total` samples over the shapes in proportion to perimeter
  /// (largest-remainder rounding) and returns them shape by shape.
  std::vector<State> boundary_samples(int total) const;

  bool operator==(const ObstacleSet&) const = default;

 private:
  std::vector<Shape> shapes_;
};

}  // namespace flowplan
