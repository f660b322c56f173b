#pragma once

#include <array>
#include <vector>

namespace flowplan {

using Point2 = std::array<double, 2>;
using Triangle = std::array<int, 3>;

/// Bowyer-Watson Delaunay triangulation. Triangles are counter-clockwise.
/// Throws std::runtime_error if the result does not tile the convex hull.
std::vector<Triangle> delaunay_triangulate(const std::vector<Point2>& points);

/// Area of the convex hull (monotone chain).
double convex_hull_area(const std::vector<Point2>& points);

}  // namespace flowplan
