#pragma once

#include "flowplan/obstacles.hpp"
#include "flowplan/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace flowplan {

struct DomainBox {
  std::vector<double> lo;
  std::vector<double> hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const State& x, double tol = 1e-12) const;
  bool operator==(const DomainBox&) const = default;
};

using SimplexIndices = std::array<int, kMaxVertices>;

/// Vertices and barycentric weights of the simplex containing a query point.
struct Stencil {
  std::array<int, kMaxVertices> index{};
  std::array<double, kMaxVertices> weight{};
  int count = 0;
};

/// Simplicial mesh with goal and obstacle marking plus a bucket locator.
///
/// A grid may carry a periodic last axis (time-augmented models). Its lattice
/// then covers [lo, lo + period) and simplices in the last layer connect back
/// to the first one.
class SimplicialGrid {
 public:
  SimplicialGrid(int dim, std::vector<State> points, std::vector<SimplexIndices> simplices,
                 std::vector<int> goal_indices, std::vector<char> obstacle_flags,
                 std::vector<int> boundary_points, DomainBox domain,
                 std::optional<double> period = std::nullopt);

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<State>& points() const { return points_; }
  const State& point(std::size_t i) const { return points_[i]; }
  const std::vector<SimplexIndices>& simplices() const { return simplices_; }
  int goal_index() const { return goal_indices_.front(); }
  /// All points pinned to the goal value (more than one only for
  /// time-augmented grids, where the goal is a whole time fiber).
  const std::vector<int>& goal_indices() const { return goal_indices_; }
  bool is_goal(std::size_t i) const { return goal_mask_[i] != 0; }
  bool is_obstacle(std::size_t i) const { return obstacle_flags_[i] != 0; }
  const std::vector<char>& obstacle_flags() const { return obstacle_flags_; }
  const std::vector<int>& boundary_points() const { return boundary_points_; }
  const DomainBox& domain() const { return domain_; }
  const std::optional<double>& period() const { return period_; }

  /// Containing simplex and weights, or nullopt outside the domain or hull.
  std::optional<Stencil> locate(const State& x) const;
  /// Barycentric interpolation; 1 (forbidden) outside the domain or hull.
  double interpolate(const std::vector<double>& field, const State& x) const;
  /// Longest simplex edge.
  double max_spacing() const { return max_spacing_; }
  /// Longest spatial edge among simplices touching a goal point.
  double goal_spacing() const { return goal_spacing_; }

  /// Maps the periodic coordinate into [lo, lo + period).
  State wrap(const State& x) const;

 private:
  void build_geometry();
  void build_buckets();
  bool barycentric(std::size_t s, const State& x, std::array<double, kMaxVertices>& lambda) const;

  int dim_;
  std::vector<State> points_;
  std::vector<SimplexIndices> simplices_;
  std::vector<int> goal_indices_;
  std::vector<char> goal_mask_;
  std::vector<char> obstacle_flags_;
  std::vector<int> boundary_points_;
  DomainBox domain_;
  std::optional<double> period_;

  // Per simplex: unwrapped first vertex and the inverse of the edge matrix.
  std::vector<double> origin_;
  std::vector<double> inverse_;
  std::vector<double> bbox_;
  double max_spacing_ = 0.0;
  double goal_spacing_ = 0.0;

  std::vector<double> bucket_lo_;
  std::vector<double> bucket_width_;
  std::vector<int> bucket_count_;
  std::vector<int> bucket_offsets_;
  std::vector<int> bucket_items_;
};

/// Lattice with `counts[k]` points per axis, Kuhn-subdivided into n! simplices
/// per cell.
///
/// `goal` may have fewer coordinates than the grid when the trailing axis is a
/// periodic time axis; the goal then snaps to the nearest lattice column and
/// every point of that column becomes a goal point. A full-dimension goal that
/// is not a lattice point is inserted and its containing simplices split.
SimplicialGrid build_structured_grid(const DomainBox& domain, const std::vector<int>& counts,
                                     const State& goal, const ObstacleSet& obstacles,
                                     std::optional<double> period = std::nullopt);

/// 2-D Delaunay mesh of exactly `target_count` points: the goal, obstacle
/// boundary samples, the box corners and Halton interior points.
SimplicialGrid build_unstructured_grid(const DomainBox& domain, int target_count,
                                       const State& goal, const ObstacleSet& obstacles,
                                       int boundary_sample_count);

/// Halton radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, int base);

}  // namespace flowplan
