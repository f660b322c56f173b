#pragma once

// Random generators and independent oracles shared by the test suites.

#include "flowplan/grid.hpp"
#include "flowplan/nsga.hpp"
#include "flowplan/obstacles.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

namespace testing_support {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  // Objective pairs on a coarse lattice so that ties and duplicates occur.
  std::vector<flowplan::Objectives> objective_cloud(int n, int levels) {
    std::vector<flowplan::Objectives> out;
    for (int i = 0; i < n; ++i) out.emplace_back(integer(0, levels), integer(0, levels));
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

// Rank by repeatedly peeling the set of points no remaining point dominates.
inline std::vector<int> brute_force_ranks(const std::vector<flowplan::Objectives>& pts) {
  const std::size_t n = pts.size();
  std::vector<int> rank(n, -1);
  std::size_t assigned = 0;
  for (int level = 0; assigned < n; ++level) {
    std::vector<std::size_t> layer;
    for (std::size_t i = 0; i < n; ++i) {
      if (rank[i] >= 0) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < n && !dominated; ++j) {
        if (rank[j] >= 0 || j == i) continue;
        const auto& a = pts[j];
        const auto& b = pts[i];
        dominated = a.first <= b.first && a.second <= b.second && (a.first < b.first || a.second < b.second);
      }
      if (!dominated) layer.push_back(i);
    }
    for (auto i : layer) rank[i] = level;
    assigned += layer.size();
  }
  return rank;
}

// Shortest travel time on an 8-connected lattice with edge time
// max(|dx|, |dy|) / speed, the exact time under a box-bounded velocity.
// Nodes inside obstacles are removed, and so are edges whose midpoint is.
inline std::vector<double> lattice_travel_time(const std::vector<double>& xs, const std::vector<double>& ys,
                                               std::size_t goal_ix, std::size_t goal_iy, double speed,
                                               const flowplan::ObstacleSet& obstacles) {
  const std::size_t nx = xs.size(), ny = ys.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nx * ny, inf);
  auto blocked = [&](double x, double y) { return obstacles.contains(flowplan::make_state({x, y})); };
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const std::size_t start = goal_iy * nx + goal_ix;
  dist[start] = 0.0;
  queue.push({0.0, start});
  while (!queue.empty()) {
    const auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[node]) continue;
    const std::size_t ix = node % nx, iy = node / nx;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const long jx = static_cast<long>(ix) + dx, jy = static_cast<long>(iy) + dy;
        if (jx < 0 || jy < 0 || jx >= static_cast<long>(nx) || jy >= static_cast<long>(ny)) continue;
        const double x = xs[static_cast<std::size_t>(jx)], y = ys[static_cast<std::size_t>(jy)];
        if (blocked(x, y) || blocked(0.5 * (x + xs[ix]), 0.5 * (y + ys[iy]))) continue;
        const double step = std::max(std::abs(x - xs[ix]), std::abs(y - ys[iy])) / speed;
        const std::size_t next = static_cast<std::size_t>(jy) * nx + static_cast<std::size_t>(jx);
        if (d + step < dist[next]) {
          dist[next] = d + step;
          queue.push({dist[next], next});
        }
      }
    }
  }
  return dist;
}

}  // namespace testing_support
