#include "flowplan/nsga.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace flowplan {

bool dominates(const Objectives& a, const Objectives& b) {
  return a.first <= b.first && a.second <= b.second && (a.first < b.first || a.second < b.second);
}

std::vector<int> fast_non_dominated_sort(const std::vector<Objectives>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> counter(n, 0);
  std::vector<int> rank(n, 0);
  std::vector<std::size_t> front;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (dominates(points[p], points[q]))
        dominated[p].push_back(q);
      else if (dominates(points[q], points[p]))
        ++counter[p];
    }
    if (counter[p] == 0) front.push_back(p);
  }
  int level = 0;
  while (!front.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : front) {
      rank[p] = level;
      for (std::size_t q : dominated[p])
        if (--counter[q] == 0) next.push_back(q);
    }
    ++level;
    front.swap(next);
  }
  return rank;
}

std::vector<double> crowding_distance(const std::vector<Objectives>& front) {
  const std::size_t n = front.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), inf);
    return distance;
  }
  std::vector<std::size_t> order(n);
  for (int objective = 0; objective < 2; ++objective) {
    auto value = [&](std::size_t i) { return objective == 0 ? front[i].first : front[i].second; };
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    distance[order.front()] = inf;
    distance[order.back()] = inf;
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) continue;
    for (std::size_t k = 1; k + 1 < n; ++k)
      distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
  }
  return distance;
}

std::vector<std::size_t> non_dominated_indices(const std::vector<Objectives>& points) {
  const auto rank = fast_non_dominated_sort(points);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (rank[i] == 0) out.push_back(i);
  return out;
}

}  // namespace flowplan
