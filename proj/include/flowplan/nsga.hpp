#pragma once

#include <utility>
#include <vector>

namespace flowplan {

/// (average time, average energy); both minimized.
using Objectives = std::pair<double, double>;

/// a is no worse in both objectives and strictly better in at least one.
bool dominates(const Objectives& a, const Objectives& b);

/// Rank 0 is the non-dominated set; rank k is non-dominated once ranks < k
/// are removed.
std::vector<int> fast_non_dominated_sort(const std::vector<Objectives>& points);

/// Crowding distance within one front: +inf at the extremes of each
/// objective, otherwise the normalized neighbor spread summed over objectives.
std::vector<double> crowding_distance(const std::vector<Objectives>& front);

/// Indices of the rank-0 points in input order.
std::vector<std::size_t> non_dominated_indices(const std::vector<Objectives>& points);

}  // namespace flowplan
