#include "flowplan/grid.hpp"

#include "flowplan/delaunay.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace flowplan {
namespace {

constexpr double kBaryTol = 1e-12;

SmallMatrix simplex_vertices(const std::vector<State>& points, const SimplexIndices& s, int dim,
                             const std::optional<double>& period) {
  SmallMatrix v(dim, dim + 1);
  for (int j = 0; j <= dim; ++j) v.col(j) = points[static_cast<std::size_t>(s[j])];
  if (period) {
    // A simplex spans at most one lattice cell, so anything more than half a
    // period behind the first vertex sits across the seam.
    const int t = dim - 1;
    for (int j = 1; j <= dim; ++j) {
      if (v(t, j) < v(t, 0) - 0.5 * *period) v(t, j) += *period;
      if (v(t, j) > v(t, 0) + 0.5 * *period) v(t, j) -= *period;
    }
  }
  return v;
}

// Barycentric coordinates of x in the simplex with vertex columns v.
State barycentric_of(const SmallMatrix& v, const State& x) {
  const int d = static_cast<int>(v.rows());
  SmallMatrix edges(d, d);
  for (int j = 0; j < d; ++j) edges.col(j) = v.col(j + 1) - v.col(0);
  const State rel = x - v.col(0);
  const State tail = edges.partialPivLu().solve(rel);
  State lambda(d + 1);
  lambda(0) = 1.0 - tail.sum();
  lambda.tail(d) = tail;
  return lambda;
}

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace

bool DomainBox::contains(const State& x, double tol) const {
  for (int k = 0; k < dim(); ++k) {
    const double pad = tol * (1.0 + std::abs(hi[k] - lo[k]));
    if (x(k) < lo[k] - pad || x(k) > hi[k] + pad) return false;
  }
  return true;
}

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

SimplicialGrid::SimplicialGrid(int dim, std::vector<State> points,
                               std::vector<SimplexIndices> simplices,
                               std::vector<int> goal_indices, std::vector<char> obstacle_flags,
                               std::vector<int> boundary_points, DomainBox domain,
                               std::optional<double> period)
    : dim_(dim),
      points_(std::move(points)),
      simplices_(std::move(simplices)),
      goal_indices_(std::move(goal_indices)),
      obstacle_flags_(std::move(obstacle_flags)),
      boundary_points_(std::move(boundary_points)),
      domain_(std::move(domain)),
      period_(period) {
  if (dim_ < 1 || dim_ > kMaxDim) throw ConfigError("grid dimension must be in 1..4");
  if (domain_.dim() != dim_) throw ConfigError("grid domain dimension mismatch");
  if (points_.empty() || simplices_.empty()) throw ConfigError("grid needs points and simplices");
  if (goal_indices_.empty()) throw ConfigError("grid needs a goal point");
  if (obstacle_flags_.size() != points_.size())
    throw ConfigError("obstacle flag count does not match point count");
  goal_mask_.assign(points_.size(), 0);
  for (int g : goal_indices_) {
    if (g < 0 || static_cast<std::size_t>(g) >= points_.size())
      throw ConfigError("goal index out of range");
    if (obstacle_flags_[static_cast<std::size_t>(g)]) throw ConfigError("goal point lies in an obstacle");
    goal_mask_[static_cast<std::size_t>(g)] = 1;
  }
  for (const auto& p : points_) {
    if (p.size() != dim_) throw ConfigError("grid point has the wrong dimension");
    if (!domain_.contains(p, 1e-9)) throw ConfigError("grid point outside the domain box");
  }
  for (const auto& s : simplices_)
    for (int j = 0; j <= dim_; ++j)
      if (s[j] < 0 || static_cast<std::size_t>(s[j]) >= points_.size())
        throw ConfigError("simplex references a missing point");
  build_geometry();
  build_buckets();
}

void SimplicialGrid::build_geometry() {
  const std::size_t n_s = simplices_.size();
  const int d = dim_;
  origin_.resize(n_s * d);
  inverse_.resize(n_s * d * d);
  bbox_.resize(n_s * 2 * d);
  max_spacing_ = 0.0;
  goal_spacing_ = 0.0;
  const int spatial = period_ ? d - 1 : d;
  for (std::size_t s = 0; s < n_s; ++s) {
    const SmallMatrix v = simplex_vertices(points_, simplices_[s], d, period_);
    SmallMatrix edges(d, d);
    for (int j = 0; j < d; ++j) edges.col(j) = v.col(j + 1) - v.col(0);
    const double det = edges.determinant();
    double scale = 1.0;
    for (int j = 0; j < d; ++j) scale *= std::max(edges.col(j).norm(), 1e-300);
    if (!(std::abs(det) > 1e-12 * scale))
      throw std::runtime_error("grid: degenerate simplex " + std::to_string(s));
    const SmallMatrix inv = edges.inverse();
    for (int r = 0; r < d; ++r) {
      origin_[s * d + r] = v(r, 0);
      for (int c = 0; c < d; ++c) inverse_[(s * d + r) * d + c] = inv(r, c);
      bbox_[s * 2 * d + r] = v.row(r).minCoeff();
      bbox_[s * 2 * d + d + r] = v.row(r).maxCoeff();
    }
    for (int a = 0; a <= d; ++a)
      for (int b = a + 1; b <= d; ++b) max_spacing_ = std::max(max_spacing_, (v.col(a) - v.col(b)).norm());
    bool touches_goal = false;
    for (int a = 0; a <= d; ++a) touches_goal = touches_goal || goal_mask_[static_cast<std::size_t>(simplices_[s][a])];
    if (touches_goal)
      for (int a = 0; a <= d; ++a)
        for (int b = a + 1; b <= d; ++b)
          goal_spacing_ = std::max(goal_spacing_, (v.col(a) - v.col(b)).head(spatial).norm());
  }
}

void SimplicialGrid::build_buckets() {
  const int d = dim_;
  const double per_axis = std::pow(static_cast<double>(simplices_.size()), 1.0 / d);
  const int nb = std::clamp(static_cast<int>(std::ceil(per_axis)), 1, 512);
  bucket_lo_.resize(d);
  bucket_width_.resize(d);
  bucket_count_.assign(d, nb);
  for (int k = 0; k < d; ++k) {
    const double lo = domain_.lo[k];
    const double hi = (period_ && k == d - 1) ? lo + *period_ : domain_.hi[k];
    bucket_lo_[k] = lo;
    bucket_width_[k] = std::max(hi - lo, 1e-300) / nb;
  }
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(nb);

  auto bucket_range = [&](std::size_t s, int k) {
    const double pad = 1e-9 * bucket_width_[k];
    const double lo = bbox_[s * 2 * d + k] - pad;
    const double hi = bbox_[s * 2 * d + d + k] + pad;
    const int a = std::clamp(static_cast<int>(std::floor((lo - bucket_lo_[k]) / bucket_width_[k])), 0, nb - 1);
    const int b = std::clamp(static_cast<int>(std::floor((hi - bucket_lo_[k]) / bucket_width_[k])), 0, nb - 1);
    return std::pair{a, b};
  };

  std::vector<int> counts(total + 1, 0);
  // Two passes over the same enumeration: count, then fill (CSR layout).
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<int> cursor;
    if (pass == 1) {
      bucket_offsets_.assign(total + 1, 0);
      for (std::size_t b = 0; b < total; ++b) bucket_offsets_[b + 1] = bucket_offsets_[b] + counts[b];
      bucket_items_.assign(static_cast<std::size_t>(bucket_offsets_[total]), 0);
      cursor.assign(bucket_offsets_.begin(), bucket_offsets_.end() - 1);
    }
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      std::array<std::pair<int, int>, kMaxDim> range{};
      std::array<int, kMaxDim> idx{};
      for (int k = 0; k < d; ++k) {
        range[k] = bucket_range(s, k);
        idx[k] = range[k].first;
      }
      while (true) {
        std::size_t flat = 0;
        for (int k = 0; k < d; ++k) flat = flat * static_cast<std::size_t>(nb) + static_cast<std::size_t>(idx[k]);
        if (pass == 0)
          ++counts[flat];
        else
          bucket_items_[static_cast<std::size_t>(cursor[flat]++)] = static_cast<int>(s);
        int k = d - 1;
        while (k >= 0 && idx[k] == range[k].second) {
          idx[k] = range[k].first;
          --k;
        }
        if (k < 0) break;
        ++idx[k];
      }
    }
  }
}

State SimplicialGrid::wrap(const State& x) const {
  if (!period_) return x;
  State y = x;
  const int t = dim_ - 1;
  const double lo = domain_.lo[t];
  double r = std::fmod(y(t) - lo, *period_);
  if (r < 0.0) r += *period_;
  if (r >= *period_) r = 0.0;
  y(t) = lo + r;
  return y;
}

bool SimplicialGrid::barycentric(std::size_t s, const State& x,
                                 std::array<double, kMaxVertices>& lambda) const {
  const int d = dim_;
  double rel[kMaxDim];
  for (int r = 0; r < d; ++r) rel[r] = x(r) - origin_[s * d + r];
  double sum = 0.0;
  for (int r = 0; r < d; ++r) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) acc += inverse_[(s * d + r) * d + c] * rel[c];
    lambda[r + 1] = acc;
    sum += acc;
  }
  lambda[0] = 1.0 - sum;
  for (int j = 0; j <= d; ++j)
    if (lambda[j] < -kBaryTol) return false;
  return true;
}

std::optional<Stencil> SimplicialGrid::locate(const State& query) const {
  if (query.size() != dim_) throw std::invalid_argument("locate: dimension mismatch");
  const State x = wrap(query);
  if (!domain_.contains(x)) return std::nullopt;
  const int d = dim_;
  std::size_t flat = 0;
  for (int k = 0; k < d; ++k) {
    const int nb = bucket_count_[k];
    const int b = std::clamp(static_cast<int>(std::floor((x(k) - bucket_lo_[k]) / bucket_width_[k])), 0, nb - 1);
    flat = flat * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b);
  }
  std::array<double, kMaxVertices> lambda{};
  for (int i = bucket_offsets_[flat]; i < bucket_offsets_[flat + 1]; ++i) {
    const auto s = static_cast<std::size_t>(bucket_items_[static_cast<std::size_t>(i)]);
    if (!barycentric(s, x, lambda)) continue;
    double sum = 0.0;
    for (int j = 0; j <= d; ++j) {
      lambda[j] = std::max(lambda[j], 0.0);
      sum += lambda[j];
    }
    Stencil st;
    for (int j = 0; j <= d; ++j) {
      const double w = lambda[j] / sum;
      if (w >= 1.0 - kBaryTol) {
        st.index[0] = simplices_[s][j];
        st.weight[0] = 1.0;
        st.count = 1;
        return st;
      }
      if (w > 0.0) {
        st.index[st.count] = simplices_[s][j];
        st.weight[st.count] = w;
        ++st.count;
      }
    }
    return st;
  }
  return std::nullopt;
}

double SimplicialGrid::interpolate(const std::vector<double>& field, const State& x) const {
  if (field.size() != points_.size()) throw std::invalid_argument("interpolate: field size mismatch");
  const auto st = locate(x);
  if (!st) return 1.0;
  double v = 0.0;
  for (int j = 0; j < st->count; ++j) v += st->weight[j] * field[static_cast<std::size_t>(st->index[j])];
  return v;
}

SimplicialGrid build_structured_grid(const DomainBox& domain, const std::vector<int>& counts,
                                     const State& goal, const ObstacleSet& obstacles,
                                     std::optional<double> period) {
  const int d = domain.dim();
  if (d < 1 || d > kMaxDim) throw ConfigError("structured grid: dimension must be in 1..4");
  if (static_cast<int>(counts.size()) != d) throw ConfigError("structured grid: counts must match the domain dimension");
  for (int c : counts)
    if (c < 2) throw ConfigError("structured grid: counts must be at least 2 per axis");
  for (int k = 0; k < d; ++k)
    if (!(domain.lo[k] < domain.hi[k])) throw ConfigError("structured grid: domain needs lo < hi");
  const bool periodic = period.has_value();
  if (periodic && !(*period > 0.0)) throw ConfigError("structured grid: period must be positive");
  const int goal_dim = static_cast<int>(goal.size());
  if (goal_dim != d && !(periodic && goal_dim == d - 1))
    throw ConfigError("structured grid: goal dimension mismatch");
  {
    DomainBox spatial{{domain.lo.begin(), domain.lo.begin() + goal_dim},
                      {domain.hi.begin(), domain.hi.begin() + goal_dim}};
    if (!spatial.contains(goal)) throw ConfigError("goal lies outside the domain box");
    if (obstacles.contains(goal)) throw ConfigError("goal lies inside an obstacle");
  }

  std::vector<double> spacing(d);
  for (int k = 0; k < d; ++k) {
    const bool wraps = periodic && k == d - 1;
    spacing[k] = wraps ? *period / counts[k] : (domain.hi[k] - domain.lo[k]) / (counts[k] - 1);
  }
  auto coord = [&](int k, int i) {
    if (!(periodic && k == d - 1) && i == counts[k] - 1) return domain.hi[k];
    return domain.lo[k] + i * spacing[k];
  };

  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  std::vector<State> points(total);
  std::vector<int> stride(d, 1);
  for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * counts[k + 1];
  for (std::size_t p = 0; p < total; ++p) {
    State x(d);
    std::size_t rem = p;
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem / static_cast<std::size_t>(stride[k]));
      rem %= static_cast<std::size_t>(stride[k]);
      x(k) = coord(k, i);
    }
    points[p] = x;
  }

  // Kuhn subdivision: one simplex per axis permutation in every cell.
  std::vector<SimplexIndices> simplices;
  std::vector<int> cells(d);
  std::size_t n_cells = 1;
  for (int k = 0; k < d; ++k) {
    cells[k] = (periodic && k == d - 1) ? counts[k] : counts[k] - 1;
    n_cells *= static_cast<std::size_t>(cells[k]);
  }
  simplices.reserve(n_cells * static_cast<std::size_t>(factorial(d)));
  std::vector<int> perm(d);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::array<int, kMaxDim> base{};
    std::size_t rem = c;
    for (int k = d - 1; k >= 0; --k) {
      base[k] = static_cast<int>(rem % static_cast<std::size_t>(cells[k]));
      rem /= static_cast<std::size_t>(cells[k]);
    }
    std::iota(perm.begin(), perm.end(), 0);
    do {
      SimplexIndices s{};
      std::array<int, kMaxDim> idx = base;
      auto flat = [&] {
        int f = 0;
        for (int k = 0; k < d; ++k) f += (idx[k] % counts[k]) * stride[k];
        return f;
      };
      s[0] = flat();
      for (int j = 0; j < d; ++j) {
        ++idx[perm[j]];
        s[j + 1] = flat();
      }
      simplices.push_back(s);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  std::vector<int> goal_indices;
  if (goal_dim == d) {
    bool on_lattice = true;
    int flat = 0;
    for (int k = 0; k < d; ++k) {
      const double r = (goal(k) - domain.lo[k]) / spacing[k];
      const double i = std::round(r);
      if (std::abs(r - i) > 1e-9) on_lattice = false;
      flat += static_cast<int>(i) * stride[k];
    }
    if (on_lattice) {
      points[static_cast<std::size_t>(flat)] = goal;
      goal_indices.push_back(flat);
    } else {
      const int g = static_cast<int>(points.size());
      points.push_back(goal);
      std::vector<SimplexIndices> split;
      split.reserve(simplices.size() + 8);
      for (const auto& s : simplices) {
        const SmallMatrix v = simplex_vertices(points, s, d, period);
        State gx = goal;
        if (periodic) {
          // Compare in the unwrapped frame of this simplex.
          const int t = d - 1;
          while (gx(t) < v(t, 0) - 0.5 * *period) gx(t) += *period;
          while (gx(t) > v(t, 0) + 0.5 * *period) gx(t) -= *period;
        }
        const State lambda = barycentric_of(v, gx);
        if (lambda.minCoeff() < -kBaryTol) {
          split.push_back(s);
          continue;
        }
        for (int j = 0; j <= d; ++j) {
          if (lambda(j) <= kBaryTol) continue;
          SimplexIndices t = s;
          t[j] = g;
          split.push_back(t);
        }
      }
      simplices.swap(split);
      goal_indices.push_back(g);
    }
  } else {
    int flat = 0;
    for (int k = 0; k < goal_dim; ++k) {
      const double r = (goal(k) - domain.lo[k]) / spacing[k];
      const int i = std::clamp(static_cast<int>(std::floor(r + 0.5)), 0, counts[k] - 1);
      flat += i * stride[k];
    }
    for (int i = 0; i < counts[d - 1]; ++i) goal_indices.push_back(flat + i * stride[d - 1]);
  }

  std::vector<char> flags(points.size(), 0);
  for (std::size_t p = 0; p < points.size(); ++p) flags[p] = obstacles.contains(points[p]) ? 1 : 0;
  for (int g : goal_indices)
    if (flags[static_cast<std::size_t>(g)]) throw ConfigError("goal grid point lies inside an obstacle");

  DomainBox box = domain;
  if (periodic) box.hi[d - 1] = box.lo[d - 1] + *period;
  return SimplicialGrid(d, std::move(points), std::move(simplices), std::move(goal_indices),
                        std::move(flags), {}, std::move(box), period);
}

SimplicialGrid build_unstructured_grid(const DomainBox& domain, int target_count,
                                       const State& goal, const ObstacleSet& obstacles,
                                       int boundary_sample_count) {
  if (domain.dim() != 2) throw ConfigError("unstructured grids are only supported in 2-D");
  if (target_count <= 3) throw ConfigError("unstructured grid: target_count must exceed 3");
  if (boundary_sample_count < 0) throw ConfigError("unstructured grid: negative boundary sample count");
  if (goal.size() != 2) throw ConfigError("unstructured grid: goal must be 2-D");
  if (!domain.contains(goal)) throw ConfigError("goal lies outside the domain box");
  if (obstacles.contains(goal)) throw ConfigError("goal lies inside an obstacle");

  const double w = domain.hi[0] - domain.lo[0];
  const double h = domain.hi[1] - domain.lo[1];
  if (!(w > 0.0 && h > 0.0)) throw ConfigError("unstructured grid: domain needs lo < hi");
  const double nominal = std::sqrt(w * h / target_count);
  const double min_sep = 0.5 * nominal;

  std::vector<State> points{goal};
  std::vector<int> boundary;
  for (const auto& b : obstacles.boundary_samples(boundary_sample_count)) {
    if (static_cast<int>(points.size()) >= target_count) break;
    if (!domain.contains(b)) continue;
    if ((b - goal).norm() < 1e-12 * nominal) continue;
    boundary.push_back(static_cast<int>(points.size()));
    points.push_back(b);
  }
  auto too_close = [&](const State& x, double sep) {
    return std::any_of(points.begin(), points.end(),
                       [&](const State& p) { return (p - x).norm() < sep; });
  };
  if (target_count - static_cast<int>(points.size()) >= 4) {
    for (const auto& c : {make_state({domain.lo[0], domain.lo[1]}), make_state({domain.hi[0], domain.lo[1]}),
                          make_state({domain.hi[0], domain.hi[1]}), make_state({domain.lo[0], domain.hi[1]})}) {
      if (too_close(c, 1e-12 * nominal) || obstacles.contains(c)) continue;
      points.push_back(c);
    }
  }
  const std::uint64_t max_index = 10000ULL * static_cast<std::uint64_t>(target_count) + 1000ULL;
  for (std::uint64_t i = 1; static_cast<int>(points.size()) < target_count; ++i) {
    if (i > max_index) throw ConfigError("unstructured grid: could not place the requested number of points");
    const State x = make_state({domain.lo[0] + w * radical_inverse(i, 2), domain.lo[1] + h * radical_inverse(i, 3)});
    if (obstacles.contains(x) || too_close(x, min_sep)) continue;
    points.push_back(x);
  }

  auto as_plane = [](const std::vector<State>& pts) {
    std::vector<Point2> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = {pts[i](0), pts[i](1)};
    return out;
  };
  std::vector<Triangle> tris;
  try {
    tris = delaunay_triangulate(as_plane(points));
  } catch (const std::runtime_error&) {
    const double amp = 1e-9 * nominal;
    for (std::size_t i = 1; i < points.size(); ++i) {
      points[i](0) += amp * (radical_inverse(i, 5) - 0.5);
      points[i](1) += amp * (radical_inverse(i, 7) - 0.5);
      points[i](0) = std::clamp(points[i](0), domain.lo[0], domain.hi[0]);
      points[i](1) = std::clamp(points[i](1), domain.lo[1], domain.hi[1]);
    }
    tris = delaunay_triangulate(as_plane(points));
  }

  std::vector<SimplexIndices> simplices;
  simplices.reserve(tris.size());
  for (const auto& t : tris) simplices.push_back({t[0], t[1], t[2], 0, 0});
  std::vector<char> flags(points.size(), 0);
  for (std::size_t p = 0; p < points.size(); ++p) flags[p] = obstacles.contains(points[p]) ? 1 : 0;
  return SimplicialGrid(2, std::move(points), std::move(simplices), {0}, std::move(flags),
                        std::move(boundary), domain);
}

}  // namespace flowplan
