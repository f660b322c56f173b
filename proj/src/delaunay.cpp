#include "flowplan/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace flowplan {
namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

// Positive when d lies strictly inside the circumcircle of the CCW triangle abc.
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a[0] - d[0], ady = a[1] - d[1];
  const double bdx = b[0] - d[0], bdy = b[1] - d[1];
  const double cdx = c[0] - d[0], cdy = c[1] - d[1];
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

struct Tri {
  Triangle v;
  Point2 center;
  double radius2;
};

Tri make_tri(const std::vector<Point2>& p, int a, int b, int c) {
  if (orient(p[a], p[b], p[c]) < 0.0) std::swap(b, c);
  const double ax = p[a][0], ay = p[a][1];
  const double bx = p[b][0] - ax, by = p[b][1] - ay;
  const double cx = p[c][0] - ax, cy = p[c][1] - ay;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return {{a, b, c}, {ax + ux, ay + uy}, ux * ux + uy * uy};
}


// Triangles touching the finite super-triangle are dropped, which can leave
// pockets between the mesh boundary and the convex hull. Fill them ear by ear.
void close_hull(const std::vector<Point2>& p, std::vector<Triangle>& tris, double min_area2) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : tris)
    for (int e = 0; e < 3; ++e) directed[{t[e], t[(e + 1) % 3]}] = 1;
  std::map<int, int> next;
  for (const auto& [edge, unused] : directed)
    if (!directed.count({edge.second, edge.first})) {
      if (next.count(edge.first)) throw std::runtime_error("delaunay: pinched boundary");
      next[edge.first] = edge.second;
    }
  if (next.empty()) return;
  std::vector<int> loop{next.begin()->first};
  while (true) {
    const int v = next.at(loop.back());
    if (v == loop.front()) break;
    loop.push_back(v);
    if (loop.size() > next.size()) throw std::runtime_error("delaunay: broken boundary");
  }
  if (loop.size() != next.size()) throw std::runtime_error("delaunay: boundary has several loops");

  bool filled = true;
  while (filled && loop.size() > 3) {
    filled = false;
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const int a = loop[(k + loop.size() - 1) % loop.size()];
      const int b = loop[k];
      const int c = loop[(k + 1) % loop.size()];
      if (!(orient(p[a], p[b], p[c]) < -min_area2)) continue;
      bool empty = true;
      for (int q : loop) {
        if (q == a || q == b || q == c) continue;
        if (orient(p[a], p[c], p[q]) >= 0.0 && orient(p[c], p[b], p[q]) >= 0.0 && orient(p[b], p[a], p[q]) >= 0.0) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      tris.push_back({a, c, b});
      loop.erase(loop.begin() + static_cast<std::ptrdiff_t>(k));
      filled = true;
      break;
    }
  }
}

// Lawson edge flips until every interior edge is locally Delaunay.
void legalize(const std::vector<Point2>& p, std::vector<Triangle>& tris) {
  for (int pass = 0; pass < 100; ++pass) {
    std::map<std::pair<int, int>, std::pair<std::size_t, int>> owner;
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int e = 0; e < 3; ++e) owner[{tris[t][e], tris[t][(e + 1) % 3]}] = {t, e};
    std::vector<char> touched(tris.size(), 0);
    bool flipped = false;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int e = 0; e < 3 && !touched[t]; ++e) {
        const int a = tris[t][e], b = tris[t][(e + 1) % 3], c = tris[t][(e + 2) % 3];
        const auto it = owner.find({b, a});
        if (it == owner.end()) continue;
        const auto [u, f] = it->second;
        if (touched[u]) continue;
        const int d = tris[u][(f + 2) % 3];
        if (!(incircle(p[a], p[b], p[c], p[d]) > 0.0)) continue;
        // The quad a-d-b-c must be strictly convex for the flip to be valid.
        if (!(orient(p[c], p[a], p[d]) > 0.0 && orient(p[d], p[b], p[c]) > 0.0)) continue;
        tris[t] = {c, a, d};
        tris[u] = {d, b, c};
        touched[t] = touched[u] = 1;
        flipped = true;
      }
    }
    if (!flipped) return;
  }
}

}  // namespace

double convex_hull_area(const std::vector<Point2>& points) {
  if (points.size() < 3) return 0.0;
  std::vector<Point2> p = points;
  std::sort(p.begin(), p.end());
  std::vector<Point2> hull(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], q) <= 0.0) --k;
    hull[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orient(hull[k - 2], hull[k - 1], p[i]) <= 0.0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  double area2 = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * std::abs(area2);
}

std::vector<Triangle> delaunay_triangulate(const std::vector<Point2>& input) {
  const int n = static_cast<int>(input.size());
  if (n < 3) throw std::runtime_error("delaunay: need at least 3 points");

  double lo_x = input[0][0], hi_x = lo_x, lo_y = input[0][1], hi_y = lo_y;
  for (const auto& q : input) {
    lo_x = std::min(lo_x, q[0]);
    hi_x = std::max(hi_x, q[0]);
    lo_y = std::min(lo_y, q[1]);
    hi_y = std::max(hi_y, q[1]);
  }
  const double span = std::max(hi_x - lo_x, hi_y - lo_y);
  const double mx = 0.5 * (lo_x + hi_x), my = 0.5 * (lo_y + hi_y);

  std::vector<Point2> p = input;
  p.push_back({mx - 40.0 * span, my - 30.0 * span});
  p.push_back({mx + 40.0 * span, my - 30.0 * span});
  p.push_back({mx, my + 40.0 * span});

  std::vector<Tri> tris{make_tri(p, n, n + 1, n + 2)};
  std::vector<std::pair<int, int>> edges;
  std::vector<Tri> kept;
  for (int i = 0; i < n; ++i) {
    const Point2& q = p[static_cast<std::size_t>(i)];
    edges.clear();
    kept.clear();
    for (const auto& t : tris) {
      const double dx = q[0] - t.center[0], dy = q[1] - t.center[1];
      // Cheap circumcircle reject, then the exact-orientation predicate.
      const bool bad = dx * dx + dy * dy <= t.radius2 * (1.0 + 1e-9) &&
                       incircle(p[t.v[0]], p[t.v[1]], p[t.v[2]], q) > 0.0;
      if (bad) {
        for (int e = 0; e < 3; ++e) {
          int a = t.v[e], b = t.v[(e + 1) % 3];
          edges.emplace_back(std::min(a, b), std::max(a, b));
        }
      } else {
        kept.push_back(t);
      }
    }
    if (edges.empty()) throw std::runtime_error("delaunay: point outside every circumcircle");
    std::sort(edges.begin(), edges.end());
    tris.swap(kept);
    for (std::size_t e = 0; e < edges.size();) {
      std::size_t f = e + 1;
      while (f < edges.size() && edges[f] == edges[e]) ++f;
      if (f - e == 1) {
        if (orient(p[edges[e].first], p[edges[e].second], q) == 0.0)
          throw std::runtime_error("delaunay: collinear cavity edge");
        tris.push_back(make_tri(p, edges[e].first, edges[e].second, i));
      }
      e = f;
    }
  }

  std::vector<Triangle> out;
  for (const auto& t : tris)
    if (t.v[0] < n && t.v[1] < n && t.v[2] < n) out.push_back(t.v);
  close_hull(input, out, 1e-12 * span * span);
  legalize(input, out);

  double area = 0.0;
  for (auto& t : out) {
    const double a = 0.5 * orient(input[t[0]], input[t[1]], input[t[2]]);
    if (!(a > 0.0)) throw std::runtime_error("delaunay: degenerate triangle");
    area += a;
  }
  std::sort(out.begin(), out.end());
  const double hull = convex_hull_area(input);
  if (std::abs(area - hull) > 1e-9 * hull)
    throw std::runtime_error("delaunay: triangles do not cover the convex hull");
  return out;
}

}  // namespace flowplan
