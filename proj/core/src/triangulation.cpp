#include "perfcnn/triangulation.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace perfcnn {

long long orient2d(Position a, Position b, Position c) {
  const long long abx = b.x - a.x, aby = b.y - a.y;
  const long long acx = c.x - a.x, acy = c.y - a.y;
  return abx * acy - aby * acx;
}

bool in_circumcircle(Position a, Position b, Position c, Position p) {
  // Standard lifted determinant, translated to p. Coordinates are small
  // integers (grids plus a bounded super-triangle), so __int128 is exact.
  const long long ax = a.x - p.x, ay = a.y - p.y;
  const long long bx = b.x - p.x, by = b.y - p.y;
  const long long cx = c.x - p.x, cy = c.y - p.y;
  const __int128 a2 = static_cast<__int128>(ax) * ax + static_cast<__int128>(ay) * ay;
  const __int128 b2 = static_cast<__int128>(bx) * bx + static_cast<__int128>(by) * by;
  const __int128 c2 = static_cast<__int128>(cx) * cx + static_cast<__int128>(cy) * cy;
  const __int128 det = a2 * (static_cast<__int128>(bx) * cy - static_cast<__int128>(by) * cx) -
                       b2 * (static_cast<__int128>(ax) * cy - static_cast<__int128>(ay) * cx) +
                       c2 * (static_cast<__int128>(ax) * by - static_cast<__int128>(ay) * bx);
  return det > 0;  // strict: cocircular points are NOT inside
}

namespace {

constexpr int kMaxCoord = 1 << 14;  // keeps every predicate exact with margin

struct Edge {
  int a, b;
  bool operator<(const Edge& o) const { return a != o.a ? a < o.a : b < o.b; }
};

}  // namespace

Triangulation delaunay(const SpatialIndexSet& mask_points) {
  mask_points.validate();
  Triangulation out;
  out.points = mask_points.points;
  const int n = static_cast<int>(out.points.size());

  if (mask_points.grid_x > kMaxCoord || mask_points.grid_y > kMaxCoord)
    throw std::invalid_argument("delaunay: grid too large for exact predicates");

  // Collinear (or too small) input cannot be triangulated.
  bool has_area = false;
  for (int i = 2; i < n && !has_area; ++i)
    if (orient2d(out.points[0], out.points[1], out.points[i]) != 0) has_area = true;
  if (n < 3 || !has_area) {
    out.degenerate = true;
    return out;
  }

  // Working copy with three super-triangle vertices appended. The triangle
  // ((-4M, -4M), (4M, -4M), (0, 4M)) with M = kMaxCoord contains any grid.
  std::vector<Position> pts = out.points;
  const int m = 4 * kMaxCoord;
  pts.push_back({-m, -m});
  pts.push_back({m, -m});
  pts.push_back({0, m});
  const int s0 = n, s1 = n + 1, s2 = n + 2;

  std::vector<Triangle> tris;
  tris.push_back({s0, s1, s2});  // CCW for x=row, y=col axes as plain 2-d coords

  for (int p = 0; p < n; ++p) {
    // Cavity: triangles whose circumcircle strictly contains the new point.
    std::vector<Triangle> keep;
    std::map<Edge, int> boundary;  // edge -> times seen among cavity triangles
    keep.reserve(tris.size() + 2);
    auto add_edge = [&boundary](int a, int b) {
      // Undirected key; each cavity-interior edge appears exactly twice.
      Edge e{std::min(a, b), std::max(a, b)};
      ++boundary[e];
    };
    for (const Triangle& t : tris) {
      if (in_circumcircle(pts[t.v0], pts[t.v1], pts[t.v2], pts[p])) {
        add_edge(t.v0, t.v1);
        add_edge(t.v1, t.v2);
        add_edge(t.v2, t.v0);
      } else {
        keep.push_back(t);
      }
    }
    // Re-triangulate the cavity: fan from p to each boundary edge.
    for (const auto& [e, count] : boundary) {
      if (count != 1) continue;
      Triangle t{e.a, e.b, p};
      if (orient2d(pts[t.v0], pts[t.v1], pts[t.v2]) < 0) std::swap(t.v1, t.v2);
      keep.push_back(t);
    }
    tris = std::move(keep);
  }

  for (const Triangle& t : tris) {
    if (t.v0 >= n || t.v1 >= n || t.v2 >= n) continue;  // touches the super-triangle
    if (orient2d(pts[t.v0], pts[t.v1], pts[t.v2]) == 0) continue;
    out.triangles.push_back(t);
  }
  if (out.triangles.empty()) out.degenerate = true;
  return out;
}

TrianglePick locate(const Triangulation& t, Position p) {
  TrianglePick pick;
  for (int i = 0; i < static_cast<int>(t.triangles.size()); ++i) {
    const Triangle& tr = t.triangles[i];
    const Position a = t.points[tr.v0], b = t.points[tr.v1], c = t.points[tr.v2];
    const long long o0 = orient2d(a, b, p);
    const long long o1 = orient2d(b, c, p);
    const long long o2 = orient2d(c, a, p);
    if (o0 < 0 || o1 < 0 || o2 < 0) continue;  // outside this CCW triangle
    const double area = static_cast<double>(orient2d(a, b, c));
    pick.tri = i;
    // Barycentric weight of a vertex is the subtriangle area opposite it.
    pick.w0 = static_cast<double>(o1) / area;
    pick.w1 = static_cast<double>(o2) / area;
    pick.w2 = static_cast<double>(o0) / area;
    // Clamp and renormalize so downstream mixing never extrapolates.
    pick.w0 = std::clamp(pick.w0, 0.0, 1.0);
    pick.w1 = std::clamp(pick.w1, 0.0, 1.0);
    pick.w2 = std::clamp(pick.w2, 0.0, 1.0);
    const double sum = pick.w0 + pick.w1 + pick.w2;
    pick.w0 /= sum;
    pick.w1 /= sum;
    pick.w2 /= sum;
    return pick;  // lowest-index containing triangle wins
  }
  return pick;
}

}  // namespace perfcnn
