#pragma once

#include <vector>

#include "perfcnn/index_set.hpp"

namespace perfcnn {

// Triangle over point indices, counter-clockwise.
struct Triangle {
  int v0 = -1, v1 = -1, v2 = -1;
};

// Delaunay triangulation of a mask. Points keep the mask's row-major order;
// insertion happens in that order, and all in-circle / orientation tests are
// exact integer arithmetic, so the result is fully deterministic (cocircular
// lattice quads resolve by insertion order, not floating-point noise).
// `degenerate` is set when the points are collinear (or fewer than 3), in
// which case there are no triangles and callers fall back to nearest-neighbor.
struct Triangulation {
  std::vector<Position> points;
  std::vector<Triangle> triangles;
  bool degenerate = false;
};

Triangulation delaunay(const SpatialIndexSet& mask_points);

// Containing triangle for p: the lowest-index triangle whose closed interior
// holds p (edge and vertex hits are inclusive, so boundary positions resolve
// to the lowest index deterministically). tri = -1 means p lies outside the
// hull. Weights are the clamped, renormalized barycentric coordinates.
struct TrianglePick {
  int tri = -1;
  double w0 = 0, w1 = 0, w2 = 0;
};

TrianglePick locate(const Triangulation& t, Position p);

// Exact sign of twice the signed area of (a, b, c): positive when CCW.
long long orient2d(Position a, Position b, Position c);

// True when p lies strictly inside the circumcircle of CCW triangle (a,b,c).
bool in_circumcircle(Position a, Position b, Position c, Position p);

}  // namespace perfcnn
