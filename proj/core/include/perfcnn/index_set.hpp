#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace perfcnn {

// One output position. x is the row, y the column, both 1-based.
struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

// Row-major flat index of a position on an X-by-Y grid (0-based result).
inline std::size_t flat_index(Position p, int grid_y) {
  return static_cast<std::size_t>(p.x - 1) * grid_y + (p.y - 1);
}

inline bool row_major_less(Position a, Position b) {
  return a.x != b.x ? a.x < b.x : a.y < b.y;
}

// A subset of the positions of an X-by-Y output grid. Points are kept sorted
// in row-major order; that order defines the row layout of any compact
// (points-only) value storage built on top of the set, so the full set's
// compact layout coincides with the dense layout.
struct SpatialIndexSet {
  int grid_x = 0;  // output grid height X'
  int grid_y = 0;  // output grid width  Y'
  std::vector<Position> points;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (grid_x < 1 || grid_y < 1)
      throw std::invalid_argument("SpatialIndexSet: grid dims must be positive, got " +
                                  std::to_string(grid_x) + "x" + std::to_string(grid_y));
    Position prev{0, 0};
    for (const Position& p : points) {
      if (p.x < 1 || p.x > grid_x || p.y < 1 || p.y > grid_y)
        throw std::out_of_range("SpatialIndexSet: position (" + std::to_string(p.x) + ", " +
                                std::to_string(p.y) + ") outside grid " +
                                std::to_string(grid_x) + "x" + std::to_string(grid_y));
      if (!row_major_less(prev, p))
        throw std::invalid_argument("SpatialIndexSet: points not strictly row-major ordered near (" +
                                    std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
      prev = p;
    }
  }
};

// The full grid, row-major.
inline SpatialIndexSet full_index_set(int grid_x, int grid_y) {
  SpatialIndexSet s;
  s.grid_x = grid_x;
  s.grid_y = grid_y;
  s.points.reserve(static_cast<std::size_t>(grid_x) * grid_y);
  for (int x = 1; x <= grid_x; ++x)
    for (int y = 1; y <= grid_y; ++y) s.points.push_back({x, y});
  s.validate();
  return s;
}

// r = 1 - N/|Omega|: fraction of output positions whose values are
// interpolated rather than computed.
inline double perforation_rate(std::size_t n_exact, std::size_t total) {
  if (total == 0) throw std::invalid_argument("perforation_rate: empty output grid");
  if (n_exact > total)
    throw std::invalid_argument("perforation_rate: N=" + std::to_string(n_exact) +
                                " exceeds |Omega|=" + std::to_string(total));
  return 1.0 - static_cast<double>(n_exact) / static_cast<double>(total);
}

// Number of exactly-evaluated positions for a target rate num/den on a grid of
// `total` positions: round(total * (1 - rate)), never below 1. Exact integer
// arithmetic, half rounds up.
inline std::size_t exact_count_for_rate(std::size_t total, long long num, long long den) {
  if (den <= 0 || num < 0 || num >= den)
    throw std::invalid_argument("exact_count_for_rate: rate must satisfy 0 <= num/den < 1");
  unsigned long long keep = static_cast<unsigned long long>(den - num);
  unsigned long long n = (2ull * total * keep + static_cast<unsigned long long>(den)) /
                         (2ull * static_cast<unsigned long long>(den));
  if (n < 1) n = 1;
  if (n > total) n = total;
  return static_cast<std::size_t>(n);
}

}  // namespace perfcnn
