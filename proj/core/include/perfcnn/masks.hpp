#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "perfcnn/index_set.hpp"

namespace perfcnn {

enum class MaskType { uniform, grid, structure, impact };

std::string mask_type_name(MaskType t);
MaskType mask_type_from_name(const std::string& name);

// The positions a perforated layer evaluates exactly. Everything else on the
// grid gets interpolated. `requested` records the N that was asked for; the
// grid generator may realize fewer points (it reports what it achieved).
struct PerforationMask {
  int grid_x = 0;
  int grid_y = 0;
  SpatialIndexSet points;
  MaskType type = MaskType::uniform;
  std::uint64_t seed = 0;
  std::size_t requested = 0;

  std::size_t size() const { return points.size(); }
  double rate() const { return perforation_rate(points.size(), static_cast<std::size_t>(grid_x) * grid_y); }
};

// Non-negative per-position weights used by the top-N selector; higher weight
// means "keep this position exact".
struct WeightField {
  int grid_x = 0;
  int grid_y = 0;
  std::vector<double> w;  // grid_x * grid_y, row-major

  double at(int x, int y) const { return w[static_cast<std::size_t>(x - 1) * grid_y + (y - 1)]; }
  double& at(int x, int y) { return w[static_cast<std::size_t>(x - 1) * grid_y + (y - 1)]; }
};

// n positions drawn without replacement, uniformly over the grid.
PerforationMask uniform_mask(int grid_x, int grid_y, std::size_t n, std::uint64_t seed);

// Pseudo-regular lattice: Kx = floor(sqrt(n*X/Y)) rows and Ky = floor(sqrt(n*Y/X))
// columns, each axis placed as a(i) = ceil((X/Kx) * (i-1+u)) with one u ~ U(0,1)
// per axis. Realizes Kx*Ky points, which can be fewer than n.
PerforationMask grid_mask(int grid_x, int grid_y, std::size_t n, std::uint64_t seed);

// The (Kx, Ky) a grid mask realizes for a requested n — exact, seed-free, so
// cost accounting can predict grid cardinality without building the mask.
std::pair<int, int> grid_lattice_counts(int grid_x, int grid_y, std::size_t n);

// Exposed for direct testing of the placement formula.
std::vector<int> grid_axis_indices(int extent, int count, double u);

// Pooling window geometry of the layer that follows a conv output.
// With ceil_mode (the usual convnet convention) the output extent is
// ceil((in + 2*pad - size)/stride) + 1, with the final window dropped if it
// would start beyond the padded input; windows are clipped to the input.
struct PoolGeometry {
  int size = 0;
  int stride = 0;
  int pad = 0;
  bool ceil_mode = true;

  int output_extent(int in) const;
  // Window p (1-based) covers input rows [lo, hi], clipped, 1-based.
  void window(int p, int in, int& lo, int& hi) const;
};

// A(x,y): how many pooling windows read position (x,y). Positions used by
// more windows matter more to the following layer.
WeightField pooling_usage_counts(int grid_x, int grid_y, const PoolGeometry& pool);

// Keep the n highest-weight positions; ties are broken by a seeded random
// key per position, so an all-equal field degenerates to a random subset.
PerforationMask top_n_by_weight(const WeightField& field, std::size_t n, std::uint64_t seed);

enum class TiePolicy { lowest_index, random };

// For every grid position, the index (into mask.points order) and coordinates
// of the nearest exactly-evaluated position, Euclidean metric. Mask points map
// to themselves. Equidistant candidates resolve to the lowest row-major index
// by default, or to a seeded random choice.
struct NeighborMap {
  int grid_x = 0;
  int grid_y = 0;
  std::vector<Position> nearest;       // per position, row-major
  std::vector<std::int32_t> mask_row;  // per position: row in mask order

  Position nearest_at(int x, int y) const {
    return nearest[static_cast<std::size_t>(x - 1) * grid_y + (y - 1)];
  }
  std::int32_t row_at(int x, int y) const {
    return mask_row[static_cast<std::size_t>(x - 1) * grid_y + (y - 1)];
  }
};

NeighborMap neighbor_map(const PerforationMask& mask, TiePolicy policy = TiePolicy::lowest_index,
                         std::uint64_t seed = 0);

}  // namespace perfcnn
