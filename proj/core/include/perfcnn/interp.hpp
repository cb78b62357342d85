#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "perfcnn/masks.hpp"
#include "perfcnn/triangulation.hpp"

namespace perfcnn {

enum class Interp { nearest, zero, barycentric };

std::string interp_name(Interp i);
Interp interp_from_name(const std::string& name);

// How perforated conv outputs are stored. compact keeps only the mask rows
// plus the plan to reconstruct the rest on demand; dense materializes the
// interpolated grid immediately. The modes differ downstream of a
// nonlinearity under barycentric interpolation (relu of a convex combination
// is not the combination of relu'd values), so this is a semantic switch,
// not just a memory layout.
enum class Storage { compact, dense };

std::string storage_name(Storage s);
Storage storage_from_name(const std::string& name);

// How to reconstruct a dense output from the compact values held at the mask
// points. The reconstruction is linear, so it is stored as one small weighted
// row per grid position:
//
//   dense(pos, c) = sum_k weight[k] * compact(row[k], c)
//
// Mask positions always reconstruct as themselves with weight 1. For nearest,
// every other position copies its nearest mask point; for zero it has no
// entries; for barycentric it mixes the (up to 3) vertices of the Delaunay
// triangle containing it, falling back to nearest outside the hull, or
// everywhere when the mask is collinear (bary_degenerate reports that).
//
// The same rows run backward: the adjoint scatters a dense gradient back onto
// the compact values, which is exactly "sum the derivatives over all
// positions that shared the value".
struct InterpPlan {
  int grid_x = 0;
  int grid_y = 0;
  SpatialIndexSet points;  // defines the compact row order
  Interp strategy = Interp::nearest;
  bool bary_degenerate = false;

  std::vector<std::int32_t> nearest_row;  // per position: compact row of its nearest mask point

  std::vector<std::int32_t> entry_begin;  // grid_x*grid_y + 1 offsets into the two arrays below
  std::vector<std::int32_t> entry_row;
  std::vector<double> entry_weight;

  std::vector<std::uint8_t> exact;  // per position: 1 when the position is on the mask

  std::size_t total() const { return static_cast<std::size_t>(grid_x) * grid_y; }
  std::size_t rows() const { return points.size(); }
};

std::shared_ptr<const InterpPlan> build_interp_plan(const PerforationMask& mask,
                                                    const NeighborMap& neighbors, Interp strategy);

// dense[(x,y),c] from compact[row,c]; dense must hold grid_x*grid_y*channels.
template <typename Real>
void densify(const InterpPlan& plan, const Real* compact, int channels, Real* dense);

// compact_grad[row,c] = sum over positions reading that row, weighted: the
// transpose of densify. Deterministic: positions are visited row-major.
template <typename Real>
void reduce_to_compact(const InterpPlan& plan, const Real* dense_grad, int channels,
                       Real* compact_grad);

extern template void densify(const InterpPlan&, const float*, int, float*);
extern template void densify(const InterpPlan&, const double*, int, double*);
extern template void reduce_to_compact(const InterpPlan&, const float*, int, float*);
extern template void reduce_to_compact(const InterpPlan&, const double*, int, double*);

}  // namespace perfcnn
