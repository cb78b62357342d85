#include "perfcnn/interp.hpp"

#include <algorithm>
#include <stdexcept>

namespace perfcnn {

std::string interp_name(Interp i) {
  switch (i) {
    case Interp::nearest: return "nearest";
    case Interp::zero: return "zero";
    case Interp::barycentric: return "bary";
  }
  throw std::logic_error("interp_name: bad enum value");
}

Interp interp_from_name(const std::string& name) {
  if (name == "nearest") return Interp::nearest;
  if (name == "zero") return Interp::zero;
  if (name == "bary" || name == "barycentric") return Interp::barycentric;
  throw std::invalid_argument("unknown interpolation '" + name +
                              "' (expected nearest, zero or bary)");
}

std::string storage_name(Storage s) {
  return s == Storage::compact ? "compact" : "dense";
}

Storage storage_from_name(const std::string& name) {
  if (name == "compact") return Storage::compact;
  if (name == "dense") return Storage::dense;
  throw std::invalid_argument("unknown storage mode '" + name + "' (expected compact or dense)");
}

std::shared_ptr<const InterpPlan> build_interp_plan(const PerforationMask& mask,
                                                    const NeighborMap& neighbors, Interp strategy) {
  if (neighbors.grid_x != mask.grid_x || neighbors.grid_y != mask.grid_y)
    throw std::invalid_argument("build_interp_plan: neighbor map grid does not match mask grid");
  mask.points.validate();

  auto plan = std::make_shared<InterpPlan>();
  plan->grid_x = mask.grid_x;
  plan->grid_y = mask.grid_y;
  plan->points = mask.points;
  plan->strategy = strategy;
  const std::size_t total = plan->total();

  plan->exact.assign(total, 0);
  for (std::size_t r = 0; r < mask.points.points.size(); ++r)
    plan->exact[flat_index(mask.points.points[r], mask.grid_y)] = 1;

  plan->nearest_row.resize(total);
  for (std::size_t f = 0; f < total; ++f) plan->nearest_row[f] = neighbors.mask_row[f];

  Triangulation tri;
  if (strategy == Interp::barycentric) {
    tri = delaunay(mask.points);
    plan->bary_degenerate = tri.degenerate;
  }

  plan->entry_begin.assign(total + 1, 0);
  plan->entry_row.clear();
  plan->entry_weight.clear();
  std::size_t f = 0;
  for (int x = 1; x <= mask.grid_x; ++x) {
    for (int y = 1; y <= mask.grid_y; ++y, ++f) {
      plan->entry_begin[f] = static_cast<std::int32_t>(plan->entry_row.size());
      if (plan->exact[f]) {
        plan->entry_row.push_back(plan->nearest_row[f]);  // own row: distance 0
        plan->entry_weight.push_back(1.0);
        continue;
      }
      switch (strategy) {
        case Interp::zero:
          break;  // perforated positions read the neutral value
        case Interp::nearest:
          plan->entry_row.push_back(plan->nearest_row[f]);
          plan->entry_weight.push_back(1.0);
          break;
        case Interp::barycentric: {
          TrianglePick pick;
          if (!tri.degenerate) pick = locate(tri, Position{x, y});
          if (pick.tri < 0) {
            // Outside the hull (or collinear mask): nearest neighbor.
            plan->entry_row.push_back(plan->nearest_row[f]);
            plan->entry_weight.push_back(1.0);
          } else {
            const Triangle& t = tri.triangles[pick.tri];
            const double w[3] = {pick.w0, pick.w1, pick.w2};
            const int v[3] = {t.v0, t.v1, t.v2};
            for (int k = 0; k < 3; ++k) {
              if (w[k] == 0.0) continue;
              plan->entry_row.push_back(v[k]);  // triangulation keeps mask row order
              plan->entry_weight.push_back(w[k]);
            }
          }
          break;
        }
      }
    }
  }
  plan->entry_begin[total] = static_cast<std::int32_t>(plan->entry_row.size());
  return plan;
}

template <typename Real>
void densify(const InterpPlan& plan, const Real* compact, int channels, Real* dense) {
  const std::size_t total = plan.total();
  for (std::size_t f = 0; f < total; ++f) {
    Real* out = dense + f * channels;
    const std::int32_t b = plan.entry_begin[f];
    const std::int32_t e = plan.entry_begin[f + 1];
    if (e == b) {
      std::fill(out, out + channels, Real(0));
    } else if (e == b + 1 && plan.entry_weight[b] == 1.0) {
      const Real* src = compact + static_cast<std::size_t>(plan.entry_row[b]) * channels;
      std::copy(src, src + channels, out);
    } else {
      std::fill(out, out + channels, Real(0));
      for (std::int32_t k = b; k < e; ++k) {
        const Real w = static_cast<Real>(plan.entry_weight[k]);
        const Real* src = compact + static_cast<std::size_t>(plan.entry_row[k]) * channels;
        for (int c = 0; c < channels; ++c) out[c] += w * src[c];
      }
    }
  }
}

template <typename Real>
void reduce_to_compact(const InterpPlan& plan, const Real* dense_grad, int channels,
                       Real* compact_grad) {
  std::fill(compact_grad, compact_grad + plan.rows() * channels, Real(0));
  const std::size_t total = plan.total();
  for (std::size_t f = 0; f < total; ++f) {
    const Real* g = dense_grad + f * channels;
    const std::int32_t b = plan.entry_begin[f];
    const std::int32_t e = plan.entry_begin[f + 1];
    for (std::int32_t k = b; k < e; ++k) {
      const Real w = static_cast<Real>(plan.entry_weight[k]);
      Real* dst = compact_grad + static_cast<std::size_t>(plan.entry_row[k]) * channels;
      for (int c = 0; c < channels; ++c) dst[c] += w * g[c];
    }
  }
}

template void densify(const InterpPlan&, const float*, int, float*);
template void densify(const InterpPlan&, const double*, int, double*);
template void reduce_to_compact(const InterpPlan&, const float*, int, float*);
template void reduce_to_compact(const InterpPlan&, const double*, int, double*);

}  // namespace perfcnn
