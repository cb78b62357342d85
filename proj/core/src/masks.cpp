#include "perfcnn/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "perfcnn/rng.hpp"

namespace perfcnn {

std::string mask_type_name(MaskType t) {
  switch (t) {
    case MaskType::uniform: return "uniform";
    case MaskType::grid: return "grid";
    case MaskType::structure: return "structure";
    case MaskType::impact: return "impact";
  }
  throw std::logic_error("mask_type_name: bad enum value");
}

MaskType mask_type_from_name(const std::string& name) {
  if (name == "uniform") return MaskType::uniform;
  if (name == "grid") return MaskType::grid;
  if (name == "structure") return MaskType::structure;
  if (name == "impact") return MaskType::impact;
  throw std::invalid_argument("unknown mask type '" + name +
                              "' (expected uniform, grid, structure or impact)");
}

namespace {

void check_mask_args(int grid_x, int grid_y, std::size_t n) {
  if (grid_x < 1 || grid_y < 1)
    throw std::invalid_argument("mask: grid dims must be positive, got " + std::to_string(grid_x) +
                                "x" + std::to_string(grid_y));
  const std::size_t total = static_cast<std::size_t>(grid_x) * grid_y;
  if (n < 1 || n > total)
    throw std::invalid_argument("mask: N=" + std::to_string(n) + " must be in [1, " +
                                std::to_string(total) + "]");
}

void sort_row_major(std::vector<Position>& pts) {
  std::sort(pts.begin(), pts.end(), row_major_less);
}

// floor(sqrt(a/b)) for positive integers, exact.
long long isqrt_floor_ratio(unsigned long long a, unsigned long long b) {
  long long k = static_cast<long long>(std::sqrt(static_cast<double>(a) / static_cast<double>(b)));
  while (k > 0 && static_cast<unsigned long long>(k) * k * b > a) --k;
  while (static_cast<unsigned long long>(k + 1) * (k + 1) * b <= a) ++k;
  return k;
}

}  // namespace

PerforationMask uniform_mask(int grid_x, int grid_y, std::size_t n, std::uint64_t seed) {
  check_mask_args(grid_x, grid_y, n);
  const std::size_t total = static_cast<std::size_t>(grid_x) * grid_y;

  // Partial Fisher-Yates over the flat indices: first n entries are the draw.
  std::vector<std::uint32_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }

  PerforationMask m;
  m.grid_x = grid_x;
  m.grid_y = grid_y;
  m.type = MaskType::uniform;
  m.seed = seed;
  m.requested = n;
  m.points.grid_x = grid_x;
  m.points.grid_y = grid_y;
  m.points.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int x = static_cast<int>(idx[i] / grid_y) + 1;
    int y = static_cast<int>(idx[i] % grid_y) + 1;
    m.points.points.push_back({x, y});
  }
  sort_row_major(m.points.points);
  m.points.validate();
  return m;
}

std::vector<int> grid_axis_indices(int extent, int count, double u) {
  if (count < 1 || count > extent)
    throw std::invalid_argument("grid_axis_indices: count must be in [1, extent]");
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("grid_axis_indices: u must lie strictly inside (0, 1)");
  std::vector<int> a(count);
  const double step = static_cast<double>(extent) / count;
  for (int i = 1; i <= count; ++i) {
    int v = static_cast<int>(std::ceil(step * (i - 1 + u)));
    if (v < 1) v = 1;
    if (v > extent) v = extent;
    a[i - 1] = v;
  }
  return a;
}

std::pair<int, int> grid_lattice_counts(int grid_x, int grid_y, std::size_t n) {
  check_mask_args(grid_x, grid_y, n);
  const long long kx = isqrt_floor_ratio(n * static_cast<unsigned long long>(grid_x),
                                         static_cast<unsigned long long>(grid_y));
  const long long ky = isqrt_floor_ratio(n * static_cast<unsigned long long>(grid_y),
                                         static_cast<unsigned long long>(grid_x));
  if (kx < 1 || ky < 1)
    throw std::invalid_argument("grid_mask: N=" + std::to_string(n) + " on grid " +
                                std::to_string(grid_x) + "x" + std::to_string(grid_y) +
                                " yields an empty lattice axis");
  return {static_cast<int>(std::min<long long>(kx, grid_x)),
          static_cast<int>(std::min<long long>(ky, grid_y))};
}

PerforationMask grid_mask(int grid_x, int grid_y, std::size_t n, std::uint64_t seed) {
  const auto [kx, ky] = grid_lattice_counts(grid_x, grid_y, n);

  Rng rng(seed);
  const double ux = rng.real_open01();
  const double uy = rng.real_open01();
  const std::vector<int> rows = grid_axis_indices(grid_x, kx, ux);
  const std::vector<int> cols = grid_axis_indices(grid_y, ky, uy);

  PerforationMask m;
  m.grid_x = grid_x;
  m.grid_y = grid_y;
  m.type = MaskType::grid;
  m.seed = seed;
  m.requested = n;
  m.points.grid_x = grid_x;
  m.points.grid_y = grid_y;
  for (int x : rows)
    for (int y : cols) m.points.points.push_back({x, y});
  m.points.validate();  // rows/cols ascend, so the cross product is row-major
  return m;
}

int PoolGeometry::output_extent(int in) const {
  if (size < 1 || stride < 1 || pad < 0)
    throw std::invalid_argument("PoolGeometry: size/stride must be >= 1 and pad >= 0");
  if (pad >= size) throw std::invalid_argument("PoolGeometry: pad must be smaller than size");
  const int span = in + 2 * pad - size;
  if (span < 0) throw std::invalid_argument("PoolGeometry: window larger than padded input");
  int out = (ceil_mode ? (span + stride - 1) / stride : span / stride) + 1;
  // A window that would start at or beyond the input's padded end reads
  // nothing; drop it (matches the usual ceil-mode clipping rule).
  if ((out - 1) * stride >= in + pad) --out;
  return out;
}

void PoolGeometry::window(int p, int in, int& lo, int& hi) const {
  lo = (p - 1) * stride - pad + 1;
  hi = lo + size - 1;
  if (lo < 1) lo = 1;
  if (hi > in) hi = in;
}

WeightField pooling_usage_counts(int grid_x, int grid_y, const PoolGeometry& pool) {
  if (grid_x < 1 || grid_y < 1)
    throw std::invalid_argument("pooling_usage_counts: grid dims must be positive");
  const int out_x = pool.output_extent(grid_x);
  const int out_y = pool.output_extent(grid_y);
  if (out_x < 1 || out_y < 1)
    throw std::invalid_argument("pooling_usage_counts: pooling geometry produces no windows");

  // Per-axis window counts; A(x,y) factorizes as cnt_x(x) * cnt_y(y).
  std::vector<int> cx(grid_x, 0), cy(grid_y, 0);
  for (int p = 1; p <= out_x; ++p) {
    int lo, hi;
    pool.window(p, grid_x, lo, hi);
    for (int x = lo; x <= hi; ++x) ++cx[x - 1];
  }
  for (int p = 1; p <= out_y; ++p) {
    int lo, hi;
    pool.window(p, grid_y, lo, hi);
    for (int y = lo; y <= hi; ++y) ++cy[y - 1];
  }
  for (int x = 0; x < grid_x; ++x)
    if (cx[x] == 0)
      throw std::invalid_argument("pooling_usage_counts: row " + std::to_string(x + 1) +
                                  " is read by no pooling window (geometry mismatch)");
  for (int y = 0; y < grid_y; ++y)
    if (cy[y] == 0)
      throw std::invalid_argument("pooling_usage_counts: column " + std::to_string(y + 1) +
                                  " is read by no pooling window (geometry mismatch)");

  WeightField f;
  f.grid_x = grid_x;
  f.grid_y = grid_y;
  f.w.resize(static_cast<std::size_t>(grid_x) * grid_y);
  for (int x = 1; x <= grid_x; ++x)
    for (int y = 1; y <= grid_y; ++y) f.at(x, y) = static_cast<double>(cx[x - 1]) * cy[y - 1];
  return f;
}

PerforationMask top_n_by_weight(const WeightField& field, std::size_t n, std::uint64_t seed) {
  check_mask_args(field.grid_x, field.grid_y, n);
  const std::size_t total = field.w.size();
  if (total != static_cast<std::size_t>(field.grid_x) * field.grid_y)
    throw std::invalid_argument("top_n_by_weight: field size does not match its grid dims");
  for (double v : field.w)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("top_n_by_weight: weights must be finite and non-negative");

  // Seeded random tie keys; equal weights reduce to a seeded random subset.
  Rng rng(seed);
  std::vector<std::uint64_t> key(total);
  for (std::uint64_t& k : key) k = rng.raw();

  std::vector<std::uint32_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0u);
  std::nth_element(idx.begin(), idx.begin() + (n - 1), idx.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (field.w[a] != field.w[b]) return field.w[a] > field.w[b];
                     return key[a] < key[b];
                   });

  PerforationMask m;
  m.grid_x = field.grid_x;
  m.grid_y = field.grid_y;
  m.type = MaskType::impact;
  m.seed = seed;
  m.requested = n;
  m.points.grid_x = field.grid_x;
  m.points.grid_y = field.grid_y;
  m.points.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int x = static_cast<int>(idx[i] / field.grid_y) + 1;
    int y = static_cast<int>(idx[i] % field.grid_y) + 1;
    m.points.points.push_back({x, y});
  }
  sort_row_major(m.points.points);
  m.points.validate();
  return m;
}

NeighborMap neighbor_map(const PerforationMask& mask, TiePolicy policy, std::uint64_t seed) {
  if (mask.size() == 0) throw std::invalid_argument("neighbor_map: empty mask");
  mask.points.validate();

  NeighborMap nm;
  nm.grid_x = mask.grid_x;
  nm.grid_y = mask.grid_y;
  const std::size_t total = static_cast<std::size_t>(mask.grid_x) * mask.grid_y;
  nm.nearest.resize(total);
  nm.mask_row.resize(total);

  Rng rng(seed);
  std::vector<std::int32_t> ties;
  const auto& pts = mask.points.points;
  for (int x = 1; x <= mask.grid_x; ++x) {
    for (int y = 1; y <= mask.grid_y; ++y) {
      long long best = -1;
      ties.clear();
      for (std::int32_t r = 0; r < static_cast<std::int32_t>(pts.size()); ++r) {
        const long long dx = x - pts[r].x;
        const long long dy = y - pts[r].y;
        const long long d2 = dx * dx + dy * dy;
        if (best < 0 || d2 < best) {
          best = d2;
          ties.clear();
          ties.push_back(r);
        } else if (d2 == best) {
          ties.push_back(r);
        }
      }
      std::int32_t pick = ties[0];  // points are row-major, so ties[0] is the lowest index
      if (policy == TiePolicy::random && ties.size() > 1)
        pick = ties[static_cast<std::size_t>(rng.below(ties.size()))];
      const std::size_t flat = static_cast<std::size_t>(x - 1) * mask.grid_y + (y - 1);
      nm.nearest[flat] = pts[pick];
      nm.mask_row[flat] = pick;
    }
  }
  return nm;
}

}  // namespace perfcnn
