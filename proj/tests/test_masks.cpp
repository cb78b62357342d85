#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "perfcnn/masks.hpp"

using namespace perfcnn;

namespace {

std::set<std::pair<int, int>> point_set(const PerforationMask& m) {
  std::set<std::pair<int, int>> s;
  for (const Position& p : m.points.points) s.emplace(p.x, p.y);
  return s;
}

}  // namespace

TEST_CASE("uniform_mask: size, bounds, no duplicates, determinism") {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const PerforationMask m = uniform_mask(9, 7, 20, seed);
    CHECK(m.grid_x == 9);
    CHECK(m.grid_y == 7);
    CHECK(m.size() == 20);
    CHECK(m.type == MaskType::uniform);
    CHECK_NOTHROW(m.points.validate());  // sorted, unique, in range
    const PerforationMask again = uniform_mask(9, 7, 20, seed);
    CHECK(m.points.points == again.points.points);
  }
  CHECK(uniform_mask(4, 4, 16, 1).size() == 16);
  CHECK(uniform_mask(4, 4, 1, 1).size() == 1);
  CHECK_THROWS_AS(uniform_mask(4, 4, 17, 1), std::invalid_argument);
  CHECK_THROWS_AS(uniform_mask(4, 4, 0, 1), std::invalid_argument);
}

TEST_CASE("uniform_mask: different seeds give different subsets") {
  const PerforationMask a = uniform_mask(16, 16, 64, 1);
  const PerforationMask b = uniform_mask(16, 16, 64, 2);
  CHECK(a.points.points != b.points.points);
}

TEST_CASE("uniform_mask: marginal occupancy is roughly uniform") {
  // Every position should be chosen with probability n/|grid|; check no cell
  // is wildly over- or under-represented over many seeds.
  const int gx = 8, gy = 8;
  const std::size_t n = 16;
  std::vector<int> hits(64, 0);
  const int trials = 400;
  for (int s = 0; s < trials; ++s) {
    for (const Position& p : uniform_mask(gx, gy, n, 1000 + s).points.points)
      ++hits[flat_index(p, gy)];
  }
  const double expect = trials * static_cast<double>(n) / 64.0;  // 100
  for (int h : hits) {
    CHECK(h > expect * 0.5);
    CHECK(h < expect * 1.5);
  }
}

TEST_CASE("grid_axis_indices: frozen placement fixture") {
  // extent 6, 3 rows, u = 0.5: a(i) = ceil(2 * (i - 1 + 0.5)) = 1, 3, 5.
  CHECK(grid_axis_indices(6, 3, 0.5) == std::vector<int>{1, 3, 5});
  // u -> 0 gives the left-most lattice 1, 3 on extent 6 with 2 rows.
  CHECK(grid_axis_indices(6, 2, 1e-12) == std::vector<int>{1, 4});
  // u -> 1 pushes right: ceil(3 * (i - 1 + 1)) = 3, 6.
  CHECK(grid_axis_indices(6, 2, 1.0 - 1e-12) == std::vector<int>{3, 6});
}

TEST_CASE("grid_axis_indices: always count strictly increasing in-range rows") {
  for (int extent : {3, 5, 8, 13}) {
    for (int count = 1; count <= extent; ++count) {
      for (double u : {0.01, 0.25, 0.5, 0.99}) {
        const std::vector<int> a = grid_axis_indices(extent, count, u);
        REQUIRE(a.size() == static_cast<std::size_t>(count));
        for (std::size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i] >= 1);
          CHECK(a[i] <= extent);
          if (i > 0) CHECK(a[i] > a[i - 1]);
        }
      }
    }
  }
}

TEST_CASE("grid_mask realizes the lattice grid_lattice_counts predicts") {
  for (const auto& [gx, gy, n] : std::vector<std::array<int, 3>>{
           {8, 8, 16}, {12, 8, 24}, {7, 13, 20}, {32, 32, 256}, {5, 5, 25}, {9, 4, 7}}) {
    const auto [kx, ky] = grid_lattice_counts(gx, gy, static_cast<std::size_t>(n));
    CHECK(kx >= 1);
    CHECK(ky >= 1);
    CHECK(static_cast<long long>(kx) * ky <= static_cast<long long>(n));
    for (std::uint64_t seed : {1ull, 7ull}) {
      const PerforationMask m = grid_mask(gx, gy, static_cast<std::size_t>(n), seed);
      CHECK(m.type == MaskType::grid);
      CHECK(m.requested == static_cast<std::size_t>(n));
      CHECK(m.size() == static_cast<std::size_t>(kx) * ky);
      CHECK_NOTHROW(m.points.validate());
      // The points form a full lattice: kx distinct rows times ky distinct columns.
      std::set<int> xs, ys;
      for (const Position& p : m.points.points) {
        xs.insert(p.x);
        ys.insert(p.y);
      }
      CHECK(static_cast<int>(xs.size()) == kx);
      CHECK(static_cast<int>(ys.size()) == ky);
    }
  }
}

TEST_CASE("grid_mask: square grid realizes floor(sqrt(n))^2 points") {
  const PerforationMask m = grid_mask(16, 16, 64, 3);
  CHECK(m.size() == 64);  // 8x8 lattice
  const PerforationMask q = grid_mask(16, 16, 60, 3);
  CHECK(q.size() == 49);  // floor(sqrt(60)) = 7 per axis
}

TEST_CASE("pooling_usage_counts: frozen 5x5 / pool 3 stride 2 fixture") {
  PoolGeometry pool;
  pool.size = 3;
  pool.stride = 2;
  pool.pad = 0;
  pool.ceil_mode = true;
  // Two windows per axis, [1,3] and [3,5]; row/col 3 is shared.
  CHECK(pool.output_extent(5) == 2);
  const WeightField f = pooling_usage_counts(5, 5, pool);
  CHECK(f.at(3, 3) == 4.0);
  CHECK(f.at(1, 1) == 1.0);
  CHECK(f.at(1, 3) == 2.0);
  CHECK(f.at(3, 1) == 2.0);
  CHECK(f.at(5, 5) == 1.0);
  CHECK(f.at(2, 2) == 1.0);
}

TEST_CASE("pooling_usage_counts matches brute-force window enumeration") {
  for (const auto& [gx, gy, size, stride, pad, ceil] :
       std::vector<std::array<int, 6>>{{5, 5, 3, 2, 0, 1},
                                       {6, 6, 2, 2, 0, 1},
                                       {7, 9, 3, 2, 1, 1},
                                       {8, 8, 3, 3, 0, 0},
                                       {10, 6, 5, 3, 2, 1},
                                       {4, 4, 3, 1, 0, 0}}) {
    PoolGeometry pool;
    pool.size = size;
    pool.stride = stride;
    pool.pad = pad;
    pool.ceil_mode = ceil != 0;
    const WeightField got = pooling_usage_counts(gx, gy, pool);
    const WeightField want = oracles::brute_pool_counts(gx, gy, size, stride, pad, ceil != 0);
    REQUIRE(got.w.size() == want.w.size());
    for (std::size_t i = 0; i < got.w.size(); ++i) CHECK(got.w[i] == want.w[i]);
  }
}

TEST_CASE("top_n_by_weight: keeps the heaviest positions when weights are distinct") {
  WeightField f;
  f.grid_x = 4;
  f.grid_y = 4;
  f.w.resize(16);
  // Distinct weights: w = flat index => heaviest are the last n positions.
  for (std::size_t i = 0; i < 16; ++i) f.w[i] = static_cast<double>(i);
  const PerforationMask m = top_n_by_weight(f, 5, 123);
  CHECK(m.size() == 5);
  CHECK(m.type == MaskType::impact);
  const auto pts = point_set(m);
  CHECK(pts.count({3, 4}) == 1);  // flat 11
  CHECK(pts.count({4, 1}) == 1);
  CHECK(pts.count({4, 2}) == 1);
  CHECK(pts.count({4, 3}) == 1);
  CHECK(pts.count({4, 4}) == 1);
}

TEST_CASE("top_n_by_weight: n-th selection agrees with a full sort oracle") {
  Rng rng(77);
  WeightField f;
  f.grid_x = 9;
  f.grid_y = 6;
  f.w.resize(54);
  for (double& w : f.w) w = std::fabs(rng.normal());
  for (std::size_t n : {1ull, 7ull, 27ull, 54ull}) {
    const PerforationMask m = top_n_by_weight(f, n, 5);
    REQUIRE(m.size() == n);
    // Oracle: sort weights descending; the selected set's minimum weight must
    // be >= the weight of every rejected position (ties aside, the selected
    // multiset of weights equals the top-n multiset).
    std::vector<double> all = f.w;
    std::sort(all.begin(), all.end(), std::greater<>());
    std::vector<double> chosen;
    for (const Position& p : m.points.points) chosen.push_back(f.at(p.x, p.y));
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    for (std::size_t i = 0; i < n; ++i) CHECK(chosen[i] == all[i]);
  }
}

TEST_CASE("top_n_by_weight: all-equal weights degrade to a seeded random subset") {
  WeightField f;
  f.grid_x = 6;
  f.grid_y = 6;
  f.w.assign(36, 1.0);
  const PerforationMask a = top_n_by_weight(f, 9, 1);
  const PerforationMask b = top_n_by_weight(f, 9, 1);
  const PerforationMask c = top_n_by_weight(f, 9, 2);
  CHECK(a.points.points == b.points.points);
  CHECK(a.points.points != c.points.points);
  CHECK(a.size() == 9);
}

TEST_CASE("top_n_by_weight: zero-weight positions lose to positive ones") {
  WeightField f;
  f.grid_x = 4;
  f.grid_y = 4;
  f.w.assign(16, 0.0);
  f.at(2, 2) = 1.0;
  f.at(3, 1) = 0.5;
  const PerforationMask m = top_n_by_weight(f, 2, 9);
  const auto pts = point_set(m);
  CHECK(pts.count({2, 2}) == 1);
  CHECK(pts.count({3, 1}) == 1);
  CHECK_THROWS_AS(top_n_by_weight(f, 17, 9), std::invalid_argument);
  WeightField bad = f;
  bad.at(1, 1) = -0.25;
  CHECK_THROWS_AS(top_n_by_weight(bad, 2, 9), std::invalid_argument);
}

TEST_CASE("neighbor_map matches brute-force nearest search") {
  Rng rng(31);
  for (const auto& [gx, gy, n] :
       std::vector<std::array<int, 3>>{{7, 7, 5}, {9, 5, 12}, {12, 12, 30}, {6, 6, 1}}) {
    const PerforationMask m = uniform_mask(gx, gy, static_cast<std::size_t>(n),
                                           1000 + static_cast<std::uint64_t>(n));
    const NeighborMap map = neighbor_map(m);
    for (int x = 1; x <= gx; ++x)
      for (int y = 1; y <= gy; ++y) {
        const Position got = map.nearest_at(x, y);
        const Position want = oracles::brute_nearest(m.points, x, y);
        // Lowest-index tie policy: the brute scan visits points in row-major
        // order and keeps the first minimum, so it matches exactly.
        CHECK(got == want);
        CHECK(m.points.points[static_cast<std::size_t>(map.row_at(x, y))] == got);
      }
  }
}

TEST_CASE("neighbor_map: frozen equidistant tie fixture") {
  PerforationMask m;
  m.grid_x = m.grid_y = 3;
  m.points.grid_x = m.points.grid_y = 3;
  m.points.points = {{1, 1}, {1, 3}, {3, 1}, {3, 3}};
  const NeighborMap map = neighbor_map(m);
  // (2,2) is equidistant from all four corners; lowest row-major wins.
  CHECK(map.nearest_at(2, 2) == Position{1, 1});
  // (1,2) ties between (1,1) and (1,3).
  CHECK(map.nearest_at(1, 2) == Position{1, 1});
  CHECK(map.nearest_at(3, 3) == Position{3, 3});

  // Random tie policy: deterministic per seed, still a mask point at the
  // same distance.
  const NeighborMap r1 = neighbor_map(m, TiePolicy::random, 5);
  const NeighborMap r2 = neighbor_map(m, TiePolicy::random, 5);
  for (int x = 1; x <= 3; ++x)
    for (int y = 1; y <= 3; ++y) {
      CHECK(r1.nearest_at(x, y) == r2.nearest_at(x, y));
      const Position p = r1.nearest_at(x, y);
      const Position q = oracles::brute_nearest(m.points, x, y);
      const long long dp = static_cast<long long>(p.x - x) * (p.x - x) +
                           static_cast<long long>(p.y - y) * (p.y - y);
      const long long dq = static_cast<long long>(q.x - x) * (q.x - x) +
                           static_cast<long long>(q.y - y) * (q.y - y);
      CHECK(dp == dq);
    }
}

TEST_CASE("mask_type_name round-trips") {
  for (MaskType t : {MaskType::uniform, MaskType::grid, MaskType::structure, MaskType::impact}) {
    CHECK(mask_type_from_name(mask_type_name(t)) == t);
  }
  CHECK_THROWS_AS(mask_type_from_name("banana"), std::invalid_argument);
}
