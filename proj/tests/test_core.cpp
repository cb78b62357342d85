#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "perfcnn/index_set.hpp"
#include "perfcnn/rational.hpp"
#include "perfcnn/rng.hpp"

using namespace perfcnn;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.raw() == b.raw());
  }
  Rng c(42), d(43);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && (c.raw() == d.raw());
  CHECK_FALSE(all_equal);
}

TEST_CASE("rng: frozen first draws for seed 1") {
  // mt19937_64 output is pinned by the standard; these values also pin our
  // hand-rolled reductions against accidental changes.
  Rng r(1);
  CHECK(r.raw() == 2469588189546311528ull);
  Rng s(1);
  CHECK(s.below(6) == 2469588189546311528ull % 6);  // no rejection for small n
  Rng t(1);
  CHECK(t.real01() == doctest::Approx(static_cast<double>(2469588189546311528ull >> 11) *
                                      std::pow(2.0, -53))
                          .epsilon(1e-15));
}

TEST_CASE("rng: below is in range and covers all residues") {
  Rng r(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = r.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(r.below(0) == 0);
  CHECK(r.below(1) == 0);
}

TEST_CASE("rng: real01 and real_open01 stay in their intervals") {
  Rng r(11);
  for (int i = 0; i < 2000; ++i) {
    const double u = r.real01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.real_open01();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("rng: normal has roughly standard moments") {
  Rng r(5);
  const int n = 20000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(var - 1.0) < 0.1);
}

TEST_CASE("rng: shuffle is a permutation and seed-stable") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(3), b(3);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
  bool moved = false;
  for (int i = 0; i < 50; ++i) moved = moved || v[static_cast<std::size_t>(i)] != i;
  CHECK(moved);
}

TEST_CASE("derive_seed: stable, name-sensitive, seed-sensitive") {
  CHECK(derive_seed(1, "init") == derive_seed(1, "init"));
  CHECK(derive_seed(1, "init") != derive_seed(1, "mask"));
  CHECK(derive_seed(1, "init") != derive_seed(2, "init"));
  // Per-layer streams used throughout the library are pairwise distinct.
  std::set<std::uint64_t> seeds;
  for (int i = 1; i <= 32; ++i) seeds.insert(derive_seed(9, "mask.layer" + std::to_string(i)));
  CHECK(seeds.size() == 32);
}

TEST_CASE("rational: normalization and validation") {
  CHECK(Rational(3, 4).str() == "3/4");
  CHECK(Rational(6, 8) == Rational(3, 4));
  CHECK(Rational(0, 5).zero());
  CHECK(Rational(10, 5).str() == "2/1");
  CHECK(Rational(3, 4).value() == doctest::Approx(0.75));
  CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(Rational(1, -2), std::invalid_argument);
  CHECK_THROWS_AS(Rational(-1, 2), std::invalid_argument);
}

TEST_CASE("parse_rate: fractions, decimals, integers") {
  CHECK(parse_rate("3/4") == Rational(3, 4));
  CHECK(parse_rate("6/8") == Rational(3, 4));
  CHECK(parse_rate("0.8") == Rational(4, 5));
  CHECK(parse_rate("0.75") == Rational(3, 4));
  CHECK(parse_rate(".5") == Rational(1, 2));
  CHECK(parse_rate("0") == Rational(0, 1));
  CHECK(parse_rate("19/20") == Rational(19, 20));
  CHECK_THROWS_AS(parse_rate("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate("0."), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate("0.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rate(""), std::invalid_argument);
}

TEST_CASE("flat_index and row_major_less") {
  CHECK(flat_index({1, 1}, 7) == 0);
  CHECK(flat_index({1, 7}, 7) == 6);
  CHECK(flat_index({2, 1}, 7) == 7);
  CHECK(flat_index({3, 4}, 7) == 17);
  CHECK(row_major_less({1, 2}, {1, 3}));
  CHECK(row_major_less({1, 9}, {2, 1}));
  CHECK_FALSE(row_major_less({2, 2}, {2, 2}));
}

TEST_CASE("SpatialIndexSet: validation catches disorder and range errors") {
  SpatialIndexSet s;
  s.grid_x = 3;
  s.grid_y = 3;
  s.points = {{1, 1}, {2, 3}, {3, 1}};
  CHECK_NOTHROW(s.validate());

  SpatialIndexSet dup = s;
  dup.points = {{1, 1}, {1, 1}};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

  SpatialIndexSet unsorted = s;
  unsorted.points = {{2, 1}, {1, 1}};
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

  SpatialIndexSet outside = s;
  outside.points = {{1, 4}};
  CHECK_THROWS_AS(outside.validate(), std::out_of_range);

  SpatialIndexSet bad_grid;
  bad_grid.grid_x = 0;
  bad_grid.grid_y = 3;
  CHECK_THROWS_AS(bad_grid.validate(), std::invalid_argument);
}

TEST_CASE("full_index_set covers the grid in row-major order") {
  const SpatialIndexSet s = full_index_set(2, 3);
  REQUIRE(s.size() == 6);
  CHECK(s.points.front() == Position{1, 1});
  CHECK(s.points[2] == Position{1, 3});
  CHECK(s.points[3] == Position{2, 1});
  CHECK(s.points.back() == Position{2, 3});
}

TEST_CASE("perforation_rate") {
  CHECK(perforation_rate(16, 64) == doctest::Approx(0.75));
  CHECK(perforation_rate(64, 64) == doctest::Approx(0.0));
  CHECK_THROWS_AS(perforation_rate(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(perforation_rate(65, 64), std::invalid_argument);
}

TEST_CASE("exact_count_for_rate: rounding fixtures") {
  // round(total * keep/den), half up, clamped to [1, total]
  CHECK(exact_count_for_rate(64, 3, 4) == 16);
  CHECK(exact_count_for_rate(100, 1, 3) == 67);   // 100*2/3 = 66.67
  CHECK(exact_count_for_rate(9, 1, 2) == 5);      // 4.5 rounds up
  CHECK(exact_count_for_rate(10, 19, 20) == 1);   // 0.5 rounds up to 1
  CHECK(exact_count_for_rate(5, 19, 20) == 1);    // 0.25 clamps to 1
  CHECK(exact_count_for_rate(64, 0, 1) == 64);
  CHECK_THROWS_AS(exact_count_for_rate(64, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(exact_count_for_rate(64, 5, 4), std::invalid_argument);
  CHECK_THROWS_AS(exact_count_for_rate(64, 1, 0), std::invalid_argument);
}

TEST_CASE("exact_count_for_rate: realized rate tracks the request") {
  for (std::size_t total : {36ull, 64ull, 121ull, 400ull}) {
    for (long long num = 0; num < 20; ++num) {
      const std::size_t n = exact_count_for_rate(total, num, 20);
      const double want = static_cast<double>(num) / 20.0;
      const double got = perforation_rate(n, total);
      CHECK(std::fabs(got - want) <= 0.5 / static_cast<double>(total) + 1e-12);
    }
  }
}
