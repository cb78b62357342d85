#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "perfcnn/conv_ref.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/perfconv.hpp"
#include "perfcnn/rng.hpp"

using namespace perfcnn;

namespace {

PerforationMask any_mask(MaskType type, int gx, int gy, std::size_t n, std::uint64_t seed) {
  switch (type) {
    case MaskType::uniform:
      return uniform_mask(gx, gy, n, seed);
    case MaskType::grid:
      return grid_mask(gx, gy, n, seed);
    case MaskType::structure: {
      PoolGeometry pool;
      pool.size = 3;
      pool.stride = 2;
      pool.pad = 0;
      PerforationMask m = top_n_by_weight(pooling_usage_counts(gx, gy, pool), n, seed);
      m.type = MaskType::structure;
      return m;
    }
    case MaskType::impact: {
      // Stand-in weight field: any positive weights exercise the same path.
      Rng rng(seed);
      WeightField f;
      f.grid_x = gx;
      f.grid_y = gy;
      f.w.resize(static_cast<std::size_t>(gx) * gy);
      for (double& w : f.w) w = std::fabs(rng.normal()) + 0.01;
      return top_n_by_weight(f, n, seed);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("forward_compact matches the direct convolution at every mask point") {
  Rng rng(1);
  for (MaskType type :
       {MaskType::uniform, MaskType::grid, MaskType::structure, MaskType::impact}) {
    for (int trial = 0; trial < 4; ++trial) {
      const int X = 8 + trial, Y = 7 + trial, S = 1 + trial % 3, T = 2 + trial, d = 3;
      const Tensor3<double> u = Tensor3<double>::random(X, Y, S, rng);
      const KernelTensor<double> k = KernelTensor<double>::random(d, S, T, rng);
      const int ox = X - d + 1, oy = Y - d + 1;
      const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(ox) * oy / 3);
      const PerforationMask mask = any_mask(type, ox, oy, n, 50 + trial);
      const PerforatedConvLayer<double> layer(k, mask);
      const PerforatedOutput<double> out = layer.forward_compact(u);
      REQUIRE(out.values.size() == mask.size() * static_cast<std::size_t>(T));
      const Tensor3<double> want = direct_conv(u, k);
      for (std::size_t r = 0; r < mask.size(); ++r) {
        const Position p = mask.points.points[r];
        for (int t = 1; t <= T; ++t) {
          const double got = out.values[r * T + (t - 1)];
          CHECK(got == doctest::Approx(want.at(p.x, p.y, t)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("full mask (r = 0) reproduces the direct convolution everywhere") {
  Rng rng(2);
  for (Interp strategy : {Interp::nearest, Interp::zero, Interp::barycentric}) {
    const Tensor3<double> u = Tensor3<double>::random(9, 8, 2, rng);
    const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 4, rng);
    PerforationMask full;
    full.grid_x = 7;
    full.grid_y = 6;
    full.points = full_index_set(7, 6);
    const PerforatedConvLayer<double> layer(k, full, strategy);
    const Tensor3<double> got = layer.forward(u);
    const Tensor3<double> want = direct_conv(u, k);
    CHECK(oracles::max_rel_diff(got.values(), want.values()) < 1e-12);
  }
}

TEST_CASE("forward equals interpolate over forward_compact") {
  Rng rng(3);
  const Tensor3<double> u = Tensor3<double>::random(10, 10, 3, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 3, 5, rng);
  for (Interp strategy : {Interp::nearest, Interp::zero, Interp::barycentric}) {
    const PerforationMask mask = uniform_mask(8, 8, 16, 9);
    const PerforatedConvLayer<double> layer(k, mask, strategy);
    const Tensor3<double> direct = layer.forward(u);
    const Tensor3<double> two_step = layer.interpolate(layer.forward_compact(u).values);
    CHECK(direct.values() == two_step.values());
  }
}

TEST_CASE("nearest interpolation copies the closest mask point's value") {
  Rng rng(4);
  const Tensor3<double> u = Tensor3<double>::random(9, 9, 2, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 3, rng);
  const PerforationMask mask = uniform_mask(7, 7, 12, 21);
  const PerforatedConvLayer<double> layer(k, mask, Interp::nearest);
  const Tensor3<double> out = layer.forward(u);
  const Tensor3<double> exact = direct_conv(u, k);
  for (int x = 1; x <= 7; ++x)
    for (int y = 1; y <= 7; ++y) {
      const Position q = oracles::brute_nearest(mask.points, x, y);
      for (int t = 1; t <= 3; ++t)
        CHECK(out.at(x, y, t) == doctest::Approx(exact.at(q.x, q.y, t)).epsilon(1e-12));
    }
}

TEST_CASE("zero interpolation leaves skipped positions at zero") {
  Rng rng(5);
  const Tensor3<double> u = Tensor3<double>::random(8, 8, 2, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 2, rng);
  const PerforationMask mask = uniform_mask(6, 6, 7, 13);
  const PerforatedConvLayer<double> layer(k, mask, Interp::zero);
  const Tensor3<double> out = layer.forward(u);
  const Tensor3<double> exact = direct_conv(u, k);
  std::size_t skipped = 0;
  for (int x = 1; x <= 6; ++x)
    for (int y = 1; y <= 6; ++y) {
      const bool on_mask = layer.plan()->exact[flat_index({x, y}, 6)] == 1;
      for (int t = 1; t <= 2; ++t) {
        if (on_mask) {
          CHECK(out.at(x, y, t) == doctest::Approx(exact.at(x, y, t)).epsilon(1e-12));
        } else {
          CHECK(out.at(x, y, t) == 0.0);
          ++skipped;
        }
      }
    }
  CHECK(skipped == (36 - 7) * 2);
}

TEST_CASE("backward gradients match central finite differences") {
  Rng rng(6);
  const int X = 6, Y = 6, S = 2, T = 3, d = 3;
  const int ox = X - d + 1, oy = Y - d + 1;
  const Tensor3<double> u0 = Tensor3<double>::random(X, Y, S, rng);
  const KernelTensor<double> k0 = KernelTensor<double>::random(d, S, T, rng);
  Tensor3<double> w(ox, oy, T);  // fixed weights make the loss scalar: L = <forward(u), w>
  for (double& v : w.values()) v = rng.normal();

  for (Interp strategy : {Interp::nearest, Interp::zero, Interp::barycentric}) {
    const PerforationMask mask = uniform_mask(ox, oy, 6, 31);
    const PerforatedConvLayer<double> layer(k0, mask, strategy);
    const ConvGradients<double> grads = layer.backward(u0, w);

    // dL/dK via FD on the kernel entries.
    const auto loss_k = [&](const std::vector<double>& flat) {
      KernelTensor<double> k = k0;
      std::copy(flat.begin(), flat.end(), k.data());
      const PerforatedConvLayer<double> l(k, mask, strategy);
      const Tensor3<double> out = l.forward(u0);
      double acc = 0;
      for (std::size_t i = 0; i < out.size(); ++i) acc += out.values()[i] * w.values()[i];
      return acc;
    };
    std::vector<double> kflat(k0.data(), k0.data() + k0.size());
    const std::vector<double> fd_k = oracles::fd_gradient(loss_k, kflat);
    REQUIRE(grads.kernel_grad.size() == fd_k.size());
    for (std::size_t i = 0; i < fd_k.size(); ++i)
      CHECK(grads.kernel_grad.data()[i] == doctest::Approx(fd_k[i]).epsilon(1e-6));

    // dL/dU via FD on the input entries.
    const auto loss_u = [&](const std::vector<double>& flat) {
      Tensor3<double> u = u0;
      std::copy(flat.begin(), flat.end(), u.data());
      const Tensor3<double> out = layer.forward(u);
      double acc = 0;
      for (std::size_t i = 0; i < out.size(); ++i) acc += out.values()[i] * w.values()[i];
      return acc;
    };
    std::vector<double> uflat(u0.data(), u0.data() + u0.size());
    const std::vector<double> fd_u = oracles::fd_gradient(loss_u, uflat);
    REQUIRE(grads.input_grad.size() == fd_u.size());
    for (std::size_t i = 0; i < fd_u.size(); ++i)
      CHECK(grads.input_grad.values()[i] == doctest::Approx(fd_u[i]).epsilon(1e-6));

    // dL/dV via FD on the compact values through the interpolation alone.
    const std::vector<double> v0 = layer.forward_compact(u0).values;
    const auto loss_v = [&](const std::vector<double>& v) {
      const Tensor3<double> out = layer.interpolate(v);
      double acc = 0;
      for (std::size_t i = 0; i < out.size(); ++i) acc += out.values()[i] * w.values()[i];
      return acc;
    };
    const std::vector<double> fd_v = oracles::fd_gradient(loss_v, v0);
    REQUIRE(grads.value_grad.size() == fd_v.size());
    for (std::size_t i = 0; i < fd_v.size(); ++i)
      CHECK(grads.value_grad[i] == doctest::Approx(fd_v[i]).epsilon(1e-6));
  }
}

TEST_CASE("value gradient of a skipped position flows to the rows it reads") {
  // With nearest interpolation, dL/dV(row) counts every position whose
  // reconstruction copies that row; check the multiplicity explicitly.
  Rng rng(7);
  const Tensor3<double> u = Tensor3<double>::random(6, 6, 1, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 1, 1, rng);
  const PerforationMask mask = uniform_mask(4, 4, 3, 41);
  const PerforatedConvLayer<double> layer(k, mask, Interp::nearest);
  Tensor3<double> g(4, 4, 1);
  for (double& v : g.values()) v = 1.0;  // dL/d(output) = 1 everywhere
  const ConvGradients<double> grads = layer.backward(u, g);
  std::vector<double> expected(mask.size(), 0.0);
  for (int x = 1; x <= 4; ++x)
    for (int y = 1; y <= 4; ++y)
      expected[static_cast<std::size_t>(neighbor_map(mask).row_at(x, y))] += 1.0;
  REQUIRE(grads.value_grad.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(grads.value_grad[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("mult_count is d*d*S*T*N") {
  Rng rng(8);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 4, 5, rng);
  const PerforationMask mask = uniform_mask(6, 6, 9, 3);
  const PerforatedConvLayer<double> layer(k, mask);
  CHECK(layer.mult_count() == 9ull * 4 * 5 * 9);
}

TEST_CASE("strided_conv evaluates the direct conv at strided positions only") {
  Rng rng(9);
  const Tensor3<double> u = Tensor3<double>::random(11, 9, 2, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 3, rng);
  const Tensor3<double> full = direct_conv(u, k);  // 9 x 7
  for (int stride : {1, 2, 3}) {
    const Tensor3<double> out = strided_conv(u, k, stride);
    CHECK(out.height() == (full.height() - 1) / stride + 1);
    CHECK(out.width() == (full.width() - 1) / stride + 1);
    for (int x = 1; x <= out.height(); ++x)
      for (int y = 1; y <= out.width(); ++y)
        for (int t = 1; t <= 3; ++t)
          CHECK(out.at(x, y, t) ==
                doctest::Approx(full.at(1 + (x - 1) * stride, 1 + (y - 1) * stride, t))
                    .epsilon(1e-12));
  }
  CHECK_THROWS_AS(strided_conv(u, k, 0), std::invalid_argument);
}

TEST_CASE("fractional_stride_conv emits the grid-mask lattice values") {
  Rng rng(10);
  const Tensor3<double> u = Tensor3<double>::random(10, 10, 2, rng);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 4, rng);
  const Tensor3<double> full = direct_conv(u, k);  // 8 x 8
  const double keep = 0.25;
  const std::uint64_t seed = 77;
  const Tensor3<double> out = fractional_stride_conv(u, k, keep, seed);
  const PerforationMask gm = grid_mask(8, 8, 16, seed);
  const auto [kx, ky] = grid_lattice_counts(8, 8, 16);
  CHECK(out.height() == kx);
  CHECK(out.width() == ky);
  for (std::size_t r = 0; r < gm.size(); ++r) {
    const Position p = gm.points.points[r];
    const int ox = static_cast<int>(r) / ky + 1;
    const int oy = static_cast<int>(r) % ky + 1;
    for (int t = 1; t <= 4; ++t)
      CHECK(out.at(ox, oy, t) == doctest::Approx(full.at(p.x, p.y, t)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(fractional_stride_conv(u, k, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(fractional_stride_conv(u, k, 1.5, 1), std::invalid_argument);
}

TEST_CASE("float forward stays within 32-bit tolerance of the double reference") {
  Rng rng(11);
  const Tensor3<float> u = Tensor3<float>::random(12, 12, 3, rng);
  const KernelTensor<float> kf = KernelTensor<float>::random(3, 3, 8, rng);
  const PerforationMask mask = uniform_mask(10, 10, 25, 5);
  const PerforatedConvLayer<float> layer(kf, mask, Interp::nearest);
  const PerforatedOutput<float> out = layer.forward_compact(u);
  const Tensor3<float> want = direct_conv(u, kf);
  for (std::size_t r = 0; r < mask.size(); ++r) {
    const Position p = mask.points.points[r];
    for (int t = 1; t <= 8; ++t) {
      const double a = out.values[r * 8 + (t - 1)];
      const double b = want.at(p.x, p.y, t);
      CHECK(std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}) < 1e-5);
    }
  }
}

TEST_CASE("layer rejects masks that do not match the conv output grid") {
  Rng rng(12);
  const KernelTensor<double> k = KernelTensor<double>::random(3, 2, 2, rng);
  const Tensor3<double> u = Tensor3<double>::random(8, 8, 2, rng);
  const PerforationMask wrong = uniform_mask(5, 5, 4, 1);  // output grid is 6x6
  const PerforatedConvLayer<double> layer(k, wrong);
  CHECK_THROWS(layer.forward(u));
}
