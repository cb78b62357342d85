#include "perfcnn/perfconv.hpp"

#include <cmath>
#include <stdexcept>

namespace perfcnn {

template <typename Real>
Tensor3<Real> PerforatedOutput<Real>::densified() const {
  Tensor3<Real> out(plan->grid_x, plan->grid_y, channels);
  densify(*plan, values.data(), channels, out.data());
  return out;
}

template <typename Real>
PerforatedConvLayer<Real>::PerforatedConvLayer(KernelTensor<Real> kernel, PerforationMask mask,
                                               Interp interpolation, TiePolicy ties,
                                               std::uint64_t tie_seed)
    : kernel_(std::move(kernel)), mask_(std::move(mask)) {
  const NeighborMap nm = neighbor_map(mask_, ties, tie_seed);
  plan_ = build_interp_plan(mask_, nm, interpolation);
}

template <typename Real>
PerforatedOutput<Real> PerforatedConvLayer<Real>::forward_compact(const Tensor3<Real>& u) const {
  const int out_x = u.height() - kernel_.size_d() + 1;
  const int out_y = u.width() - kernel_.size_d() + 1;
  if (out_x != mask_.grid_x || out_y != mask_.grid_y)
    throw std::invalid_argument("perforated conv: mask grid " + std::to_string(mask_.grid_x) +
                                "x" + std::to_string(mask_.grid_y) +
                                " does not match conv output " + std::to_string(out_x) + "x" +
                                std::to_string(out_y));
  const DataMatrix<Real> m = im2row(u, kernel_.size_d(), mask_.points);
  PerforatedOutput<Real> out;
  out.values = matmul(m, kernel_);
  out.channels = kernel_.out_channels();
  out.plan = plan_;
  return out;
}

template <typename Real>
Tensor3<Real> PerforatedConvLayer<Real>::forward(const Tensor3<Real>& u) const {
  return forward_compact(u).densified();
}

template <typename Real>
Tensor3<Real> PerforatedConvLayer<Real>::interpolate(const std::vector<Real>& compact_values) const {
  if (compact_values.size() != mask_.size() * static_cast<std::size_t>(kernel_.out_channels()))
    throw std::invalid_argument("interpolate: expected " + std::to_string(mask_.size()) + " x " +
                                std::to_string(kernel_.out_channels()) + " values");
  Tensor3<Real> out(mask_.grid_x, mask_.grid_y, kernel_.out_channels());
  densify(*plan_, compact_values.data(), kernel_.out_channels(), out.data());
  return out;
}

template <typename Real>
ConvGradients<Real> PerforatedConvLayer<Real>::backward(const Tensor3<Real>& u,
                                                        const Tensor3<Real>& output_grad) const {
  const int d = kernel_.size_d();
  const int s = kernel_.in_channels();
  const int t = kernel_.out_channels();
  if (output_grad.height() != mask_.grid_x || output_grad.width() != mask_.grid_y ||
      output_grad.channels() != t)
    throw std::invalid_argument("perforated conv backward: gradient shape mismatch");

  ConvGradients<Real> g;
  // dL/dV: the interpolation operator is linear, so its adjoint routes every
  // position's gradient to the mask rows it read, with the same weights.
  g.value_grad.resize(mask_.size() * t);
  reduce_to_compact(*plan_, output_grad.data(), t, g.value_grad.data());

  // dL/dK = M^T * dV over the mask rows only.
  const DataMatrix<Real> m = im2row(u, d, mask_.points);
  g.kernel_grad = KernelTensor<Real>(d, s, t);
  gemm_at_b(m.values.data(), m.rows, m.cols, g.value_grad.data(), t, g.kernel_grad.data());

  // dL/dU: scatter dV * K^T patches back onto the input (row2im).
  g.input_grad = Tensor3<Real>(u.height(), u.width(), s);
  std::vector<Real> patch(static_cast<std::size_t>(d) * d * s);
  for (int r = 0; r < m.rows; ++r) {
    const Real* gv = g.value_grad.data() + static_cast<std::size_t>(r) * t;
    // patch[c] = sum_t K[c,t] * gv[t], with K flat as [d*d*S, T]
    const Real* kd = kernel_.data();
    for (int c = 0; c < d * d * s; ++c) {
      Real acc = 0;
      const Real* krow = kd + static_cast<std::size_t>(c) * t;
      for (int tt = 0; tt < t; ++tt) acc += krow[tt] * gv[tt];
      patch[c] = acc;
    }
    const Position p = m.origin[r].pos;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Real* dst = g.input_grad.data() + g.input_grad.offset(p.x + i, p.y + j, 1);
        const Real* src = patch.data() + (static_cast<std::size_t>(i) * d + j) * s;
        for (int c = 0; c < s; ++c) dst[c] += src[c];
      }
  }
  return g;
}

template <typename Real>
Tensor3<Real> strided_conv(const Tensor3<Real>& u, const KernelTensor<Real>& k, int stride) {
  if (stride < 1) throw std::invalid_argument("strided_conv: stride must be >= 1");
  const int d = k.size_d();
  const int full_x = u.height() - d + 1;
  const int full_y = u.width() - d + 1;
  if (full_x < 1 || full_y < 1)
    throw std::invalid_argument("strided_conv: kernel does not fit input");
  const int out_x = (full_x - 1) / stride + 1;
  const int out_y = (full_y - 1) / stride + 1;

  SpatialIndexSet pos;
  pos.grid_x = full_x;
  pos.grid_y = full_y;
  for (int i = 0; i < out_x; ++i)
    for (int j = 0; j < out_y; ++j) pos.points.push_back({1 + i * stride, 1 + j * stride});
  pos.validate();

  const DataMatrix<Real> m = im2row(u, d, pos);
  const std::vector<Real> prod = matmul(m, k);
  Tensor3<Real> out(out_x, out_y, k.out_channels());
  std::copy(prod.begin(), prod.end(), out.data());
  return out;
}

template <typename Real>
Tensor3<Real> fractional_stride_conv(const Tensor3<Real>& u, const KernelTensor<Real>& k,
                                     double keep_rate, std::uint64_t seed) {
  if (!(keep_rate > 0.0 && keep_rate <= 1.0))
    throw std::invalid_argument("fractional_stride_conv: keep_rate must be in (0, 1]");
  const int d = k.size_d();
  const int full_x = u.height() - d + 1;
  const int full_y = u.width() - d + 1;
  if (full_x < 1 || full_y < 1)
    throw std::invalid_argument("fractional_stride_conv: kernel does not fit input");
  const std::size_t total = static_cast<std::size_t>(full_x) * full_y;
  std::size_t n = static_cast<std::size_t>(std::llround(keep_rate * static_cast<double>(total)));
  if (n < 1) n = 1;
  if (n > total) n = total;

  // Same lattice a grid mask would pick; output keeps only those rows/cols.
  const PerforationMask gm = grid_mask(full_x, full_y, n, seed);
  int rows = 0;
  for (const Position& p : gm.points.points)
    if (p.y == gm.points.points.front().y) ++rows;
  const int cols = static_cast<int>(gm.size()) / rows;

  const DataMatrix<Real> m = im2row(u, d, gm.points);
  const std::vector<Real> prod = matmul(m, k);
  Tensor3<Real> out(rows, cols, k.out_channels());
  std::copy(prod.begin(), prod.end(), out.data());
  return out;
}

template struct PerforatedOutput<float>;
template struct PerforatedOutput<double>;
template struct ConvGradients<float>;
template struct ConvGradients<double>;
template class PerforatedConvLayer<float>;
template class PerforatedConvLayer<double>;
template Tensor3<float> strided_conv(const Tensor3<float>&, const KernelTensor<float>&, int);
template Tensor3<double> strided_conv(const Tensor3<double>&, const KernelTensor<double>&, int);
template Tensor3<float> fractional_stride_conv(const Tensor3<float>&, const KernelTensor<float>&,
                                               double, std::uint64_t);
template Tensor3<double> fractional_stride_conv(const Tensor3<double>&, const KernelTensor<double>&,
                                                double, std::uint64_t);

}  // namespace perfcnn
