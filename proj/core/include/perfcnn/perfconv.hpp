#pragma once

#include <memory>

#include "perfcnn/interp.hpp"
#include "perfcnn/lowering.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/tensor.hpp"

namespace perfcnn {

// A convolution that evaluates exactly only at its mask points and fills the
// rest of the output grid by interpolation. Exact values live in a compact
// N x T block whose row order is the mask's row-major point order; the
// interpolation plan says how any consumer reconstructs the full grid.
template <typename Real>
struct PerforatedOutput {
  std::vector<Real> values;  // N x T (or |grid| x T after densify)
  int channels = 0;
  std::shared_ptr<const InterpPlan> plan;

  Tensor3<Real> densified() const;
};

template <typename Real>
struct ConvGradients {
  std::vector<Real> value_grad;  // N x T: dL/dV at the mask points
  KernelTensor<Real> kernel_grad;
  Tensor3<Real> input_grad;
};

template <typename Real>
class PerforatedConvLayer {
 public:
  PerforatedConvLayer(KernelTensor<Real> kernel, PerforationMask mask,
                      Interp interpolation = Interp::nearest,
                      TiePolicy ties = TiePolicy::lowest_index, std::uint64_t tie_seed = 0);

  const KernelTensor<Real>& kernel() const { return kernel_; }
  const PerforationMask& mask() const { return mask_; }
  const std::shared_ptr<const InterpPlan>& plan() const { return plan_; }

  // Exact values at the mask points, via the lowered multiplication.
  PerforatedOutput<Real> forward_compact(const Tensor3<Real>& u) const;

  // Full interpolated output tensor.
  Tensor3<Real> forward(const Tensor3<Real>& u) const;

  // Splits forward_compact so tests can perturb the exact values directly.
  Tensor3<Real> interpolate(const std::vector<Real>& compact_values) const;

  // Given dL/d(interpolated output), produce dL/dV at the mask points (the
  // derivative of each exact value collects every position that shared it),
  // dL/dK and dL/dU. Both kernel and input gradients only involve the mask
  // rows of the lowered matrix.
  ConvGradients<Real> backward(const Tensor3<Real>& u, const Tensor3<Real>& output_grad) const;

  std::uint64_t mult_count() const {
    return count_mults(kernel_.size_d(), kernel_.in_channels(), kernel_.out_channels(),
                       mask_.size());
  }

 private:
  KernelTensor<Real> kernel_;
  PerforationMask mask_;
  std::shared_ptr<const InterpPlan> plan_;
};

// Plain strided convolution: evaluates at positions 1, 1+stride, ... of the
// unit-stride output grid and emits only those values as a smaller tensor.
// Skipped positions are omitted outright, not interpolated.
template <typename Real>
Tensor3<Real> strided_conv(const Tensor3<Real>& u, const KernelTensor<Real>& k, int stride);

// Fractional-stride baseline: evaluates at the same pseudo-regular lattice a
// grid mask would choose for keep_rate * |grid| points and emits the small
// Kx x Ky x T tensor of those values only.
template <typename Real>
Tensor3<Real> fractional_stride_conv(const Tensor3<Real>& u, const KernelTensor<Real>& k,
                                     double keep_rate, std::uint64_t seed);

extern template struct PerforatedOutput<float>;
extern template struct PerforatedOutput<double>;
extern template struct ConvGradients<float>;
extern template struct ConvGradients<double>;
extern template class PerforatedConvLayer<float>;
extern template class PerforatedConvLayer<double>;
extern template Tensor3<float> strided_conv(const Tensor3<float>&, const KernelTensor<float>&, int);
extern template Tensor3<double> strided_conv(const Tensor3<double>&, const KernelTensor<double>&,
                                             int);
extern template Tensor3<float> fractional_stride_conv(const Tensor3<float>&,
                                                      const KernelTensor<float>&, double,
                                                      std::uint64_t);
extern template Tensor3<double> fractional_stride_conv(const Tensor3<double>&,
                                                       const KernelTensor<double>&, double,
                                                       std::uint64_t);

}  // namespace perfcnn
