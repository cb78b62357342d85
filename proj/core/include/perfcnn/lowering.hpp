#pragma once

#include <cstdint>
#include <vector>

#include "perfcnn/index_set.hpp"
#include "perfcnn/tensor.hpp"

namespace perfcnn {

// Where a data-matrix row came from: image index within a stacked batch and
// the output position the row evaluates. Needed to unstack results.
struct RowOrigin {
  int image = 0;
  Position pos;
  friend bool operator==(const RowOrigin&, const RowOrigin&) = default;
};

// Patch matrix for the lowered convolution. Row r holds the input patch for
// origin[r], flattened in (i, j, s) order with s fastest; that matches the
// KernelTensor layout, so output = values * kernel-as-[d*d*S, T]-matrix.
template <typename Real>
struct DataMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Real> values;       // rows * cols, row-major
  std::vector<RowOrigin> origin;  // size rows
};

// Build the patch matrix for the listed output positions only (unit stride,
// no padding). positions.grid must equal the conv output grid for kernel
// size d. Throws std::out_of_range naming the offending pair otherwise.
template <typename Real>
DataMatrix<Real> im2row(const Tensor3<Real>& u, int d, const SpatialIndexSet& positions);

// Same with explicit stride and zero padding; output grid is
// floor((X + 2*pad - d)/stride) + 1 per axis.
template <typename Real>
DataMatrix<Real> im2row_strided(const Tensor3<Real>& u, int d, int stride, int pad,
                                const SpatialIndexSet& positions);

inline int conv_output_extent(int in, int d, int stride, int pad) {
  int out = (in + 2 * pad - d) / stride + 1;
  return out;
}

// C[m x n] = A[m x k] * B[k x n], all row-major. Accumulates in ascending-k
// order for every output element, so the result is reproducible and matches
// the naive triple loop's accumulation order; the k-blocking below only
// changes the cache traversal.
template <typename Real>
void gemm(const Real* a, int m, int k, const Real* b, int n, Real* c);

// C[k x n] = A^T * B with A[m x k], B[m x n], overwriting C. Used for kernel
// gradients. Accumulation ascends m.
template <typename Real>
void gemm_at_b(const Real* a, int m, int k, const Real* b, int n, Real* c);

// Multiply the patch matrix by the kernel reshaped to [d*d*S, T].
// Returns rows x T, row-major (position-major, channel fastest).
template <typename Real>
std::vector<Real> matmul(const DataMatrix<Real>& m, const KernelTensor<Real>& kernel);

// Stack the selected rows of several images into one matrix so one large
// multiplication amortizes overheads; origin.image records provenance.
// inputs and masks run parallel; at most stack_factor images are taken.
template <typename Real>
DataMatrix<Real> stack_batch(const std::vector<Tensor3<Real>>& inputs,
                             const std::vector<SpatialIndexSet>& masks, int d, int stack_factor);

// Split a stacked product (rows x t, aligned with origin) back into one
// rows_i x t block per image, in image order.
template <typename Real>
std::vector<std::vector<Real>> unstack(const std::vector<Real>& product, int t,
                                       const std::vector<RowOrigin>& origin);

// Multiplications of a perforated conv evaluated at n positions.
inline std::uint64_t count_mults(int d, int s, int t, std::uint64_t n) {
  return static_cast<std::uint64_t>(d) * d * s * t * n;
}

extern template struct DataMatrix<float>;
extern template struct DataMatrix<double>;
extern template DataMatrix<float> im2row(const Tensor3<float>&, int, const SpatialIndexSet&);
extern template DataMatrix<double> im2row(const Tensor3<double>&, int, const SpatialIndexSet&);
extern template DataMatrix<float> im2row_strided(const Tensor3<float>&, int, int, int,
                                                 const SpatialIndexSet&);
extern template DataMatrix<double> im2row_strided(const Tensor3<double>&, int, int, int,
                                                  const SpatialIndexSet&);
extern template void gemm(const float*, int, int, const float*, int, float*);
extern template void gemm(const double*, int, int, const double*, int, double*);
extern template void gemm_at_b(const float*, int, int, const float*, int, float*);
extern template void gemm_at_b(const double*, int, int, const double*, int, double*);
extern template std::vector<float> matmul(const DataMatrix<float>&, const KernelTensor<float>&);
extern template std::vector<double> matmul(const DataMatrix<double>&, const KernelTensor<double>&);
extern template DataMatrix<float> stack_batch(const std::vector<Tensor3<float>>&,
                                              const std::vector<SpatialIndexSet>&, int, int);
extern template DataMatrix<double> stack_batch(const std::vector<Tensor3<double>>&,
                                               const std::vector<SpatialIndexSet>&, int, int);
extern template std::vector<std::vector<float>> unstack(const std::vector<float>&, int,
                                                        const std::vector<RowOrigin>&);
extern template std::vector<std::vector<double>> unstack(const std::vector<double>&, int,
                                                         const std::vector<RowOrigin>&);

}  // namespace perfcnn
