#include "perfcnn/lowering.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace perfcnn {

namespace {

[[noreturn]] void bad_position(Position p, int out_x, int out_y) {
  throw std::out_of_range("im2row: position (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside output grid " + std::to_string(out_x) + "x" +
                          std::to_string(out_y));
}

}  // namespace

template <typename Real>
DataMatrix<Real> im2row(const Tensor3<Real>& u, int d, const SpatialIndexSet& positions) {
  const int s = u.channels();
  const int out_x = u.height() - d + 1;
  const int out_y = u.width() - d + 1;
  if (d < 1 || out_x < 1 || out_y < 1)
    throw std::invalid_argument("im2row: kernel size " + std::to_string(d) +
                                " does not fit input " + std::to_string(u.height()) + "x" +
                                std::to_string(u.width()));
  if (positions.grid_x != out_x || positions.grid_y != out_y)
    throw std::invalid_argument("im2row: position grid " + std::to_string(positions.grid_x) + "x" +
                                std::to_string(positions.grid_y) + " does not match output grid " +
                                std::to_string(out_x) + "x" + std::to_string(out_y));

  DataMatrix<Real> m;
  m.rows = static_cast<int>(positions.size());
  m.cols = d * d * s;
  m.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
  m.origin.resize(m.rows);

  const int chunk = d * s;  // one patch row: d adjacent columns, all channels
  for (int r = 0; r < m.rows; ++r) {
    const Position p = positions.points[r];
    if (p.x < 1 || p.x > out_x || p.y < 1 || p.y > out_y) bad_position(p, out_x, out_y);
    Real* dst = m.values.data() + static_cast<std::size_t>(r) * m.cols;
    for (int i = 0; i < d; ++i)
      std::memcpy(dst + static_cast<std::size_t>(i) * chunk,
                  u.data() + u.offset(p.x + i, p.y, 1), sizeof(Real) * chunk);
    m.origin[r] = {0, p};
  }
  return m;
}

template <typename Real>
DataMatrix<Real> im2row_strided(const Tensor3<Real>& u, int d, int stride, int pad,
                                const SpatialIndexSet& positions) {
  if (stride < 1 || pad < 0)
    throw std::invalid_argument("im2row_strided: stride must be >= 1 and pad >= 0");
  if (stride == 1 && pad == 0) return im2row(u, d, positions);

  const int s = u.channels();
  const int out_x = conv_output_extent(u.height(), d, stride, pad);
  const int out_y = conv_output_extent(u.width(), d, stride, pad);
  if (out_x < 1 || out_y < 1)
    throw std::invalid_argument("im2row_strided: kernel size " + std::to_string(d) +
                                " does not fit padded input");
  if (positions.grid_x != out_x || positions.grid_y != out_y)
    throw std::invalid_argument("im2row_strided: position grid does not match output grid " +
                                std::to_string(out_x) + "x" + std::to_string(out_y));

  DataMatrix<Real> m;
  m.rows = static_cast<int>(positions.size());
  m.cols = d * d * s;
  m.values.assign(static_cast<std::size_t>(m.rows) * m.cols, Real(0));
  m.origin.resize(m.rows);

  for (int r = 0; r < m.rows; ++r) {
    const Position p = positions.points[r];
    if (p.x < 1 || p.x > out_x || p.y < 1 || p.y > out_y) bad_position(p, out_x, out_y);
    Real* dst = m.values.data() + static_cast<std::size_t>(r) * m.cols;
    const int x0 = (p.x - 1) * stride - pad;  // input row of patch cell i=1, 0-based
    const int y0 = (p.y - 1) * stride - pad;
    for (int i = 0; i < d; ++i) {
      const int xi = x0 + i;
      if (xi < 0 || xi >= u.height()) continue;  // padded rows stay zero
      const int j_lo = std::max(0, -y0);
      const int j_hi = std::min(d, u.width() - y0);
      if (j_lo >= j_hi) continue;
      std::memcpy(dst + (static_cast<std::size_t>(i) * d + j_lo) * s,
                  u.data() + u.offset(xi + 1, y0 + j_lo + 1, 1),
                  sizeof(Real) * static_cast<std::size_t>(j_hi - j_lo) * s);
    }
    m.origin[r] = {0, p};
  }
  return m;
}

template <typename Real>
void gemm(const Real* a, int m, int k, const Real* b, int n, Real* c) {
  std::fill(c, c + static_cast<std::size_t>(m) * n, Real(0));
  constexpr int kb = 128;
  for (int k0 = 0; k0 < k; k0 += kb) {
    const int k1 = std::min(k, k0 + kb);
    for (int i = 0; i < m; ++i) {
      const Real* arow = a + static_cast<std::size_t>(i) * k;
      Real* crow = c + static_cast<std::size_t>(i) * n;
      for (int kk = k0; kk < k1; ++kk) {
        const Real aik = arow[kk];
        const Real* brow = b + static_cast<std::size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }
}

template <typename Real>
void gemm_at_b(const Real* a, int m, int k, const Real* b, int n, Real* c) {
  std::fill(c, c + static_cast<std::size_t>(k) * n, Real(0));
  for (int i = 0; i < m; ++i) {
    const Real* arow = a + static_cast<std::size_t>(i) * k;
    const Real* brow = b + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const Real v = arow[kk];
      Real* crow = c + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

template <typename Real>
std::vector<Real> matmul(const DataMatrix<Real>& m, const KernelTensor<Real>& kernel) {
  if (m.cols != kernel.lowered_rows())
    throw std::invalid_argument("matmul: data matrix has " + std::to_string(m.cols) +
                                " columns, kernel reshapes to " +
                                std::to_string(kernel.lowered_rows()) + " rows");
  std::vector<Real> out(static_cast<std::size_t>(m.rows) * kernel.out_channels());
  gemm(m.values.data(), m.rows, m.cols, kernel.data(), kernel.out_channels(), out.data());
  return out;
}

template <typename Real>
DataMatrix<Real> stack_batch(const std::vector<Tensor3<Real>>& inputs,
                             const std::vector<SpatialIndexSet>& masks, int d, int stack_factor) {
  if (inputs.empty()) throw std::invalid_argument("stack_batch: no inputs");
  if (inputs.size() != masks.size())
    throw std::invalid_argument("stack_batch: " + std::to_string(inputs.size()) + " inputs vs " +
                                std::to_string(masks.size()) + " masks");
  if (stack_factor < 1) throw std::invalid_argument("stack_batch: stack_factor must be >= 1");

  const int take = std::min<int>(stack_factor, static_cast<int>(inputs.size()));
  DataMatrix<Real> stacked;
  for (int img = 0; img < take; ++img) {
    DataMatrix<Real> one = im2row(inputs[img], d, masks[img]);
    if (img == 0) {
      stacked.cols = one.cols;
    } else if (one.cols != stacked.cols) {
      throw std::invalid_argument("stack_batch: image " + std::to_string(img) +
                                  " lowers to a different column count");
    }
    stacked.rows += one.rows;
    stacked.values.insert(stacked.values.end(), one.values.begin(), one.values.end());
    for (RowOrigin& o : one.origin) {
      o.image = img;
      stacked.origin.push_back(o);
    }
  }
  return stacked;
}

template <typename Real>
std::vector<std::vector<Real>> unstack(const std::vector<Real>& product, int t,
                                       const std::vector<RowOrigin>& origin) {
  if (product.size() != origin.size() * static_cast<std::size_t>(t))
    throw std::invalid_argument("unstack: product size does not match origin rows");
  int images = 0;
  for (const RowOrigin& o : origin) images = std::max(images, o.image + 1);
  std::vector<std::vector<Real>> per_image(images);
  for (std::size_t r = 0; r < origin.size(); ++r) {
    const Real* row = product.data() + r * t;
    auto& dst = per_image[origin[r].image];
    dst.insert(dst.end(), row, row + t);
  }
  return per_image;
}

template struct DataMatrix<float>;
template struct DataMatrix<double>;
template DataMatrix<float> im2row(const Tensor3<float>&, int, const SpatialIndexSet&);
template DataMatrix<double> im2row(const Tensor3<double>&, int, const SpatialIndexSet&);
template DataMatrix<float> im2row_strided(const Tensor3<float>&, int, int, int,
                                          const SpatialIndexSet&);
template DataMatrix<double> im2row_strided(const Tensor3<double>&, int, int, int,
                                           const SpatialIndexSet&);
template void gemm(const float*, int, int, const float*, int, float*);
template void gemm(const double*, int, int, const double*, int, double*);
template void gemm_at_b(const float*, int, int, const float*, int, float*);
template void gemm_at_b(const double*, int, int, const double*, int, double*);
template std::vector<float> matmul(const DataMatrix<float>&, const KernelTensor<float>&);
template std::vector<double> matmul(const DataMatrix<double>&, const KernelTensor<double>&);
template DataMatrix<float> stack_batch(const std::vector<Tensor3<float>>&,
                                       const std::vector<SpatialIndexSet>&, int, int);
template DataMatrix<double> stack_batch(const std::vector<Tensor3<double>>&,
                                        const std::vector<SpatialIndexSet>&, int, int);
template std::vector<std::vector<float>> unstack(const std::vector<float>&, int,
                                                 const std::vector<RowOrigin>&);
template std::vector<std::vector<double>> unstack(const std::vector<double>&, int,
                                                  const std::vector<RowOrigin>&);

}  // namespace perfcnn
