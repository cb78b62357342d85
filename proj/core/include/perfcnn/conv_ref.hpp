#pragma once

#include <stdexcept>
#include <string>

#include "perfcnn/tensor.hpp"

namespace perfcnn {

// Reference convolution, deliberately written as the plain five-deep loop:
//
//   V(x,y,t) = sum_i sum_j sum_s K(i,j,s,t) * U(x+i-1, y+j-1, s)
//
// unit stride, no padding, no bias; output is (X-d+1) x (Y-d+1) x T. Every
// optimized path in the library is tested for equivalence against this
// function, so it stays simple on purpose. Accumulation is in the kernel
// order i, then j, then s.
template <typename Real>
Tensor3<Real> direct_conv(const Tensor3<Real>& u, const KernelTensor<Real>& k) {
  const int d = k.size_d();
  if (k.in_channels() != u.channels())
    throw std::invalid_argument("direct_conv: kernel expects " + std::to_string(k.in_channels()) +
                                " input channels, tensor has " + std::to_string(u.channels()));
  const int out_x = u.height() - d + 1;
  const int out_y = u.width() - d + 1;
  if (out_x < 1 || out_y < 1)
    throw std::invalid_argument("direct_conv: kernel size " + std::to_string(d) +
                                " exceeds input " + std::to_string(u.height()) + "x" +
                                std::to_string(u.width()));

  Tensor3<Real> v(out_x, out_y, k.out_channels());
  for (int x = 1; x <= out_x; ++x)
    for (int y = 1; y <= out_y; ++y)
      for (int t = 1; t <= k.out_channels(); ++t) {
        Real acc = 0;
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= d; ++j)
            for (int s = 1; s <= u.channels(); ++s)
              acc += k.at(i, j, s, t) * u.at(x + i - 1, y + j - 1, s);
        v.at(x, y, t) = acc;
      }
  return v;
}

}  // namespace perfcnn
