#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfcnn/rng.hpp"

namespace perfcnn {

// Dense 3-d activation tensor, X rows x Y cols x S channels, laid out
// row-major with the channel fastest:  offset(x,y,s) = ((x-1)*Y + (y-1))*S + (s-1).
// Spatial coordinates are 1-based everywhere in this library, matching the
// mask and file conventions; raw data access through data() is 0-based.
template <typename Real>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int x, int y, int s) : x_(x), y_(y), s_(s) {
    if (x < 1 || y < 1 || s < 1)
      throw std::invalid_argument("Tensor3: dims must be positive, got " + std::to_string(x) +
                                  "x" + std::to_string(y) + "x" + std::to_string(s));
    v_.assign(static_cast<std::size_t>(x) * y * s, Real(0));
  }

  int height() const { return x_; }
  int width() const { return y_; }
  int channels() const { return s_; }
  std::size_t size() const { return v_.size(); }

  Real& at(int x, int y, int s) { return v_[offset(x, y, s)]; }
  Real at(int x, int y, int s) const { return v_[offset(x, y, s)]; }

  Real* data() { return v_.data(); }
  const Real* data() const { return v_.data(); }
  std::vector<Real>& values() { return v_; }
  const std::vector<Real>& values() const { return v_; }

  std::size_t offset(int x, int y, int s) const {
    return (static_cast<std::size_t>(x - 1) * y_ + (y - 1)) * s_ + (s - 1);
  }

  bool all_finite() const {
    for (Real v : v_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static Tensor3 random(int x, int y, int s, Rng& rng) {
    Tensor3 t(x, y, s);
    for (Real& v : t.v_) v = static_cast<Real>(rng.normal());
    return t;
  }

 private:
  int x_ = 0, y_ = 0, s_ = 0;
  std::vector<Real> v_;
};

// Convolution kernel, d x d x S input channels x T output channels, laid out
// (i,j,s,t) with t fastest:  offset = (((i-1)*d + (j-1))*S + (s-1))*T + (t-1).
// The flat array is therefore already the row-major [d*d*S, T] matrix that the
// lowered multiplication consumes; no copy is needed to "reshape".
template <typename Real>
class KernelTensor {
 public:
  KernelTensor() = default;
  KernelTensor(int d, int s, int t) : d_(d), s_(s), t_(t) {
    if (d < 1 || s < 1 || t < 1)
      throw std::invalid_argument("KernelTensor: dims must be positive, got d=" +
                                  std::to_string(d) + " S=" + std::to_string(s) +
                                  " T=" + std::to_string(t));
    v_.assign(static_cast<std::size_t>(d) * d * s * t, Real(0));
  }

  int size_d() const { return d_; }
  int in_channels() const { return s_; }
  int out_channels() const { return t_; }
  std::size_t size() const { return v_.size(); }
  int lowered_rows() const { return d_ * d_ * s_; }  // rows of the [d*d*S, T] matrix

  Real& at(int i, int j, int s, int t) { return v_[offset(i, j, s, t)]; }
  Real at(int i, int j, int s, int t) const { return v_[offset(i, j, s, t)]; }

  Real* data() { return v_.data(); }
  const Real* data() const { return v_.data(); }
  std::vector<Real>& values() { return v_; }
  const std::vector<Real>& values() const { return v_; }

  std::size_t offset(int i, int j, int s, int t) const {
    return ((static_cast<std::size_t>(i - 1) * d_ + (j - 1)) * s_ + (s - 1)) * t_ + (t - 1);
  }

  static KernelTensor random(int d, int s, int t, Rng& rng) {
    KernelTensor k(d, s, t);
    for (Real& v : k.v_) v = static_cast<Real>(rng.normal());
    return k;
  }

 private:
  int d_ = 0, s_ = 0, t_ = 0;
  std::vector<Real> v_;
};

}  // namespace perfcnn
