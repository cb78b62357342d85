#include "perfcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "perfcnn/lowering.hpp"

namespace perfcnn {

namespace {

// Total reconstruction weight each stored row contributes across the grid;
// the column sums of the plan seen as a sparse |grid| x rows matrix.
std::vector<double> plan_row_weights(const InterpPlan& plan) {
  std::vector<double> w(plan.rows(), 0.0);
  for (std::size_t e = 0; e < plan.entry_row.size(); ++e) {
    w[static_cast<std::size_t>(plan.entry_row[e])] += plan.entry_weight[e];
  }
  return w;
}

template <typename Real>
void check_grad_size(const Activation<Real>& grad, std::size_t rows, int channels, int index) {
  if (grad.values.size() != rows * static_cast<std::size_t>(channels)) {
    throw std::logic_error("layer " + std::to_string(index) +
                           ": gradient storage does not match the forward output");
  }
}

}  // namespace

// --- Activation -------------------------------------------------------------

template <typename Real>
std::vector<Real> Activation<Real>::dense() const {
  if (!plan) return values;
  std::vector<Real> out(grid_total() * static_cast<std::size_t>(channels));
  densify(*plan, values.data(), channels, out.data());
  return out;
}

template <typename Real>
Tensor3<Real> Activation<Real>::to_tensor() const {
  Tensor3<Real> t(grid_x, grid_y, channels);
  if (plan) {
    densify(*plan, values.data(), channels, t.data());
  } else {
    t.values() = values;
  }
  return t;
}

template <typename Real>
Activation<Real> Activation<Real>::from_tensor(const Tensor3<Real>& t) {
  Activation a;
  a.grid_x = t.height();
  a.grid_y = t.width();
  a.channels = t.channels();
  a.values = t.values();
  return a;
}

// --- Dataset ----------------------------------------------------------------

template <typename Real>
void Dataset<Real>::validate(int classes) const {
  if (labels.size() != samples.size()) {
    throw std::invalid_argument("dataset: " + std::to_string(samples.size()) + " samples but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (classes < 1) throw std::invalid_argument("dataset: class count must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw std::out_of_range("dataset: label " + std::to_string(labels[i]) + " of sample " +
                              std::to_string(i) + " outside 0.." + std::to_string(classes - 1));
    }
  }
}

// --- ConvLayer ----------------------------------------------------------------

template <typename Real>
ConvLayer<Real>::ConvLayer(int index, const LayerSpec& spec, Shape3 in_shape, Shape3 out_shape,
                           Rng& init_rng)
    : index_(index),
      d_(spec.d),
      stride_(spec.stride),
      pad_(spec.pad),
      group_(spec.group),
      bias_enabled_(spec.bias),
      in_shape_(in_shape),
      out_shape_(out_shape),
      kernel_(spec.d, in_shape.c / spec.group, spec.t),
      bias_(static_cast<std::size_t>(spec.t), Real(0)) {
  const double stddev =
      std::sqrt(2.0 / (static_cast<double>(d_) * d_ * kernel_.in_channels()));
  for (Real& v : kernel_.values()) v = static_cast<Real>(init_rng.normal() * stddev);
}

template <typename Real>
const PerforationMask& ConvLayer<Real>::mask() const {
  if (!mask_) throw std::logic_error("layer " + std::to_string(index_) + " is not perforated");
  return *mask_;
}

template <typename Real>
void ConvLayer<Real>::set_mask(PerforationMask mask, Interp strategy, TiePolicy ties,
                               std::uint64_t tie_seed) {
  if (mask.grid_x != out_shape_.x || mask.grid_y != out_shape_.y) {
    throw std::invalid_argument("layer " + std::to_string(index_) + ": mask grid " +
                                std::to_string(mask.grid_x) + "x" + std::to_string(mask.grid_y) +
                                " does not match conv output " + std::to_string(out_shape_.x) +
                                "x" + std::to_string(out_shape_.y));
  }
  mask.points.validate();
  if (mask.points.points.empty()) {
    throw std::invalid_argument("layer " + std::to_string(index_) + ": mask has no points");
  }
  const NeighborMap neighbors = neighbor_map(mask, ties, tie_seed);
  plan_ = build_interp_plan(mask, neighbors, strategy);
  mask_ = std::move(mask);
  strategy_ = strategy;
}

template <typename Real>
void ConvLayer<Real>::clear_mask() {
  mask_.reset();
  plan_.reset();
}

template <typename Real>
void ConvLayer<Real>::get_params(Real* out) const {
  std::copy(kernel_.values().begin(), kernel_.values().end(), out);
  if (bias_enabled_) std::copy(bias_.begin(), bias_.end(), out + kernel_.size());
}

template <typename Real>
void ConvLayer<Real>::set_params(const Real* in) {
  std::copy(in, in + kernel_.size(), kernel_.values().begin());
  if (bias_enabled_) std::copy(in + kernel_.size(), in + param_count(), bias_.begin());
}

template <typename Real>
SpatialIndexSet ConvLayer<Real>::output_positions() const {
  return mask_ ? mask_->points : full_index_set(out_shape_.x, out_shape_.y);
}

template <typename Real>
Activation<Real> ConvLayer<Real>::forward(const Activation<Real>& in) const {
  if (group_ != 1) {
    throw std::runtime_error("layer " + std::to_string(index_) +
                             ": grouped convolution is supported for cost accounting only");
  }
  if (in.grid_x != in_shape_.x || in.grid_y != in_shape_.y || in.channels != in_shape_.c) {
    throw std::invalid_argument("layer " + std::to_string(index_) + ": expected input " +
                                in_shape_.str() + ", got " + std::to_string(in.grid_x) + "x" +
                                std::to_string(in.grid_y) + "x" + std::to_string(in.channels));
  }
  Activation<Real> out;
  out.grid_x = out_shape_.x;
  out.grid_y = out_shape_.y;
  out.channels = out_shape_.c;
  if (compact_passthrough()) {
    const std::size_t rows = in.rows();
    out.plan = in.plan;
    out.values.resize(rows * static_cast<std::size_t>(out_shape_.c));
    gemm(in.values.data(), static_cast<int>(rows), in_shape_.c, kernel_.data(), out_shape_.c,
         out.values.data());
  } else {
    const Tensor3<Real> u = in.to_tensor();
    const DataMatrix<Real> m = im2row_strided(u, d_, stride_, pad_, output_positions());
    out.values = matmul(m, kernel_);
    out.plan = plan_;
  }
  if (bias_enabled_) {
    const std::size_t rows = out.rows();
    for (std::size_t r = 0; r < rows; ++r) {
      Real* row = out.values.data() + r * static_cast<std::size_t>(out_shape_.c);
      for (int t = 0; t < out_shape_.c; ++t) row[t] += bias_[t];
    }
  }
  if (mask_ && dense_output_) {
    std::vector<Real> dense(out.grid_total() * static_cast<std::size_t>(out_shape_.c));
    densify(*plan_, out.values.data(), out_shape_.c, dense.data());
    out.values = std::move(dense);
    out.plan = nullptr;
  }
  return out;
}

template <typename Real>
Activation<Real> ConvLayer<Real>::backward(const Activation<Real>& in,
                                           const Activation<Real>& grad_out,
                                           Real* param_grad) const {
  if (group_ != 1) {
    throw std::runtime_error("layer " + std::to_string(index_) +
                             ": grouped convolution is supported for cost accounting only");
  }
  const int s = in_shape_.c;
  const int t = out_shape_.c;
  Activation<Real> grad_in;
  grad_in.grid_x = in.grid_x;
  grad_in.grid_y = in.grid_y;
  grad_in.channels = in.channels;
  grad_in.plan = in.plan;

  auto accumulate_bias = [&](const Real* gbase, std::size_t rows) {
    Real* db = param_grad + kernel_.size();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* g = gbase + r * static_cast<std::size_t>(t);
      for (int j = 0; j < t; ++j) db[j] += g[j];
    }
  };

  if (compact_passthrough()) {
    const std::size_t rows = in.rows();
    check_grad_size(grad_out, rows, t, index_);
    if (param_grad) {
      std::vector<Real> dk(kernel_.size());
      gemm_at_b(in.values.data(), static_cast<int>(rows), s, grad_out.values.data(), t, dk.data());
      for (std::size_t i = 0; i < dk.size(); ++i) param_grad[i] += dk[i];
      if (bias_enabled_) accumulate_bias(grad_out.values.data(), rows);
    }
    // dX = g * K^T, via a transposed copy so the multiply streams rows
    std::vector<Real> kt(static_cast<std::size_t>(t) * s);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < t; ++j) {
        kt[static_cast<std::size_t>(j) * s + i] = kernel_.data()[static_cast<std::size_t>(i) * t + j];
      }
    }
    grad_in.values.resize(rows * static_cast<std::size_t>(s));
    gemm(grad_out.values.data(), static_cast<int>(rows), t, kt.data(), s, grad_in.values.data());
    return grad_in;
  }

  const Tensor3<Real> u = in.to_tensor();
  const SpatialIndexSet positions = output_positions();
  const std::size_t rows = positions.size();
  // In dense output mode the downstream gradient covers the whole grid; pull
  // it back onto the mask rows (transpose of the forward densify) first.
  std::vector<Real> reduced;
  const Real* gvals = grad_out.values.data();
  if (mask_ && dense_output_) {
    check_grad_size(grad_out, static_cast<std::size_t>(out_shape_.x) * out_shape_.y, t, index_);
    reduced.resize(rows * static_cast<std::size_t>(t));
    reduce_to_compact(*plan_, grad_out.values.data(), t, reduced.data());
    gvals = reduced.data();
  } else {
    check_grad_size(grad_out, rows, t, index_);
  }
  if (param_grad) {
    const DataMatrix<Real> m = im2row_strided(u, d_, stride_, pad_, positions);
    std::vector<Real> dk(kernel_.size());
    gemm_at_b(m.values.data(), m.rows, m.cols, gvals, t, dk.data());
    for (std::size_t i = 0; i < dk.size(); ++i) param_grad[i] += dk[i];
    if (bias_enabled_) accumulate_bias(gvals, rows);
  }

  // dU: every evaluated position scatters the kernel-weighted gradient patch
  // back over its input window.
  Tensor3<Real> du(in_shape_.x, in_shape_.y, s);
  const int patch_len = kernel_.lowered_rows();
  std::vector<Real> patch(static_cast<std::size_t>(patch_len));
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* g = gvals + r * static_cast<std::size_t>(t);
    gemm(kernel_.data(), patch_len, t, g, 1, patch.data());
    const Position p = positions.points[r];
    const int x0 = (p.x - 1) * stride_ - pad_;
    const int y0 = (p.y - 1) * stride_ - pad_;
    for (int i = 0; i < d_; ++i) {
      const int xi = x0 + i;
      if (xi < 0 || xi >= in_shape_.x) continue;
      for (int j = 0; j < d_; ++j) {
        const int yj = y0 + j;
        if (yj < 0 || yj >= in_shape_.y) continue;
        Real* dst = du.data() + du.offset(xi + 1, yj + 1, 1);
        const Real* src = patch.data() + (static_cast<std::size_t>(i) * d_ + j) * s;
        for (int c = 0; c < s; ++c) dst[c] += src[c];
      }
    }
  }
  if (in.plan) {
    grad_in.values.resize(in.rows() * static_cast<std::size_t>(s));
    reduce_to_compact(*in.plan, du.data(), s, grad_in.values.data());
  } else {
    grad_in.values = std::move(du.values());
  }
  return grad_in;
}

// --- ReluLayer ----------------------------------------------------------------

template <typename Real>
Activation<Real> ReluLayer<Real>::forward(const Activation<Real>& in) const {
  Activation<Real> out = in;
  for (Real& v : out.values) {
    if (v < Real(0)) v = Real(0);
  }
  return out;
}

template <typename Real>
Activation<Real> ReluLayer<Real>::backward(const Activation<Real>& in,
                                           const Activation<Real>& grad_out, Real*) const {
  check_grad_size(grad_out, in.rows(), in.channels, index_);
  Activation<Real> grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.values.size(); ++i) {
    if (in.values[i] <= Real(0)) grad_in.values[i] = Real(0);
  }
  return grad_in;
}

// --- MaxPoolLayer ---------------------------------------------------------------

template <typename Real>
MaxPoolLayer<Real>::MaxPoolLayer(int index, const LayerSpec& spec, Shape3 in_shape,
                                 Shape3 out_shape)
    : index_(index),
      geom_{spec.d, spec.stride, spec.pad, spec.ceil_mode},
      in_shape_(in_shape),
      out_shape_(out_shape) {}

template <typename Real>
Activation<Real> MaxPoolLayer<Real>::forward(const Activation<Real>& in) const {
  const Tensor3<Real> u = in.to_tensor();
  const int c = in_shape_.c;
  Activation<Real> out;
  out.grid_x = out_shape_.x;
  out.grid_y = out_shape_.y;
  out.channels = c;
  out.values.assign(out.grid_total() * static_cast<std::size_t>(c),
                    std::numeric_limits<Real>::lowest());
  for (int px = 1; px <= out_shape_.x; ++px) {
    int lo_x = 0, hi_x = 0;
    geom_.window(px, in_shape_.x, lo_x, hi_x);
    for (int py = 1; py <= out_shape_.y; ++py) {
      int lo_y = 0, hi_y = 0;
      geom_.window(py, in_shape_.y, lo_y, hi_y);
      Real* row = out.values.data() +
                  (static_cast<std::size_t>(px - 1) * out_shape_.y + (py - 1)) * c;
      for (int xx = lo_x; xx <= hi_x; ++xx) {
        for (int yy = lo_y; yy <= hi_y; ++yy) {
          const Real* src = u.data() + u.offset(xx, yy, 1);
          for (int k = 0; k < c; ++k) {
            if (src[k] > row[k]) row[k] = src[k];
          }
        }
      }
    }
  }
  return out;
}

template <typename Real>
Activation<Real> MaxPoolLayer<Real>::backward(const Activation<Real>& in,
                                              const Activation<Real>& grad_out, Real*) const {
  const Tensor3<Real> u = in.to_tensor();
  const int c = in_shape_.c;
  check_grad_size(grad_out, static_cast<std::size_t>(out_shape_.x) * out_shape_.y, c, index_);
  Tensor3<Real> du(in_shape_.x, in_shape_.y, c);
  for (int px = 1; px <= out_shape_.x; ++px) {
    int lo_x = 0, hi_x = 0;
    geom_.window(px, in_shape_.x, lo_x, hi_x);
    for (int py = 1; py <= out_shape_.y; ++py) {
      int lo_y = 0, hi_y = 0;
      geom_.window(py, in_shape_.y, lo_y, hi_y);
      const Real* g = grad_out.values.data() +
                      (static_cast<std::size_t>(px - 1) * out_shape_.y + (py - 1)) * c;
      for (int k = 0; k < c; ++k) {
        // first maximum in scan order wins, matching forward
        Real best = std::numeric_limits<Real>::lowest();
        int bx = lo_x, by = lo_y;
        for (int xx = lo_x; xx <= hi_x; ++xx) {
          for (int yy = lo_y; yy <= hi_y; ++yy) {
            const Real v = u.at(xx, yy, k + 1);
            if (v > best) {
              best = v;
              bx = xx;
              by = yy;
            }
          }
        }
        du.at(bx, by, k + 1) += g[k];
      }
    }
  }
  Activation<Real> grad_in;
  grad_in.grid_x = in.grid_x;
  grad_in.grid_y = in.grid_y;
  grad_in.channels = c;
  grad_in.plan = in.plan;
  if (in.plan) {
    grad_in.values.resize(in.rows() * static_cast<std::size_t>(c));
    reduce_to_compact(*in.plan, du.data(), c, grad_in.values.data());
  } else {
    grad_in.values = std::move(du.values());
  }
  return grad_in;
}

// --- GapLayer -----------------------------------------------------------------

template <typename Real>
Activation<Real> GapLayer<Real>::forward(const Activation<Real>& in) const {
  const int c = in.channels;
  const double total = static_cast<double>(in.grid_total());
  Activation<Real> out;
  out.grid_x = 1;
  out.grid_y = 1;
  out.channels = c;
  std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
  if (in.plan) {
    const std::vector<double> w = plan_row_weights(*in.plan);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const Real* v = in.values.data() + r * static_cast<std::size_t>(c);
      for (int k = 0; k < c; ++k) acc[k] += w[r] * static_cast<double>(v[k]);
    }
  } else {
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const Real* v = in.values.data() + r * static_cast<std::size_t>(c);
      for (int k = 0; k < c; ++k) acc[k] += static_cast<double>(v[k]);
    }
  }
  out.values.resize(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) out.values[k] = static_cast<Real>(acc[k] / total);
  return out;
}

template <typename Real>
Activation<Real> GapLayer<Real>::backward(const Activation<Real>& in,
                                          const Activation<Real>& grad_out, Real*) const {
  const int c = in.channels;
  check_grad_size(grad_out, 1, c, index_);
  const double total = static_cast<double>(in.grid_total());
  Activation<Real> grad_in;
  grad_in.grid_x = in.grid_x;
  grad_in.grid_y = in.grid_y;
  grad_in.channels = c;
  grad_in.plan = in.plan;
  grad_in.values.resize(in.rows() * static_cast<std::size_t>(c));
  if (in.plan) {
    const std::vector<double> w = plan_row_weights(*in.plan);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const double coef = w[r] / total;
      Real* dst = grad_in.values.data() + r * static_cast<std::size_t>(c);
      for (int k = 0; k < c; ++k) {
        dst[k] = static_cast<Real>(coef * static_cast<double>(grad_out.values[k]));
      }
    }
  } else {
    for (std::size_t r = 0; r < in.rows(); ++r) {
      Real* dst = grad_in.values.data() + r * static_cast<std::size_t>(c);
      for (int k = 0; k < c; ++k) {
        dst[k] = static_cast<Real>(static_cast<double>(grad_out.values[k]) / total);
      }
    }
  }
  return grad_in;
}

// --- FcLayer ------------------------------------------------------------------

template <typename Real>
FcLayer<Real>::FcLayer(int index, Shape3 in_shape, int out_features, Rng& init_rng)
    : index_(index),
      in_shape_(in_shape),
      in_features_(static_cast<std::size_t>(in_shape.x) * in_shape.y * in_shape.c),
      out_features_(out_features),
      weights_(in_features_ * static_cast<std::size_t>(out_features)),
      bias_(static_cast<std::size_t>(out_features), Real(0)) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_features_));
  for (Real& v : weights_) v = static_cast<Real>(init_rng.normal() * stddev);
}

template <typename Real>
void FcLayer<Real>::get_params(Real* out) const {
  std::copy(weights_.begin(), weights_.end(), out);
  std::copy(bias_.begin(), bias_.end(), out + weights_.size());
}

template <typename Real>
void FcLayer<Real>::set_params(const Real* in) {
  std::copy(in, in + weights_.size(), weights_.begin());
  std::copy(in + weights_.size(), in + param_count(), bias_.begin());
}

template <typename Real>
Activation<Real> FcLayer<Real>::forward(const Activation<Real>& in) const {
  const std::vector<Real> x = in.dense();
  if (x.size() != in_features_) {
    throw std::invalid_argument("layer " + std::to_string(index_) + ": expected " +
                                std::to_string(in_features_) + " inputs, got " +
                                std::to_string(x.size()));
  }
  Activation<Real> out;
  out.grid_x = 1;
  out.grid_y = 1;
  out.channels = out_features_;
  out.values.resize(static_cast<std::size_t>(out_features_));
  gemm(x.data(), 1, static_cast<int>(in_features_), weights_.data(), out_features_,
       out.values.data());
  for (int j = 0; j < out_features_; ++j) out.values[j] += bias_[j];
  return out;
}

template <typename Real>
Activation<Real> FcLayer<Real>::backward(const Activation<Real>& in,
                                         const Activation<Real>& grad_out,
                                         Real* param_grad) const {
  check_grad_size(grad_out, 1, out_features_, index_);
  const std::vector<Real> x = in.dense();
  const Real* g = grad_out.values.data();
  if (param_grad) {
    std::vector<Real> dw(weights_.size());
    gemm_at_b(x.data(), 1, static_cast<int>(in_features_), g, out_features_, dw.data());
    for (std::size_t i = 0; i < dw.size(); ++i) param_grad[i] += dw[i];
    Real* db = param_grad + weights_.size();
    for (int j = 0; j < out_features_; ++j) db[j] += g[j];
  }
  std::vector<Real> dx(in_features_);
  gemm(weights_.data(), static_cast<int>(in_features_), out_features_, g, 1, dx.data());
  Activation<Real> grad_in;
  grad_in.grid_x = in.grid_x;
  grad_in.grid_y = in.grid_y;
  grad_in.channels = in.channels;
  grad_in.plan = in.plan;
  if (in.plan) {
    grad_in.values.resize(in.rows() * static_cast<std::size_t>(in.channels));
    reduce_to_compact(*in.plan, dx.data(), in.channels, grad_in.values.data());
  } else {
    grad_in.values = std::move(dx);
  }
  return grad_in;
}

// --- loss ---------------------------------------------------------------------

template <typename Real>
Real softmax_nll(const std::vector<Real>& logits, int label, std::vector<Real>* dlogits) {
  if (logits.empty()) throw std::invalid_argument("softmax_nll: empty logits");
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw std::out_of_range("softmax_nll: label " + std::to_string(label) + " outside 0.." +
                            std::to_string(logits.size() - 1));
  }
  double m = -std::numeric_limits<double>::infinity();
  for (Real z : logits) m = std::max(m, static_cast<double>(z));
  double sum = 0.0;
  for (Real z : logits) sum += std::exp(static_cast<double>(z) - m);
  const double lse = m + std::log(sum);
  if (dlogits) {
    dlogits->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double p = std::exp(static_cast<double>(logits[i]) - lse);
      (*dlogits)[i] = static_cast<Real>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
    }
  }
  return static_cast<Real>(lse - static_cast<double>(logits[label]));
}

// --- Network ------------------------------------------------------------------

template <typename Real>
Network<Real>::Network(const NetworkSpec& spec, std::uint64_t init_seed,
                       const Dataset<Real>* perf_data)
    : spec_(spec) {
  shapes_ = spec_.propagate_shapes();
  classes_ = spec_.class_count();
  Shape3 cur = spec_.input;
  layers_.reserve(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& ls = spec_.layers[i];
    const int index = static_cast<int>(i) + 1;
    const Shape3 out = shapes_[i];
    switch (ls.kind) {
      case LayerKind::conv: {
        Rng rng(derive_seed(init_seed, "init.layer" + std::to_string(index)));
        layers_.push_back(std::make_unique<ConvLayer<Real>>(index, ls, cur, out, rng));
        break;
      }
      case LayerKind::relu:
        layers_.push_back(std::make_unique<ReluLayer<Real>>(index));
        break;
      case LayerKind::maxpool:
        layers_.push_back(std::make_unique<MaxPoolLayer<Real>>(index, ls, cur, out));
        break;
      case LayerKind::gap:
        layers_.push_back(std::make_unique<GapLayer<Real>>(index, cur));
        break;
      case LayerKind::fc: {
        Rng rng(derive_seed(init_seed, "init.layer" + std::to_string(index)));
        layers_.push_back(std::make_unique<FcLayer<Real>>(index, cur, ls.t, rng));
        break;
      }
      case LayerKind::lrn:
        layers_.push_back(std::make_unique<LrnLayer<Real>>(index));
        break;
    }
    cur = out;
  }
  param_offsets_.resize(layers_.size());
  param_total_ = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    param_offsets_[i] = param_total_;
    param_total_ += layers_[i]->param_count();
  }
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& ls = spec_.layers[i];
    if (ls.kind == LayerKind::conv && ls.perf.enabled) {
      set_perforation(static_cast<int>(i) + 1, ls.perf.type, ls.perf.rate, ls.perf.seed,
                      perf_data);
    }
  }
}

template <typename Real>
Network<Real>::Network(const Network& other)
    : spec_(other.spec_),
      classes_(other.classes_),
      shapes_(other.shapes_),
      param_offsets_(other.param_offsets_),
      param_total_(other.param_total_),
      interp_(other.interp_),
      storage_(other.storage_),
      tie_policy_(other.tie_policy_),
      tie_seed_(other.tie_seed_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename Real>
Network<Real>& Network<Real>::operator=(const Network& other) {
  if (this != &other) {
    Network tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

template <typename Real>
const Layer<Real>& Network<Real>::layer(int index) const {
  if (index < 1 || index > layer_count()) {
    throw std::out_of_range("layer index " + std::to_string(index) + " outside 1.." +
                            std::to_string(layer_count()));
  }
  return *layers_[static_cast<std::size_t>(index - 1)];
}

template <typename Real>
Shape3 Network<Real>::output_shape(int index) const {
  if (index < 1 || index > layer_count()) {
    throw std::out_of_range("layer index " + std::to_string(index) + " outside 1.." +
                            std::to_string(layer_count()));
  }
  return shapes_[static_cast<std::size_t>(index - 1)];
}

template <typename Real>
ConvLayer<Real>* Network<Real>::conv_at(int index) {
  if (index < 1 || index > layer_count()) {
    throw std::out_of_range("layer index " + std::to_string(index) + " outside 1.." +
                            std::to_string(layer_count()));
  }
  auto* conv = dynamic_cast<ConvLayer<Real>*>(layers_[static_cast<std::size_t>(index - 1)].get());
  if (!conv) {
    throw std::invalid_argument("layer " + std::to_string(index) + " is " +
                                layer_kind_name(layers_[index - 1]->kind()) + ", not conv");
  }
  return conv;
}

template <typename Real>
const ConvLayer<Real>* Network<Real>::conv_at(int index) const {
  return const_cast<Network*>(this)->conv_at(index);
}

template <typename Real>
std::vector<int> Network<Real>::perforable_layers() const {
  std::vector<int> out;
  for (int i = 1; i <= layer_count(); ++i) {
    const auto* conv = dynamic_cast<const ConvLayer<Real>*>(layers_[i - 1].get());
    if (conv && conv->kernel_size() >= 2) out.push_back(i);
  }
  return out;
}

template <typename Real>
bool Network<Real>::is_perforated(int index) const {
  return conv_at(index)->perforated();
}

template <typename Real>
void Network<Real>::set_perforation(int index, MaskType type, Rational rate, std::uint64_t seed,
                                    const Dataset<Real>* impact_data,
                                    std::size_t impact_samples) {
  ConvLayer<Real>* conv = conv_at(index);
  const Shape3 out = conv->out_shape();
  const std::size_t total = static_cast<std::size_t>(out.x) * out.y;
  const std::size_t n = exact_count_for_rate(total, rate.num, rate.den);
  PerforationMask mask;
  switch (type) {
    case MaskType::uniform:
      mask = uniform_mask(out.x, out.y, n, seed);
      break;
    case MaskType::grid:
      mask = grid_mask(out.x, out.y, n, seed);
      break;
    case MaskType::structure: {
      const PoolGeometry* geom = nullptr;
      for (int j = index; j < layer_count(); ++j) {
        const Layer<Real>& next = *layers_[j];
        if (next.kind() == LayerKind::relu || next.kind() == LayerKind::lrn) continue;
        if (next.kind() == LayerKind::conv) {
          const auto* c = dynamic_cast<const ConvLayer<Real>*>(&next);
          if (c->kernel_size() == 1 && c->stride() == 1 && c->pad() == 0) continue;
        } else if (next.kind() == LayerKind::maxpool) {
          geom = &dynamic_cast<const MaxPoolLayer<Real>*>(&next)->geometry();
        }
        break;
      }
      if (!geom) {
        throw std::invalid_argument("layer " + std::to_string(index) +
                                    ": structure mask needs a following pooling layer");
      }
      const WeightField counts = pooling_usage_counts(out.x, out.y, *geom);
      mask = top_n_by_weight(counts, n, seed);
      mask.type = MaskType::structure;
      break;
    }
    case MaskType::impact: {
      if (!impact_data) {
        throw std::invalid_argument("layer " + std::to_string(index) +
                                    ": impact mask needs sample data");
      }
      const WeightField field = average_impact(index, *impact_data, impact_samples);
      mask = top_n_by_weight(field, n, seed);
      break;
    }
  }
  conv->set_mask(std::move(mask), interp_, tie_policy_, tie_seed_);
}

template <typename Real>
void Network<Real>::set_mask(int index, PerforationMask mask) {
  conv_at(index)->set_mask(std::move(mask), interp_, tie_policy_, tie_seed_);
}

template <typename Real>
void Network<Real>::clear_perforation(int index) {
  conv_at(index)->clear_mask();
}

template <typename Real>
void Network<Real>::clear_all_perforation() {
  for (auto& l : layers_) {
    if (auto* conv = dynamic_cast<ConvLayer<Real>*>(l.get())) conv->clear_mask();
  }
}

template <typename Real>
void Network<Real>::rebuild_plans() {
  for (auto& l : layers_) {
    auto* conv = dynamic_cast<ConvLayer<Real>*>(l.get());
    if (conv && conv->perforated()) {
      PerforationMask mask = conv->mask();
      conv->set_mask(std::move(mask), interp_, tie_policy_, tie_seed_);
    }
  }
}

template <typename Real>
void Network<Real>::set_interpolation(Interp strategy) {
  interp_ = strategy;
  rebuild_plans();
}

template <typename Real>
void Network<Real>::set_tie_policy(TiePolicy policy, std::uint64_t seed) {
  tie_policy_ = policy;
  tie_seed_ = seed;
  rebuild_plans();
}

template <typename Real>
void Network<Real>::set_storage(Storage mode) {
  storage_ = mode;
  for (auto& l : layers_) {
    if (auto* conv = dynamic_cast<ConvLayer<Real>*>(l.get())) {
      conv->set_dense_output(mode == Storage::dense);
    }
  }
}

template <typename Real>
WeightField Network<Real>::impact_field(const Tensor3<Real>& input, int label, int index) const {
  const ConvLayer<Real>* conv = conv_at(index);
  const Shape3 out = conv->out_shape();
  WeightField field;
  field.grid_x = out.x;
  field.grid_y = out.y;
  field.w.assign(static_cast<std::size_t>(out.x) * out.y, 0.0);
  Activation<Real> value, grad;
  probe_layer_output(input, label, index, value, grad);
  // The impact is taken against the values the conv actually computed. In
  // compact storage only the mask rows exist, so the gradient already arrives
  // on them; in dense storage the gradient covers the interpolated grid and
  // is pulled back through the interpolation first. Either way the skipped
  // positions keep impact zero, so repeated impact masks nest.
  if (!value.plan && conv->perforated()) {
    const InterpPlan& plan = *conv->plan();
    const std::size_t rows = plan.rows();
    std::vector<Real> gred(rows * static_cast<std::size_t>(out.c));
    reduce_to_compact(plan, grad.values.data(), out.c, gred.data());
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t cell = flat_index(plan.points.points[r], out.y);
      const Real* v = value.values.data() + cell * static_cast<std::size_t>(out.c);
      const Real* g = gred.data() + r * static_cast<std::size_t>(out.c);
      double acc = 0.0;
      for (int t = 0; t < out.c; ++t) {
        acc += std::abs(static_cast<double>(g[t]) * static_cast<double>(v[t]));
      }
      field.w[cell] = acc;
    }
    return field;
  }
  const std::size_t rows = value.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* v = value.values.data() + r * static_cast<std::size_t>(out.c);
    const Real* g = grad.values.data() + r * static_cast<std::size_t>(out.c);
    double acc = 0.0;
    for (int t = 0; t < out.c; ++t) {
      acc += std::abs(static_cast<double>(g[t]) * static_cast<double>(v[t]));
    }
    const std::size_t cell =
        value.plan ? flat_index(value.plan->points.points[r], out.y) : r;
    field.w[cell] = acc;
  }
  return field;
}

template <typename Real>
WeightField Network<Real>::average_impact(int index, const Dataset<Real>& data,
                                          std::size_t max_samples) const {
  data.validate(classes_);
  const std::size_t samples =
      std::min(max_samples == 0 ? data.size() : max_samples, data.size());
  if (samples == 0) throw std::invalid_argument("average_impact: no samples");
  const Shape3 out = conv_at(index)->out_shape();
  WeightField field;
  field.grid_x = out.x;
  field.grid_y = out.y;
  field.w.assign(static_cast<std::size_t>(out.x) * out.y, 0.0);
  for (std::size_t k = 0; k < samples; ++k) {
    const WeightField g = impact_field(data.samples[k], data.labels[k], index);
    for (std::size_t i = 0; i < field.w.size(); ++i) field.w[i] += g.w[i];
  }
  for (double& w : field.w) w /= static_cast<double>(samples);
  return field;
}

template <typename Real>
std::vector<Activation<Real>> Network<Real>::forward_chain(const Tensor3<Real>& input) const {
  if (input.height() != spec_.input.x || input.width() != spec_.input.y ||
      input.channels() != spec_.input.c) {
    throw std::invalid_argument("network input must be " + spec_.input.str() + ", got " +
                                std::to_string(input.height()) + "x" +
                                std::to_string(input.width()) + "x" +
                                std::to_string(input.channels()));
  }
  std::vector<Activation<Real>> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(Activation<Real>::from_tensor(input));
  for (const auto& l : layers_) acts.push_back(l->forward(acts.back()));
  return acts;
}

template <typename Real>
Activation<Real> Network<Real>::forward(const Tensor3<Real>& input) const {
  if (input.height() != spec_.input.x || input.width() != spec_.input.y ||
      input.channels() != spec_.input.c) {
    throw std::invalid_argument("network input must be " + spec_.input.str() + ", got " +
                                std::to_string(input.height()) + "x" +
                                std::to_string(input.width()) + "x" +
                                std::to_string(input.channels()));
  }
  Activation<Real> a = Activation<Real>::from_tensor(input);
  for (const auto& l : layers_) a = l->forward(a);
  return a;
}

template <typename Real>
std::vector<Real> Network<Real>::logits(const Tensor3<Real>& input) const {
  return forward(input).dense();
}

template <typename Real>
Real Network<Real>::sample_loss(const Tensor3<Real>& input, int label) const {
  return softmax_nll<Real>(logits(input), label, nullptr);
}

template <typename Real>
int Network<Real>::predict(const Tensor3<Real>& input) const {
  const std::vector<Real> z = logits(input);
  int best = 0;
  for (int i = 1; i < static_cast<int>(z.size()); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

namespace {

template <typename Real>
Activation<Real> loss_gradient(const Activation<Real>& out, const std::vector<Real>& dense_logits,
                               int label, Real* loss_out) {
  std::vector<Real> dlogits;
  const Real loss = softmax_nll(dense_logits, label, &dlogits);
  if (loss_out) *loss_out = loss;
  Activation<Real> g;
  g.grid_x = out.grid_x;
  g.grid_y = out.grid_y;
  g.channels = out.channels;
  if (out.plan) {
    g.plan = out.plan;
    g.values.resize(out.rows() * static_cast<std::size_t>(out.channels));
    reduce_to_compact(*out.plan, dlogits.data(), out.channels, g.values.data());
  } else {
    g.values = std::move(dlogits);
  }
  return g;
}

}  // namespace

template <typename Real>
void Network<Real>::probe_layer_output(const Tensor3<Real>& input, int label, int index,
                                       Activation<Real>& value, Activation<Real>& grad) const {
  const std::vector<Activation<Real>> acts = forward_chain(input);
  value = acts[static_cast<std::size_t>(index)];  // acts[0] is the network input
  Activation<Real> g = loss_gradient<Real>(acts.back(), acts.back().dense(), label, nullptr);
  for (int i = layer_count() - 1; i >= index; --i) {
    g = layers_[i]->backward(acts[static_cast<std::size_t>(i)], g, nullptr);
  }
  grad = std::move(g);
}

template <typename Real>
Real Network<Real>::sample_gradients(const Tensor3<Real>& input, int label,
                                     Real* param_grad) const {
  const std::vector<Activation<Real>> acts = forward_chain(input);
  Real loss = Real(0);
  Activation<Real> g = loss_gradient<Real>(acts.back(), acts.back().dense(), label, &loss);
  for (int i = layer_count() - 1; i >= 0; --i) {
    Real* pg = param_grad ? param_grad + param_offsets_[static_cast<std::size_t>(i)] : nullptr;
    g = layers_[i]->backward(acts[static_cast<std::size_t>(i)], g, pg);
  }
  return loss;
}

template <typename Real>
EvalMetrics Network<Real>::evaluate(const Dataset<Real>& data, std::size_t max_samples,
                                    int threads) const {
  data.validate(classes_);
  const std::size_t n = max_samples == 0 ? data.size() : std::min(max_samples, data.size());
  if (n == 0) throw std::invalid_argument("evaluate: no samples");
  const int tcount = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), n));
  std::vector<double> loss_sum(tcount, 0.0);
  std::vector<std::size_t> errors(tcount, 0);
  std::vector<std::exception_ptr> failures(tcount);
  auto worker = [&](int ti) {
    try {
      const std::size_t lo = n * ti / tcount;
      const std::size_t hi = n * (ti + 1) / tcount;
      for (std::size_t k = lo; k < hi; ++k) {
        const std::vector<Real> z = logits(data.samples[k]);
        loss_sum[ti] += static_cast<double>(softmax_nll<Real>(z, data.labels[k], nullptr));
        int best = 0;
        for (int i = 1; i < static_cast<int>(z.size()); ++i) {
          if (z[i] > z[best]) best = i;
        }
        if (best != data.labels[k]) ++errors[ti];
      }
    } catch (...) {
      failures[ti] = std::current_exception();
    }
  };
  if (tcount == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(tcount);
    for (int ti = 0; ti < tcount; ++ti) pool.emplace_back(worker, ti);
    for (auto& th : pool) th.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  EvalMetrics m;
  double loss = 0.0;
  std::size_t errs = 0;
  for (int ti = 0; ti < tcount; ++ti) {
    loss += loss_sum[ti];
    errs += errors[ti];
  }
  m.mean_loss = loss / static_cast<double>(n);
  m.error_rate = static_cast<double>(errs) / static_cast<double>(n);
  m.samples = n;
  return m;
}

template <typename Real>
void Network<Real>::sgd_finetune(const Dataset<Real>& data, const TrainConfig& config) {
  data.validate(classes_);
  if (data.size() == 0) throw std::invalid_argument("sgd_finetune: empty dataset");
  if (config.epochs < 0) throw std::invalid_argument("sgd_finetune: epochs must be >= 0");
  if (config.batch_size < 1) throw std::invalid_argument("sgd_finetune: batch size must be >= 1");
  if (!(config.learning_rate > 0)) {
    throw std::invalid_argument("sgd_finetune: learning rate must be positive");
  }
  if (config.momentum < 0 || config.momentum >= 1) {
    throw std::invalid_argument("sgd_finetune: momentum must lie in [0, 1)");
  }
  const int threads = std::max(config.threads, 1);

  std::vector<Real> params = get_params();
  std::vector<double> velocity(param_total_, 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(config.seed, "sgd.shuffle"));
  std::vector<std::vector<Real>> thread_grads(static_cast<std::size_t>(threads));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::size_t bn = stop - start;
      const int tcount = static_cast<int>(std::min<std::size_t>(threads, bn));
      std::vector<double> tloss(tcount, 0.0);
      std::vector<std::exception_ptr> failures(tcount);
      auto worker = [&](int ti) {
        try {
          std::vector<Real>& buf = thread_grads[ti];
          buf.assign(param_total_, Real(0));
          const std::size_t lo = start + bn * ti / tcount;
          const std::size_t hi = start + bn * (ti + 1) / tcount;
          for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t idx = order[k];
            tloss[ti] += static_cast<double>(
                sample_gradients(data.samples[idx], data.labels[idx], buf.data()));
          }
        } catch (...) {
          failures[ti] = std::current_exception();
        }
      };
      if (tcount == 1) {
        worker(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(tcount);
        for (int ti = 0; ti < tcount; ++ti) pool.emplace_back(worker, ti);
        for (auto& th : pool) th.join();
      }
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
      for (int ti = 0; ti < tcount; ++ti) epoch_loss += tloss[ti];

      const double scale = 1.0 / static_cast<double>(bn);
      for (std::size_t p = 0; p < param_total_; ++p) {
        double gsum = 0.0;
        for (int ti = 0; ti < tcount; ++ti) gsum += static_cast<double>(thread_grads[ti][p]);
        const double g = gsum * scale + config.weight_decay * static_cast<double>(params[p]);
        velocity[p] = config.momentum * velocity[p] - config.learning_rate * g;
        params[p] = static_cast<Real>(static_cast<double>(params[p]) + velocity[p]);
      }
      set_params(params);
    }
    if (config.on_epoch) {
      config.on_epoch({epoch, epoch_loss / static_cast<double>(data.size())});
    }
  }
}

template <typename Real>
std::vector<Real> Network<Real>::get_params() const {
  std::vector<Real> out(param_total_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->get_params(out.data() + param_offsets_[i]);
  }
  return out;
}

template <typename Real>
void Network<Real>::set_params(const std::vector<Real>& params) {
  if (params.size() != param_total_) {
    throw std::invalid_argument("set_params: expected " + std::to_string(param_total_) +
                                " values, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->set_params(params.data() + param_offsets_[i]);
  }
}

template <typename Real>
std::vector<LayerDescription> Network<Real>::describe() const {
  std::vector<LayerDescription> out;
  out.reserve(layers_.size());
  Shape3 cur = spec_.input;
  std::size_t rows = static_cast<std::size_t>(cur.x) * cur.y;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer<Real>& l = *layers_[i];
    LayerDescription d;
    d.index = static_cast<int>(i) + 1;
    d.kind = l.kind();
    d.in_shape = cur;
    d.out_shape = shapes_[i];
    d.rows_in = rows;
    switch (d.kind) {
      case LayerKind::conv: {
        const auto* conv = dynamic_cast<const ConvLayer<Real>*>(&l);
        d.d = conv->kernel_size();
        d.stride = conv->stride();
        d.pad = conv->pad();
        d.group = conv->group();
        if (conv->compact_passthrough()) {
          d.rows_out = rows;
        } else if (conv->perforated()) {
          d.perforated = true;
          d.mask_type = conv->mask().type;
          d.mask_points = conv->mask().size();
          d.rate = conv->mask().rate();
          d.dense_storage = conv->dense_output();
          d.rows_out = d.dense_storage
                           ? static_cast<std::size_t>(d.out_shape.x) * d.out_shape.y
                           : d.mask_points;
        } else {
          d.rows_out = static_cast<std::size_t>(d.out_shape.x) * d.out_shape.y;
        }
        break;
      }
      case LayerKind::relu:
      case LayerKind::lrn:
        d.rows_out = rows;
        break;
      case LayerKind::maxpool: {
        const auto* pool = dynamic_cast<const MaxPoolLayer<Real>*>(&l);
        d.d = pool->geometry().size;
        d.stride = pool->geometry().stride;
        d.pad = pool->geometry().pad;
        d.rows_out = static_cast<std::size_t>(d.out_shape.x) * d.out_shape.y;
        break;
      }
      case LayerKind::gap:
        d.rows_out = 1;
        break;
      case LayerKind::fc:
        d.fc_inputs = static_cast<std::size_t>(cur.x) * cur.y * cur.c;
        d.rows_out = 1;
        break;
    }
    rows = d.rows_out;
    cur = shapes_[i];
    out.push_back(d);
  }
  return out;
}

// --- iterative impact perforation ----------------------------------------------

template <typename Real>
IterativeImpactResult iterative_impact_perforation(Network<Real>& net,
                                                   const std::vector<int>& layers,
                                                   const std::vector<Rational>& ladder,
                                                   std::size_t steps, const Dataset<Real>& data,
                                                   std::uint64_t seed,
                                                   std::size_t impact_samples) {
  if (layers.empty()) throw std::invalid_argument("iterative impact perforation: no layers");
  if (ladder.empty()) throw std::invalid_argument("iterative impact perforation: empty ladder");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (!(ladder[i - 1].value() < ladder[i].value())) {
      throw std::invalid_argument("iterative impact perforation: ladder must increase");
    }
  }

  IterativeImpactResult result;
  result.layers = layers;
  result.rungs.assign(layers.size(), -1);
  result.masks.resize(layers.size());

  std::vector<WeightField> fields(layers.size());
  const auto recompute_all = [&] {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      fields[i] = net.average_impact(layers[i], data, impact_samples);
    }
  };
  recompute_all();  // initial fields; only passes after a rate increase count

  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t slot = step % layers.size();
    const int layer = layers[slot];
    const int rung = result.rungs[slot] + 1;
    if (rung >= static_cast<int>(ladder.size())) {
      throw std::runtime_error("iterative impact perforation: rate ladder exhausted for layer " +
                               std::to_string(layer));
    }
    const Shape3 out = net.output_shape(layer);
    const std::size_t total = static_cast<std::size_t>(out.x) * out.y;
    const std::size_t n =
        exact_count_for_rate(total, ladder[static_cast<std::size_t>(rung)].num,
                             ladder[static_cast<std::size_t>(rung)].den);
    PerforationMask mask = top_n_by_weight(
        fields[slot], n, derive_seed(seed, "impact.step" + std::to_string(step)));
    result.rungs[slot] = rung;
    result.masks[slot] = mask;
    net.set_mask(layer, std::move(mask));
    recompute_all();
    ++result.impact_recomputations;
  }
  return result;
}

template struct Activation<float>;
template struct Activation<double>;
template struct Dataset<float>;
template struct Dataset<double>;
template class ConvLayer<float>;
template class ConvLayer<double>;
template class ReluLayer<float>;
template class ReluLayer<double>;
template class MaxPoolLayer<float>;
template class MaxPoolLayer<double>;
template class GapLayer<float>;
template class GapLayer<double>;
template class FcLayer<float>;
template class FcLayer<double>;
template class LrnLayer<float>;
template class LrnLayer<double>;
template class Network<float>;
template class Network<double>;
template float softmax_nll(const std::vector<float>&, int, std::vector<float>*);
template double softmax_nll(const std::vector<double>&, int, std::vector<double>*);
template IterativeImpactResult iterative_impact_perforation(
    Network<float>&, const std::vector<int>&, const std::vector<Rational>&, std::size_t,
    const Dataset<float>&, std::uint64_t, std::size_t);
template IterativeImpactResult iterative_impact_perforation(
    Network<double>&, const std::vector<int>&, const std::vector<Rational>&, std::size_t,
    const Dataset<double>&, std::uint64_t, std::size_t);

}  // namespace perfcnn
