#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfcnn/interp.hpp"
#include "perfcnn/masks.hpp"
#include "perfcnn/net_spec.hpp"
#include "perfcnn/rng.hpp"
#include "perfcnn/tensor.hpp"

namespace perfcnn {

// Value flowing between layers. When `plan` is null the storage is dense:
// one row per grid position, row-major, channel fastest (the Tensor3 layout
// flattened). When a perforated conv produced it, only the mask rows are
// stored and `plan` says how to reconstruct the rest.
//
// Layers that are pointwise in the stored values (relu, 1x1 conv) pass the
// plan through untouched; reconstruction happens at the first layer that
// needs spatial context (pooling, spatial conv, fc). Gradients mirror the
// storage of the value they differentiate.
template <typename Real>
struct Activation {
  int grid_x = 0;
  int grid_y = 0;
  int channels = 0;
  std::vector<Real> values;                // rows() * channels
  std::shared_ptr<const InterpPlan> plan;  // null => dense

  bool compact() const { return plan != nullptr; }
  std::size_t rows() const {
    return plan ? plan->rows() : static_cast<std::size_t>(grid_x) * grid_y;
  }
  std::size_t grid_total() const { return static_cast<std::size_t>(grid_x) * grid_y; }

  std::vector<Real> dense() const;  // reconstruct grid_total() * channels values
  Tensor3<Real> to_tensor() const;
  static Activation from_tensor(const Tensor3<Real>& t);
};

template <typename Real>
struct Dataset {
  std::vector<Tensor3<Real>> samples;
  std::vector<int> labels;  // 0-based class ids

  std::size_t size() const { return samples.size(); }
  void validate(int classes) const;
};

template <typename Real>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual void get_params(Real*) const {}
  virtual void set_params(const Real*) {}

  virtual Activation<Real> forward(const Activation<Real>& in) const = 0;

  // Gradient w.r.t. the input's stored values given the gradient w.r.t. the
  // output's stored values. When param_grad is non-null the layer accumulates
  // (adds) its parameter gradient into it, laid out as in get_params.
  virtual Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                                    Real* param_grad) const = 0;
};

template <typename Real>
class ConvLayer : public Layer<Real> {
 public:
  ConvLayer(int index, const LayerSpec& spec, Shape3 in_shape, Shape3 out_shape, Rng& init_rng);

  LayerKind kind() const override { return LayerKind::conv; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<ConvLayer>(*this);
  }

  int kernel_size() const { return d_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }
  int group() const { return group_; }
  Shape3 in_shape() const { return in_shape_; }
  Shape3 out_shape() const { return out_shape_; }
  bool has_bias() const { return bias_enabled_; }

  // 1x1 unit-stride unpadded ungrouped convs without a mask of their own act
  // on the stored rows directly and pass the interpolation plan through.
  bool compact_passthrough() const {
    return d_ == 1 && stride_ == 1 && pad_ == 0 && group_ == 1 && !mask_.has_value();
  }

  KernelTensor<Real>& kernel() { return kernel_; }
  const KernelTensor<Real>& kernel() const { return kernel_; }
  std::vector<Real>& bias() { return bias_; }
  const std::vector<Real>& bias() const { return bias_; }

  bool perforated() const { return mask_.has_value(); }
  const PerforationMask& mask() const;
  const std::shared_ptr<const InterpPlan>& plan() const { return plan_; }
  Interp strategy() const { return strategy_; }

  // Dense output mode: materialize the interpolated grid after a perforated
  // conv instead of passing the compact rows plus plan downstream. Gradients
  // then arrive dense and are reduced back onto the mask rows here.
  bool dense_output() const { return dense_output_; }
  void set_dense_output(bool dense) { dense_output_ = dense; }

  void set_mask(PerforationMask mask, Interp strategy, TiePolicy ties, std::uint64_t tie_seed);
  void clear_mask();

  std::size_t param_count() const override {
    return kernel_.size() + (bias_enabled_ ? bias_.size() : 0);
  }
  void get_params(Real* out) const override;
  void set_params(const Real* in) override;

  Activation<Real> forward(const Activation<Real>& in) const override;
  Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                            Real* param_grad) const override;

 private:
  SpatialIndexSet output_positions() const;

  int index_ = 0;
  int d_ = 0, stride_ = 1, pad_ = 0, group_ = 1;
  bool bias_enabled_ = true;
  Shape3 in_shape_, out_shape_;
  KernelTensor<Real> kernel_;
  std::vector<Real> bias_;
  std::optional<PerforationMask> mask_;
  std::shared_ptr<const InterpPlan> plan_;
  Interp strategy_ = Interp::nearest;
  bool dense_output_ = false;
};

template <typename Real>
class ReluLayer : public Layer<Real> {
 public:
  explicit ReluLayer(int index) : index_(index) {}
  LayerKind kind() const override { return LayerKind::relu; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<ReluLayer>(*this);
  }
  Activation<Real> forward(const Activation<Real>& in) const override;
  Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                            Real* param_grad) const override;

 private:
  int index_ = 0;
};

template <typename Real>
class MaxPoolLayer : public Layer<Real> {
 public:
  MaxPoolLayer(int index, const LayerSpec& spec, Shape3 in_shape, Shape3 out_shape);
  LayerKind kind() const override { return LayerKind::maxpool; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<MaxPoolLayer>(*this);
  }
  const PoolGeometry& geometry() const { return geom_; }
  Activation<Real> forward(const Activation<Real>& in) const override;
  Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                            Real* param_grad) const override;

 private:
  int index_ = 0;
  PoolGeometry geom_;
  Shape3 in_shape_, out_shape_;
};

// Global average pooling. For compact input the spatial mean of the
// reconstruction is taken without materializing it: each stored row
// contributes its total plan weight / grid size.
template <typename Real>
class GapLayer : public Layer<Real> {
 public:
  GapLayer(int index, Shape3 in_shape) : index_(index), in_shape_(in_shape) {}
  LayerKind kind() const override { return LayerKind::gap; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<GapLayer>(*this);
  }
  Activation<Real> forward(const Activation<Real>& in) const override;
  Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                            Real* param_grad) const override;

 private:
  int index_ = 0;
  Shape3 in_shape_;
};

template <typename Real>
class FcLayer : public Layer<Real> {
 public:
  FcLayer(int index, Shape3 in_shape, int out_features, Rng& init_rng);
  LayerKind kind() const override { return LayerKind::fc; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<FcLayer>(*this);
  }
  std::size_t in_features() const { return in_features_; }
  int out_features() const { return out_features_; }
  const std::vector<Real>& weights() const { return weights_; }
  const std::vector<Real>& bias() const { return bias_; }
  std::size_t param_count() const override { return weights_.size() + bias_.size(); }
  void get_params(Real* out) const override;
  void set_params(const Real* in) override;
  Activation<Real> forward(const Activation<Real>& in) const override;
  Activation<Real> backward(const Activation<Real>& in, const Activation<Real>& grad_out,
                            Real* param_grad) const override;

 private:
  int index_ = 0;
  Shape3 in_shape_;
  std::size_t in_features_ = 0;
  int out_features_ = 0;
  std::vector<Real> weights_;  // [in_features x out_features], row-major
  std::vector<Real> bias_;
};

// Kept for architecture fidelity of the classic nets; costs nothing and acts
// as identity, so it only matters for shape bookkeeping.
template <typename Real>
class LrnLayer : public Layer<Real> {
 public:
  explicit LrnLayer(int index) : index_(index) {}
  LayerKind kind() const override { return LayerKind::lrn; }
  std::unique_ptr<Layer<Real>> clone() const override {
    return std::make_unique<LrnLayer>(*this);
  }
  Activation<Real> forward(const Activation<Real>& in) const override { return in; }
  Activation<Real> backward(const Activation<Real>&, const Activation<Real>& grad_out,
                            Real*) const override {
    return grad_out;
  }

 private:
  int index_ = 0;
};

// Numerically stable cross-entropy of a softmax over raw logits. When dlogits
// is non-null it receives softmax(logits) - onehot(label).
template <typename Real>
Real softmax_nll(const std::vector<Real>& logits, int label, std::vector<Real>* dlogits = nullptr);

struct EvalMetrics {
  double mean_loss = 0.0;
  double error_rate = 0.0;
  std::size_t samples = 0;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 64;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::function<void(const EpochLog&)> on_epoch;
};

// Cost-relevant summary of one layer in the context of the current
// perforation state; rows_in/rows_out are the stored value rows the forward
// pass actually touches.
struct LayerDescription {
  int index = 0;  // 1-based
  LayerKind kind = LayerKind::relu;
  int d = 0, stride = 1, pad = 0, group = 1;
  Shape3 in_shape, out_shape;
  std::size_t rows_in = 0, rows_out = 0;
  std::size_t fc_inputs = 0;
  bool perforated = false;
  MaskType mask_type = MaskType::uniform;
  std::size_t mask_points = 0;
  double rate = 0.0;          // realized 1 - N / |output grid|
  bool dense_storage = false;  // perforated conv materializes its full grid
};

template <typename Real>
class Network {
 public:
  // Builds the layers and initializes parameters from init_seed (one derived
  // stream per parameterized layer). Perforation attached in the spec is
  // applied immediately; impact masks need perf_data for that.
  explicit Network(const NetworkSpec& spec, std::uint64_t init_seed = 1,
                   const Dataset<Real>* perf_data = nullptr);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkSpec& spec() const { return spec_; }
  int classes() const { return classes_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const Layer<Real>& layer(int index) const;  // 1-based
  Shape3 input_shape() const { return spec_.input; }
  Shape3 output_shape(int index) const;  // 1-based
  std::vector<LayerDescription> describe() const;

  Interp interpolation() const { return interp_; }
  void set_interpolation(Interp strategy);  // rebuilds existing plans
  void set_tie_policy(TiePolicy policy, std::uint64_t seed);
  Storage storage() const { return storage_; }
  void set_storage(Storage mode);  // applies to every conv layer

  // --- perforation -------------------------------------------------------
  std::vector<int> perforable_layers() const;  // convs with d >= 2, 1-based
  bool is_perforated(int index) const;
  // Generates and installs a mask of the given type on conv layer `index` at
  // rate num/den. structure derives weights from the next pooling layer;
  // impact needs sample data (fields respect masks already in place, so a
  // higher-rate impact mask re-selects from within the current one).
  void set_perforation(int index, MaskType type, Rational rate, std::uint64_t seed,
                       const Dataset<Real>* impact_data = nullptr,
                       std::size_t impact_samples = 512);
  void set_mask(int index, PerforationMask mask);  // install an externally built mask
  void clear_perforation(int index);
  void clear_all_perforation();

  // G(x,y) = sum_t |dL/dV(x,y,t) * V(x,y,t)| at the output of conv layer
  // `index` for one sample. Every layer keeps its mask: a perforated layer
  // only stores V on its mask, so G is zero at the skipped positions and
  // repeated impact perforation nests its masks.
  WeightField impact_field(const Tensor3<Real>& input, int label, int index) const;

  // Mean of impact_field over (up to max_samples of) the dataset. This is
  // the weight field behind impact masks; max_samples = 0 uses everything.
  WeightField average_impact(int index, const Dataset<Real>& data,
                             std::size_t max_samples = 0) const;

  // --- inference ----------------------------------------------------------
  Activation<Real> forward(const Tensor3<Real>& input) const;
  std::vector<Real> logits(const Tensor3<Real>& input) const;
  Real sample_loss(const Tensor3<Real>& input, int label) const;
  int predict(const Tensor3<Real>& input) const;
  // max_samples = 0 evaluates everything. Results are deterministic for a
  // fixed thread count (per-thread partial sums merge in thread order).
  EvalMetrics evaluate(const Dataset<Real>& data, std::size_t max_samples = 0,
                       int threads = 1) const;

  // --- training -----------------------------------------------------------
  // Mini-batch SGD with momentum on all parameters. Deterministic for a fixed
  // thread count: sample order is a seeded shuffle, per-thread gradient
  // buffers merge in thread order.
  void sgd_finetune(const Dataset<Real>& data, const TrainConfig& config);

  // Loss and (when param_grad is non-null, sized param_count) accumulated
  // parameter gradient for one sample.
  Real sample_gradients(const Tensor3<Real>& input, int label, Real* param_grad) const;

  std::size_t param_count() const { return param_total_; }
  std::vector<Real> get_params() const;
  void set_params(const std::vector<Real>& params);

 private:
  ConvLayer<Real>* conv_at(int index);
  const ConvLayer<Real>* conv_at(int index) const;
  void rebuild_plans();
  std::vector<Activation<Real>> forward_chain(const Tensor3<Real>& input) const;
  // Gradient at the output of layer `index` (1-based) together with that
  // output itself.
  void probe_layer_output(const Tensor3<Real>& input, int label, int index,
                          Activation<Real>& value, Activation<Real>& grad) const;

  NetworkSpec spec_;
  int classes_ = 0;
  std::vector<Shape3> shapes_;
  std::vector<std::unique_ptr<Layer<Real>>> layers_;
  std::vector<std::size_t> param_offsets_;
  std::size_t param_total_ = 0;
  Interp interp_ = Interp::nearest;
  Storage storage_ = Storage::compact;
  TiePolicy tie_policy_ = TiePolicy::lowest_index;
  std::uint64_t tie_seed_ = 0;
};

// Outcome of iterative_impact_perforation: the layers in the round-robin
// order used, the ladder rung each one reached (index into the ladder), the
// installed masks, and how many times the impact fields were recomputed
// (one full pass per rate increase).
struct IterativeImpactResult {
  std::vector<int> layers;
  std::vector<int> rungs;
  std::vector<PerforationMask> masks;
  std::size_t impact_recomputations = 0;
};

// Runs `steps` rate increases round-robin over `layers` (each increase moves
// one layer up the increasing rate `ladder`), installing a fresh top-N impact
// mask on the increased layer and then recomputing every listed layer's
// impact field before the next selection. Because gradients respect existing
// masks, each layer's successive masks are nested. Throws when a layer would
// step past the end of the ladder. The net is modified in place.
template <typename Real>
IterativeImpactResult iterative_impact_perforation(Network<Real>& net,
                                                   const std::vector<int>& layers,
                                                   const std::vector<Rational>& ladder,
                                                   std::size_t steps, const Dataset<Real>& data,
                                                   std::uint64_t seed,
                                                   std::size_t impact_samples = 0);

extern template struct Activation<float>;
extern template struct Activation<double>;
extern template struct Dataset<float>;
extern template struct Dataset<double>;
extern template class ConvLayer<float>;
extern template class ConvLayer<double>;
extern template class Network<float>;
extern template class Network<double>;
extern template float softmax_nll(const std::vector<float>&, int, std::vector<float>*);
extern template double softmax_nll(const std::vector<double>&, int, std::vector<double>*);
extern template IterativeImpactResult iterative_impact_perforation(
    Network<float>&, const std::vector<int>&, const std::vector<Rational>&, std::size_t,
    const Dataset<float>&, std::uint64_t, std::size_t);
extern template IterativeImpactResult iterative_impact_perforation(
    Network<double>&, const std::vector<int>&, const std::vector<Rational>&, std::size_t,
    const Dataset<double>&, std::uint64_t, std::size_t);

}  // namespace perfcnn
