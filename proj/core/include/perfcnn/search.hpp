#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perfcnn/masks.hpp"
#include "perfcnn/network.hpp"
#include "perfcnn/rational.hpp"

namespace perfcnn {

// What t in a candidate evaluation measures: exact multiplication counts
// (platform-independent, deterministic) or measured forward wall-clock.
enum class CostModel { mults, time };

std::string cost_model_name(CostModel model);
CostModel cost_model_from_name(const std::string& name);

// The twenty rates 1/3, 1/2, 2/3, 3/4, ..., 19/20, strictly increasing.
std::vector<Rational> default_rate_ladder();

// One concrete perforation choice, as stored in config files:
// `layer=<i> mask=<type> r=<p/q> seed=<n>`.
struct MaskChoice {
  int layer = 0;  // 1-based network layer index
  MaskType type = MaskType::uniform;
  Rational rate;
  std::uint64_t seed = 0;

  friend bool operator==(const MaskChoice& a, const MaskChoice& b) {
    return a.layer == b.layer && a.type == b.type && a.rate == b.rate && a.seed == b.seed;
  }
};

std::vector<MaskChoice> parse_mask_config(const std::string& text);
std::string serialize_mask_config(const std::vector<MaskChoice>& choices);

// Clears all perforation, then applies the choices in ascending layer order
// (so impact fields see the layers already perforated before them).
template <typename Real>
void apply_mask_config(Network<Real>& net, const std::vector<MaskChoice>& choices,
                       const Dataset<Real>* impact_data = nullptr,
                       std::size_t impact_samples = 0);

// Ladder-indexed configuration: one entry per perforable layer, rung -1
// meaning unperforated.
struct LayerRate {
  int layer = 0;
  MaskType type = MaskType::uniform;
  int rung = -1;
  std::uint64_t seed = 0;
};

struct PerforationConfig {
  std::vector<Rational> ladder;
  std::vector<LayerRate> layers;

  std::vector<MaskChoice> choices() const;  // perforated layers only
};

// t and e for a configured network next to the unperforated baseline.
struct CandidateEvaluation {
  double t = 0.0;   // multiplications or median seconds, per cost model
  double e = 0.0;   // mean NLL over the evaluation subset
  double t0 = 0.0;  // baseline cost
  double e0 = 0.0;  // baseline objective

  double speedup() const { return t0 / t; }
  // Error increase bought per unit of cost saved; only meaningful when
  // t < t0 (the greedy never evaluates it otherwise).
  double cost() const { return (e - e0) / (t0 - t); }
};

// Applies the config to a copy of `net` and measures (t, e) plus the
// all-masks-cleared baseline (t0, e0). Pure: `net` itself is untouched.
// Impact masks draw on impact_data, defaulting to the evaluation subset.
template <typename Real>
CandidateEvaluation evaluate_config(const Network<Real>& net, const PerforationConfig& config,
                                    const Dataset<Real>& eval_subset,
                                    CostModel model = CostModel::mults,
                                    const Dataset<Real>* impact_data = nullptr,
                                    std::size_t impact_samples = 0);

// One accepted greedy step: the layer whose rate rose, the rate it reached,
// and the evaluation after the step.
struct SearchTraceRow {
  int step = 0;  // 1-based
  int layer = 0;
  Rational rate;
  double t = 0.0;
  double e = 0.0;
  double cost = 0.0;
};

// CSV with header step,layer,rate,t,e,cost.
std::string trace_csv(const std::vector<SearchTraceRow>& rows);

struct GreedyOptions {
  double target_speedup = 2.0;
  MaskType type = MaskType::grid;
  std::uint64_t seed = 0;  // fans out to one mask seed per layer
  CostModel cost_model = CostModel::mults;
  std::vector<Rational> ladder;  // empty means default_rate_ladder()
  std::size_t impact_samples = 0;
  int eval_threads = 1;
};

struct GreedyResult {
  PerforationConfig config;
  std::vector<SearchTraceRow> trace;
  CandidateEvaluation evaluation;  // final t, e with baseline t0, e0
  bool reached_target = false;
};

// Greedy rate configuration: each step advances one layer to its next rung
// that strictly lowers expected cost (quantized masks can make consecutive
// rungs cost-equal, so the advance can skip rungs), evaluates every such
// candidate, and accepts the one minimizing (e - e0) / (t0 - t), lowest
// layer on ties. Stops once speedup t0/t reaches the target or no candidate
// remains; throws if the very first step has no cost-reducing candidate.
// Deterministic given the options and eval subset under the mults model.
// For impact masks the evaluation subset doubles as impact data unless
// impact_data is given.
template <typename Real>
GreedyResult greedy_configure(const Network<Real>& net, const Dataset<Real>& eval_subset,
                              const GreedyOptions& options,
                              const Dataset<Real>* impact_data = nullptr);

// Indices of the non-dominated evaluations under (maximize speedup,
// minimize e), sorted by ascending speedup.
std::vector<std::size_t> pareto_front(const std::vector<CandidateEvaluation>& evals);

// Full enumeration over (ladder rungs + unperforated) per perforable layer.
// Exponential; refused for networks with more than three perforable layers.
struct ExhaustivePoint {
  PerforationConfig config;
  CandidateEvaluation evaluation;
};

template <typename Real>
std::vector<ExhaustivePoint> exhaustive_search(const Network<Real>& net,
                                               const Dataset<Real>& eval_subset,
                                               const GreedyOptions& options,
                                               const Dataset<Real>* impact_data = nullptr);

extern template void apply_mask_config(Network<float>&, const std::vector<MaskChoice>&,
                                       const Dataset<float>*, std::size_t);
extern template void apply_mask_config(Network<double>&, const std::vector<MaskChoice>&,
                                       const Dataset<double>*, std::size_t);
extern template CandidateEvaluation evaluate_config(const Network<float>&,
                                                    const PerforationConfig&,
                                                    const Dataset<float>&, CostModel,
                                                    const Dataset<float>*, std::size_t);
extern template CandidateEvaluation evaluate_config(const Network<double>&,
                                                    const PerforationConfig&,
                                                    const Dataset<double>&, CostModel,
                                                    const Dataset<double>*, std::size_t);
extern template GreedyResult greedy_configure(const Network<float>&, const Dataset<float>&,
                                              const GreedyOptions&, const Dataset<float>*);
extern template GreedyResult greedy_configure(const Network<double>&, const Dataset<double>&,
                                              const GreedyOptions&, const Dataset<double>*);
extern template std::vector<ExhaustivePoint> exhaustive_search(const Network<float>&,
                                                               const Dataset<float>&,
                                                               const GreedyOptions&,
                                                               const Dataset<float>*);
extern template std::vector<ExhaustivePoint> exhaustive_search(const Network<double>&,
                                                               const Dataset<double>&,
                                                               const GreedyOptions&,
                                                               const Dataset<double>*);

}  // namespace perfcnn
