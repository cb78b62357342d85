#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "perfcnn/net_spec.hpp"
#include "perfcnn/network.hpp"

namespace perfcnn {

// Static cost of one layer for a single forward pass, as the network would
// actually execute it (compact rows propagate through mask-transparent
// layers, so a 1x1 conv after a perforated conv is billed its reduced rows).
struct LayerCost {
  int index = 0;  // 1-based layer index
  LayerKind kind = LayerKind::relu;
  int d = 0;
  int group = 1;
  std::size_t rows = 0;         // spatial rows this layer stores
  std::size_t grid_total = 0;   // dense spatial extent of its output
  double rate = 0.0;            // realized perforation rate of the stored output
  std::size_t mults = 0;        // multiplications at the configured rows
  std::size_t baseline_mults = 0;
  std::size_t activation_bytes = 0;  // stored output bytes at the configured rows
  std::size_t baseline_activation_bytes = 0;
};

struct TimingStats {
  double median_s = 0.0;
  double iqr_s = 0.0;  // interquartile range over repetitions
  double mean_s = 0.0;
  int repetitions = 0;
  bool resolution_ok = true;  // false when the clock tick is too coarse for the workload
};

// The full reporting bundle: exact static accounting, and (after
// time_forward) wall-clock statistics for the configured and baseline paths.
struct CostReport {
  std::vector<LayerCost> layers;
  std::size_t total_mults = 0;
  std::size_t baseline_mults = 0;
  std::size_t total_activation_bytes = 0;  // includes the input tensor
  std::size_t baseline_activation_bytes = 0;
  double theoretical_speedup = 1.0;  // baseline_mults / total_mults
  double memory_ratio = 1.0;         // baseline bytes / configured bytes
  std::size_t element_bytes = 0;     // sizeof one activation scalar

  bool timed = false;
  TimingStats timing;           // configured network
  TimingStats baseline_timing;  // same weights, all masks cleared
  double empirical_speedup = 0.0;  // baseline median / configured median
  int threads = 1;
};

// Exact static accounting from the spec alone (no weights materialized).
// Perforation attachments are honored: grid rates quantize to the realized
// lattice, the other mask types keep exactly round(keep * |grid|) rows.
// storage decides whether masked conv outputs are billed compact (mask rows)
// or dense (full grid); multiplication counts are the same either way.
CostReport account(const NetworkSpec& spec, std::size_t element_bytes,
                   Storage storage = Storage::compact);

// Accounting for a live network with whatever masks are installed.
template <typename Real>
CostReport account(const Network<Real>& net);

// Wall-clock statistics for fn() over `repetitions` timed runs after
// `warmup` untimed ones. Median and IQR are the headline numbers; the mean
// is reported for comparison with averaged-run protocols.
TimingStats time_callable(const std::function<void()>& fn, int repetitions, int warmup);

// account(net) plus forward-pass timings of the configured network and of a
// cleared-mask copy on the same weights and input. repetitions must be >= 3.
template <typename Real>
CostReport time_forward(const Network<Real>& net, const Tensor3<Real>& input, int repetitions,
                        int warmup, int threads = 1);

// CSV with a fixed column order (one row per layer, then a `total` row that
// also carries the network-level ratios and any timing fields):
//   layer,kind,d,group,rows,grid,rate,mults,baseline_mults,activation_bytes,
//   baseline_activation_bytes,theoretical_speedup,memory_ratio,median_s,
//   iqr_s,mean_s,baseline_median_s,baseline_iqr_s,baseline_mean_s,
//   empirical_speedup,threads,timer_ok
std::string cost_report_csv(const CostReport& report);

// Human-readable table of the same numbers.
std::string cost_report_table(const CostReport& report);

extern template CostReport account(const Network<float>& net);
extern template CostReport account(const Network<double>& net);
extern template CostReport time_forward(const Network<float>&, const Tensor3<float>&, int, int,
                                        int);
extern template CostReport time_forward(const Network<double>&, const Tensor3<double>&, int, int,
                                        int);

}  // namespace perfcnn
