#include "perfcnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace perfcnn {

namespace {

// Geometry of one layer for the rows walk; mask_rows applies when masked.
// dense_output: the masked conv still evaluates mask_rows positions but
// stores the interpolated grid.
struct WalkLayer {
  LayerKind kind = LayerKind::relu;
  int d = 0, stride = 1, pad = 0, group = 1;
  Shape3 in, out;
  bool masked = false;
  std::size_t mask_rows = 0;
  bool dense_output = false;
};

std::size_t conv_mults(const WalkLayer& l, std::size_t rows) {
  return static_cast<std::size_t>(l.d) * l.d * (static_cast<std::size_t>(l.in.c) / l.group) *
         static_cast<std::size_t>(l.out.c) * rows;
}

// Mirrors the forward path's storage behavior: perforated convs emit their
// mask rows, 1x1 unit-stride unpadded ungrouped convs and relu/lrn keep the
// incoming rows, everything else lands dense.
CostReport walk(const Shape3& input, const std::vector<WalkLayer>& layers,
                std::size_t element_bytes) {
  CostReport report;
  report.element_bytes = element_bytes;
  std::size_t rows = static_cast<std::size_t>(input.x) * input.y;
  std::size_t base_rows = rows;
  const std::size_t input_bytes = rows * static_cast<std::size_t>(input.c) * element_bytes;
  report.total_activation_bytes = input_bytes;
  report.baseline_activation_bytes = input_bytes;

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const WalkLayer& l = layers[i];
    LayerCost c;
    c.index = static_cast<int>(i) + 1;
    c.kind = l.kind;
    c.d = l.d;
    c.group = l.group;
    c.grid_total = static_cast<std::size_t>(l.out.x) * l.out.y;
    std::size_t out_rows = c.grid_total;
    std::size_t base_out_rows = c.grid_total;
    switch (l.kind) {
      case LayerKind::conv: {
        const bool passthrough =
            l.d == 1 && l.stride == 1 && l.pad == 0 && l.group == 1 && !l.masked;
        const std::size_t eval_rows =
            l.masked ? l.mask_rows : passthrough ? rows : c.grid_total;
        out_rows = (l.masked && l.dense_output) ? c.grid_total : eval_rows;
        c.mults = conv_mults(l, eval_rows);
        c.baseline_mults = conv_mults(l, base_out_rows);
        break;
      }
      case LayerKind::relu:
      case LayerKind::lrn:
        out_rows = rows;
        base_out_rows = base_rows;
        break;
      case LayerKind::maxpool:
        break;  // dense output, no multiplications
      case LayerKind::gap:
        out_rows = 1;
        base_out_rows = 1;
        break;
      case LayerKind::fc: {
        out_rows = 1;
        base_out_rows = 1;
        const std::size_t inputs =
            static_cast<std::size_t>(l.in.x) * l.in.y * l.in.c;
        c.mults = inputs * static_cast<std::size_t>(l.out.c);
        c.baseline_mults = c.mults;
        break;
      }
    }
    c.rows = out_rows;
    const std::size_t rate_rows = l.masked ? l.mask_rows : out_rows;
    c.rate = c.grid_total == 0
                 ? 0.0
                 : 1.0 - static_cast<double>(rate_rows) / static_cast<double>(c.grid_total);
    c.activation_bytes = out_rows * static_cast<std::size_t>(l.out.c) * element_bytes;
    c.baseline_activation_bytes =
        base_out_rows * static_cast<std::size_t>(l.out.c) * element_bytes;
    report.total_mults += c.mults;
    report.baseline_mults += c.baseline_mults;
    report.total_activation_bytes += c.activation_bytes;
    report.baseline_activation_bytes += c.baseline_activation_bytes;
    report.layers.push_back(c);
    rows = out_rows;
    base_rows = base_out_rows;
  }

  report.theoretical_speedup =
      report.total_mults == 0 ? 1.0
                              : static_cast<double>(report.baseline_mults) /
                                    static_cast<double>(report.total_mults);
  report.memory_ratio = report.total_activation_bytes == 0
                            ? 1.0
                            : static_cast<double>(report.baseline_activation_bytes) /
                                  static_cast<double>(report.total_activation_bytes);
  return report;
}

std::size_t attachment_rows(const LayerSpec& layer, const Shape3& out) {
  const std::size_t total = static_cast<std::size_t>(out.x) * out.y;
  const std::size_t n = exact_count_for_rate(total, layer.perf.rate.num, layer.perf.rate.den);
  if (layer.perf.type == MaskType::grid) {
    const auto [kx, ky] = grid_lattice_counts(out.x, out.y, n);
    return static_cast<std::size_t>(kx) * ky;
  }
  return n;
}

}  // namespace

CostReport account(const NetworkSpec& spec, std::size_t element_bytes, Storage storage) {
  const std::vector<Shape3> shapes = spec.propagate_shapes();
  std::vector<WalkLayer> layers;
  layers.reserve(spec.layers.size());
  Shape3 cur = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    WalkLayer w;
    w.kind = ls.kind;
    w.in = cur;
    w.out = shapes[i];
    switch (ls.kind) {
      case LayerKind::conv:
        w.d = ls.d;
        w.stride = ls.stride;
        w.pad = ls.pad;
        w.group = ls.group;
        if (ls.perf.enabled) {
          w.masked = true;
          w.mask_rows = attachment_rows(ls, shapes[i]);
          w.dense_output = storage == Storage::dense;
        }
        break;
      case LayerKind::maxpool:
        w.d = ls.d;
        w.stride = ls.stride;
        w.pad = ls.pad;
        break;
      default:
        break;
    }
    layers.push_back(w);
    cur = shapes[i];
  }
  return walk(spec.input, layers, element_bytes);
}

template <typename Real>
CostReport account(const Network<Real>& net) {
  std::vector<WalkLayer> layers;
  for (const LayerDescription& d : net.describe()) {
    WalkLayer w;
    w.kind = d.kind;
    w.d = d.d;
    w.stride = d.stride;
    w.pad = d.pad;
    w.group = d.group;
    w.in = d.in_shape;
    w.out = d.out_shape;
    w.masked = d.perforated;
    w.mask_rows = d.mask_points;
    w.dense_output = d.dense_storage;
    layers.push_back(w);
  }
  return walk(net.spec().input, layers, sizeof(Real));
}

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Smallest observable increment of the steady clock, estimated empirically.
double clock_tick_seconds() {
  using clock = std::chrono::steady_clock;
  double best = 1.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto t0 = clock::now();
    auto t1 = t0;
    do {
      t1 = clock::now();
    } while (t1 == t0);
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

TimingStats time_callable(const std::function<void()>& fn, int repetitions, int warmup) {
  if (repetitions < 3) throw std::invalid_argument("timing needs at least 3 repetitions");
  if (warmup < 0) throw std::invalid_argument("warmup must be nonnegative");
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> times(static_cast<std::size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = clock::now();
    fn();
    const auto t1 = clock::now();
    times[static_cast<std::size_t>(i)] = std::chrono::duration<double>(t1 - t0).count();
  }
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  TimingStats stats;
  stats.repetitions = repetitions;
  stats.median_s = quantile(sorted, 0.5);
  stats.iqr_s = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double sum = 0.0;
  for (double t : times) sum += t;
  stats.mean_s = sum / static_cast<double>(repetitions);
  stats.resolution_ok = stats.median_s >= 100.0 * clock_tick_seconds();
  return stats;
}

template <typename Real>
CostReport time_forward(const Network<Real>& net, const Tensor3<Real>& input, int repetitions,
                        int warmup, int threads) {
  CostReport report = account(net);
  Network<Real> baseline = net;
  baseline.clear_all_perforation();

  // The checksum keeps the optimizer from discarding the forward passes.
  volatile double sink = 0.0;
  report.timing = time_callable(
      [&] {
        const Activation<Real> out = net.forward(input);
        sink = sink + static_cast<double>(out.values.empty() ? Real(0) : out.values[0]);
      },
      repetitions, warmup);
  report.baseline_timing = time_callable(
      [&] {
        const Activation<Real> out = baseline.forward(input);
        sink = sink + static_cast<double>(out.values.empty() ? Real(0) : out.values[0]);
      },
      repetitions, warmup);
  report.timed = true;
  report.threads = threads;
  report.empirical_speedup =
      report.timing.median_s > 0.0 ? report.baseline_timing.median_s / report.timing.median_s
                                   : 0.0;
  return report;
}

namespace {

std::string fmt_double(double v, int digits = 12) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string cost_report_csv(const CostReport& report) {
  std::ostringstream os;
  os << "layer,kind,d,group,rows,grid,rate,mults,baseline_mults,activation_bytes,"
        "baseline_activation_bytes,theoretical_speedup,memory_ratio,median_s,iqr_s,mean_s,"
        "baseline_median_s,baseline_iqr_s,baseline_mean_s,empirical_speedup,threads,timer_ok\n";
  for (const LayerCost& c : report.layers) {
    os << c.index << ',' << layer_kind_name(c.kind) << ',' << c.d << ',' << c.group << ','
       << c.rows << ',' << c.grid_total << ',' << fmt_double(c.rate, 6) << ',' << c.mults << ','
       << c.baseline_mults << ',' << c.activation_bytes << ',' << c.baseline_activation_bytes
       << ",,,,,,,,,,,\n";
  }
  os << "total,,,,,,," << report.total_mults << ',' << report.baseline_mults << ','
     << report.total_activation_bytes << ',' << report.baseline_activation_bytes << ','
     << fmt_double(report.theoretical_speedup) << ',' << fmt_double(report.memory_ratio) << ',';
  if (report.timed) {
    os << fmt_double(report.timing.median_s) << ',' << fmt_double(report.timing.iqr_s) << ','
       << fmt_double(report.timing.mean_s) << ',' << fmt_double(report.baseline_timing.median_s)
       << ',' << fmt_double(report.baseline_timing.iqr_s) << ','
       << fmt_double(report.baseline_timing.mean_s) << ','
       << fmt_double(report.empirical_speedup) << ',' << report.threads << ','
       << (report.timing.resolution_ok && report.baseline_timing.resolution_ok ? 1 : 0);
  } else {
    os << ",,,,,,,,";
  }
  os << '\n';
  return os.str();
}

std::string cost_report_table(const CostReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "layer" << std::setw(9) << "kind" << std::right
     << std::setw(4) << "d" << std::setw(5) << "grp" << std::setw(9) << "rows" << std::setw(9)
     << "grid" << std::setw(8) << "rate" << std::setw(16) << "mults" << std::setw(14) << "bytes"
     << '\n';
  for (const LayerCost& c : report.layers) {
    std::ostringstream rate;
    rate << std::fixed << std::setprecision(3) << c.rate;
    os << std::left << std::setw(6) << c.index << std::setw(9) << layer_kind_name(c.kind)
       << std::right << std::setw(4) << c.d << std::setw(5) << c.group << std::setw(9) << c.rows
       << std::setw(9) << c.grid_total << std::setw(8) << rate.str() << std::setw(16) << c.mults
       << std::setw(14) << c.activation_bytes << '\n';
  }
  os << "total mults " << report.total_mults << " (baseline " << report.baseline_mults
     << "), activation bytes " << report.total_activation_bytes << " (baseline "
     << report.baseline_activation_bytes << ")\n";
  os << std::fixed << std::setprecision(3) << "theoretical speedup " << report.theoretical_speedup
     << "x, memory ratio " << report.memory_ratio << "x\n";
  if (report.timed) {
    auto ms = [](double s) { return s * 1e3; };
    os << std::setprecision(4) << "timing over " << report.timing.repetitions
       << " reps: median " << ms(report.timing.median_s) << " ms, IQR "
       << ms(report.timing.iqr_s) << " ms, mean " << ms(report.timing.mean_s) << " ms\n"
       << "baseline: median " << ms(report.baseline_timing.median_s) << " ms, IQR "
       << ms(report.baseline_timing.iqr_s) << " ms, mean " << ms(report.baseline_timing.mean_s)
       << " ms\n"
       << "empirical speedup " << report.empirical_speedup << "x (threads " << report.threads
       << ")";
    if (!report.timing.resolution_ok || !report.baseline_timing.resolution_ok) {
      os << " [timer resolution insufficient]";
    }
    os << '\n';
  }
  return os.str();
}

template CostReport account(const Network<float>& net);
template CostReport account(const Network<double>& net);
template CostReport time_forward(const Network<float>&, const Tensor3<float>&, int, int, int);
template CostReport time_forward(const Network<double>&, const Tensor3<double>&, int, int, int);

}  // namespace perfcnn
