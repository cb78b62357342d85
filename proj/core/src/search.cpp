#include "perfcnn/search.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "perfcnn/bench.hpp"

namespace perfcnn {

std::string cost_model_name(CostModel model) {
  return model == CostModel::mults ? "mults" : "time";
}

CostModel cost_model_from_name(const std::string& name) {
  if (name == "mults") return CostModel::mults;
  if (name == "time") return CostModel::time;
  throw std::invalid_argument("unknown cost model '" + name + "' (expected mults or time)");
}

std::vector<Rational> default_rate_ladder() {
  std::vector<Rational> ladder;
  ladder.reserve(20);
  ladder.emplace_back(1, 3);
  for (long long k = 1; k <= 19; ++k) ladder.emplace_back(k, k + 1);
  return ladder;
}

// --- config files ---------------------------------------------------------------

namespace {

[[noreturn]] void fail_line(int lineno, const std::string& what) {
  throw std::invalid_argument("mask config line " + std::to_string(lineno) + ": " + what);
}

void check_rate_open_interval(const Rational& r, int lineno) {
  if (r.num <= 0 || r.num >= r.den) {
    fail_line(lineno, "rate " + r.str() + " must lie strictly between 0 and 1");
  }
}

}  // namespace

std::vector<MaskChoice> parse_mask_config(const std::string& text) {
  std::vector<MaskChoice> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string token;
    MaskChoice c;
    bool has_layer = false, has_mask = false, has_rate = false;
    bool any = false;
    while (tokens >> token) {
      any = true;
      const auto eq = token.find('=');
      if (eq == std::string::npos) fail_line(lineno, "expected key=value, got '" + token + "'");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      try {
        if (key == "layer") {
          c.layer = std::stoi(value);
          has_layer = true;
        } else if (key == "mask") {
          c.type = mask_type_from_name(value);
          has_mask = true;
        } else if (key == "r") {
          c.rate = parse_rate(value);
          has_rate = true;
        } else if (key == "seed") {
          c.seed = std::stoull(value);
        } else {
          fail_line(lineno, "unknown key '" + key + "'");
        }
      } catch (const std::invalid_argument& e) {
        fail_line(lineno, std::string(e.what()));
      } catch (const std::out_of_range&) {
        fail_line(lineno, "value out of range in '" + token + "'");
      }
    }
    if (!any) continue;
    if (!has_layer) fail_line(lineno, "missing layer=");
    if (!has_mask) fail_line(lineno, "missing mask=");
    if (!has_rate) fail_line(lineno, "missing r=");
    if (c.layer < 1) fail_line(lineno, "layer index must be positive");
    check_rate_open_interval(c.rate, lineno);
    for (const MaskChoice& prev : out) {
      if (prev.layer == c.layer) fail_line(lineno, "duplicate entry for layer " + std::to_string(c.layer));
    }
    out.push_back(c);
  }
  return out;
}

std::string serialize_mask_config(const std::vector<MaskChoice>& choices) {
  std::vector<MaskChoice> sorted = choices;
  std::sort(sorted.begin(), sorted.end(),
            [](const MaskChoice& a, const MaskChoice& b) { return a.layer < b.layer; });
  std::ostringstream os;
  for (const MaskChoice& c : sorted) {
    os << "layer=" << c.layer << " mask=" << mask_type_name(c.type) << " r=" << c.rate.str()
       << " seed=" << c.seed << '\n';
  }
  return os.str();
}

template <typename Real>
void apply_mask_config(Network<Real>& net, const std::vector<MaskChoice>& choices,
                       const Dataset<Real>* impact_data, std::size_t impact_samples) {
  std::vector<MaskChoice> sorted = choices;
  std::sort(sorted.begin(), sorted.end(),
            [](const MaskChoice& a, const MaskChoice& b) { return a.layer < b.layer; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].layer == sorted[i - 1].layer) {
      throw std::invalid_argument("mask config: duplicate entry for layer " +
                                  std::to_string(sorted[i].layer));
    }
  }
  net.clear_all_perforation();
  for (const MaskChoice& c : sorted) {
    net.set_perforation(c.layer, c.type, c.rate, c.seed, impact_data, impact_samples);
  }
}

std::vector<MaskChoice> PerforationConfig::choices() const {
  std::vector<MaskChoice> out;
  for (const LayerRate& lr : layers) {
    if (lr.rung < 0) continue;
    if (lr.rung >= static_cast<int>(ladder.size())) {
      throw std::invalid_argument("perforation config: rung " + std::to_string(lr.rung) +
                                  " outside the ladder for layer " + std::to_string(lr.layer));
    }
    out.push_back({lr.layer, lr.type, ladder[static_cast<std::size_t>(lr.rung)], lr.seed});
  }
  return out;
}

// --- evaluation -----------------------------------------------------------------

namespace {

void check_ladder(const std::vector<Rational>& ladder) {
  if (ladder.empty()) throw std::invalid_argument("rate ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i].num <= 0 || ladder[i].num >= ladder[i].den) {
      throw std::invalid_argument("rate ladder entry " + ladder[i].str() +
                                  " must lie strictly between 0 and 1");
    }
    if (i > 0 && !(ladder[i - 1].value() < ladder[i].value())) {
      throw std::invalid_argument("rate ladder must be strictly increasing");
    }
  }
}

// Exact forward multiplications of `spec` with the given rates attached;
// grid quantization matches what mask generation will realize.
template <typename Real>
double theoretical_mults(const NetworkSpec& base, const std::vector<Rational>& ladder,
                         const std::vector<LayerRate>& layers) {
  NetworkSpec spec = base;
  for (LayerSpec& ls : spec.layers) ls.perf = PerfAttach{};  // search explores from scratch
  for (const LayerRate& lr : layers) {
    if (lr.rung < 0) continue;
    LayerSpec& ls = spec.layers.at(static_cast<std::size_t>(lr.layer - 1));
    ls.perf.enabled = true;
    ls.perf.type = lr.type;
    ls.perf.rate = ladder.at(static_cast<std::size_t>(lr.rung));
    ls.perf.seed = lr.seed;
  }
  return static_cast<double>(account(spec, sizeof(Real)).total_mults);
}

template <typename Real>
void measure(const Network<Real>& net, const Dataset<Real>& subset, CostModel model, int threads,
             double* t, double* e) {
  *e = net.evaluate(subset, 0, threads).mean_loss;
  if (model == CostModel::mults) {
    *t = static_cast<double>(account(net).total_mults);
    return;
  }
  volatile double sink = 0.0;
  const TimingStats stats = time_callable(
      [&] {
        double acc = 0.0;
        for (const Tensor3<Real>& sample : subset.samples) {
          const Activation<Real> out = net.forward(sample);
          acc += static_cast<double>(out.values.empty() ? Real(0) : out.values[0]);
        }
        sink = sink + acc;
      },
      3, 1);
  *t = stats.median_s;
}

}  // namespace

template <typename Real>
CandidateEvaluation evaluate_config(const Network<Real>& net, const PerforationConfig& config,
                                    const Dataset<Real>& eval_subset, CostModel model,
                                    const Dataset<Real>* impact_data,
                                    std::size_t impact_samples) {
  if (eval_subset.size() == 0) {
    throw std::invalid_argument("evaluate_config: empty evaluation subset");
  }
  check_ladder(config.ladder);
  const std::vector<MaskChoice> choices = config.choices();
  const Dataset<Real>* idata = impact_data ? impact_data : &eval_subset;

  Network<Real> work = net;
  work.clear_all_perforation();
  CandidateEvaluation ev;
  measure(work, eval_subset, model, 1, &ev.t0, &ev.e0);
  if (choices.empty()) {
    ev.t = ev.t0;
    ev.e = ev.e0;
    return ev;
  }
  apply_mask_config(work, choices, idata, impact_samples);
  measure(work, eval_subset, model, 1, &ev.t, &ev.e);
  return ev;
}

// --- greedy ---------------------------------------------------------------------

std::string trace_csv(const std::vector<SearchTraceRow>& rows) {
  std::ostringstream os;
  os << "step,layer,rate,t,e,cost\n";
  os << std::setprecision(12);
  for (const SearchTraceRow& row : rows) {
    os << row.step << ',' << row.layer << ',' << row.rate.str() << ',' << row.t << ',' << row.e
       << ',' << row.cost << '\n';
  }
  return os.str();
}

template <typename Real>
GreedyResult greedy_configure(const Network<Real>& net, const Dataset<Real>& eval_subset,
                              const GreedyOptions& options, const Dataset<Real>* impact_data) {
  if (!(options.target_speedup > 1.0)) {
    throw std::invalid_argument("greedy search: target speedup must exceed 1");
  }
  if (eval_subset.size() == 0) {
    throw std::invalid_argument("greedy search: empty evaluation subset");
  }
  const std::vector<Rational> ladder =
      options.ladder.empty() ? default_rate_ladder() : options.ladder;
  check_ladder(ladder);
  const Dataset<Real>* idata = impact_data ? impact_data : &eval_subset;

  GreedyResult res;
  res.config.ladder = ladder;
  for (int layer : net.perforable_layers()) {
    res.config.layers.push_back(
        {layer, options.type, -1, derive_seed(options.seed, "mask.layer" + std::to_string(layer))});
  }
  if (res.config.layers.empty()) {
    throw std::runtime_error("greedy search: network has no perforable conv layers");
  }

  Network<Real> base = net;
  base.clear_all_perforation();
  double t0 = 0.0, e0 = 0.0;
  measure(base, eval_subset, options.cost_model, options.eval_threads, &t0, &e0);
  double t_cur = t0, e_cur = e0;
  double tm_cur = theoretical_mults<Real>(net.spec(), ladder, res.config.layers);

  for (int step = 1;; ++step) {
    if (t0 / t_cur >= options.target_speedup) {
      res.reached_target = true;
      break;
    }

    // Next rung per layer that strictly lowers the exact multiplication
    // count; mask quantization can make consecutive rungs cost-equal.
    struct Candidate {
      std::size_t slot;
      int rung;
      double tm;
    };
    std::vector<Candidate> candidates;
    for (std::size_t slot = 0; slot < res.config.layers.size(); ++slot) {
      std::vector<LayerRate> tentative = res.config.layers;
      for (int rung = res.config.layers[slot].rung + 1;
           rung < static_cast<int>(ladder.size()); ++rung) {
        tentative[slot].rung = rung;
        const double tm = theoretical_mults<Real>(net.spec(), ladder, tentative);
        if (tm < tm_cur) {
          candidates.push_back({slot, rung, tm});
          break;
        }
      }
    }

    bool found = false;
    Candidate chosen{};
    CandidateEvaluation chosen_eval;
    double chosen_cost = 0.0;
    for (const Candidate& cand : candidates) {
      std::vector<LayerRate> tentative = res.config.layers;
      tentative[cand.slot].rung = cand.rung;
      PerforationConfig cfg;
      cfg.ladder = ladder;
      cfg.layers = tentative;
      Network<Real> scratch = net;
      apply_mask_config(scratch, cfg.choices(), idata, options.impact_samples);
      double t_cand = 0.0, e_cand = 0.0;
      measure(scratch, eval_subset, options.cost_model, options.eval_threads, &t_cand, &e_cand);
      if (!(t_cand < t0) || !(t_cand < t_cur)) continue;  // no div-by-zero, t must fall
      const double cost = (e_cand - e0) / (t0 - t_cand);
      if (!found || cost < chosen_cost) {  // strict: ties go to the lowest layer
        found = true;
        chosen = cand;
        chosen_eval = {t_cand, e_cand, t0, e0};
        chosen_cost = cost;
      }
    }

    if (!found) {
      if (step == 1) {
        throw std::runtime_error(
            "greedy search: no rate increase lowers the cost of this network");
      }
      break;  // ladder exhausted before the target
    }

    res.config.layers[chosen.slot].rung = chosen.rung;
    t_cur = chosen_eval.t;
    e_cur = chosen_eval.e;
    tm_cur = chosen.tm;
    res.trace.push_back({step, res.config.layers[chosen.slot].layer,
                         ladder[static_cast<std::size_t>(chosen.rung)], t_cur, e_cur,
                         chosen_cost});
  }

  res.evaluation = {t_cur, e_cur, t0, e0};
  return res;
}

// --- pareto ---------------------------------------------------------------------

std::vector<std::size_t> pareto_front(const std::vector<CandidateEvaluation>& evals) {
  if (evals.empty()) throw std::invalid_argument("pareto_front: no evaluations");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < evals.size() && !dominated; ++j) {
      if (i == j) continue;
      const double si = evals[i].speedup(), sj = evals[j].speedup();
      dominated = sj >= si && evals[j].e <= evals[i].e && (sj > si || evals[j].e < evals[i].e);
    }
    if (!dominated) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    if (evals[a].speedup() != evals[b].speedup()) return evals[a].speedup() < evals[b].speedup();
    if (evals[a].e != evals[b].e) return evals[a].e < evals[b].e;
    return a < b;
  });
  return kept;
}

// --- exhaustive -----------------------------------------------------------------

template <typename Real>
std::vector<ExhaustivePoint> exhaustive_search(const Network<Real>& net,
                                               const Dataset<Real>& eval_subset,
                                               const GreedyOptions& options,
                                               const Dataset<Real>* impact_data) {
  if (eval_subset.size() == 0) {
    throw std::invalid_argument("exhaustive search: empty evaluation subset");
  }
  const std::vector<Rational> ladder =
      options.ladder.empty() ? default_rate_ladder() : options.ladder;
  check_ladder(ladder);
  const std::vector<int> perfable = net.perforable_layers();
  if (perfable.empty()) {
    throw std::invalid_argument("exhaustive search: network has no perforable conv layers");
  }
  if (perfable.size() > 3) {
    throw std::invalid_argument(
        "exhaustive search enumerates a full rate grid; refusing more than 3 perforable layers");
  }
  const Dataset<Real>* idata = impact_data ? impact_data : &eval_subset;

  PerforationConfig config;
  config.ladder = ladder;
  for (int layer : perfable) {
    config.layers.push_back(
        {layer, options.type, -1, derive_seed(options.seed, "mask.layer" + std::to_string(layer))});
  }

  Network<Real> base = net;
  base.clear_all_perforation();
  double t0 = 0.0, e0 = 0.0;
  measure(base, eval_subset, options.cost_model, options.eval_threads, &t0, &e0);

  std::vector<ExhaustivePoint> points;
  std::vector<int> rungs(perfable.size(), -1);
  for (;;) {
    for (std::size_t i = 0; i < rungs.size(); ++i) config.layers[i].rung = rungs[i];
    CandidateEvaluation ev;
    ev.t0 = t0;
    ev.e0 = e0;
    const std::vector<MaskChoice> choices = config.choices();
    if (choices.empty()) {
      ev.t = t0;
      ev.e = e0;
    } else {
      Network<Real> scratch = net;
      apply_mask_config(scratch, choices, idata, options.impact_samples);
      measure(scratch, eval_subset, options.cost_model, options.eval_threads, &ev.t, &ev.e);
    }
    points.push_back({config, ev});

    // Odometer: the last layer's rung varies fastest.
    std::size_t pos = rungs.size();
    while (pos > 0) {
      --pos;
      if (rungs[pos] + 1 < static_cast<int>(ladder.size())) {
        ++rungs[pos];
        std::fill(rungs.begin() + static_cast<std::ptrdiff_t>(pos) + 1, rungs.end(), -1);
        break;
      }
      if (pos == 0) return points;
    }
  }
}

template void apply_mask_config(Network<float>&, const std::vector<MaskChoice>&,
                                const Dataset<float>*, std::size_t);
template void apply_mask_config(Network<double>&, const std::vector<MaskChoice>&,
                                const Dataset<double>*, std::size_t);
template CandidateEvaluation evaluate_config(const Network<float>&, const PerforationConfig&,
                                             const Dataset<float>&, CostModel,
                                             const Dataset<float>*, std::size_t);
template CandidateEvaluation evaluate_config(const Network<double>&, const PerforationConfig&,
                                             const Dataset<double>&, CostModel,
                                             const Dataset<double>*, std::size_t);
template GreedyResult greedy_configure(const Network<float>&, const Dataset<float>&,
                                       const GreedyOptions&, const Dataset<float>*);
template GreedyResult greedy_configure(const Network<double>&, const Dataset<double>&,
                                       const GreedyOptions&, const Dataset<double>*);
template std::vector<ExhaustivePoint> exhaustive_search(const Network<float>&,
                                                        const Dataset<float>&,
                                                        const GreedyOptions&,
                                                        const Dataset<float>*);
template std::vector<ExhaustivePoint> exhaustive_search(const Network<double>&,
                                                        const Dataset<double>&,
                                                        const GreedyOptions&,
                                                        const Dataset<double>*);

}  // namespace perfcnn
