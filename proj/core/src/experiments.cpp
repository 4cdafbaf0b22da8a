#include "reachlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reachlab/errors.hpp"
#include "reachlab/oracle.hpp"
#include "reachlab/parallel.hpp"
#include "reachlab/summation.hpp"

namespace reachlab {

namespace {

constexpr double kCalibrationTolerance = 1e-6;
constexpr double kHazardFloor = 1e-12;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t kind_index(EstimatorKind kind) { return static_cast<std::size_t>(kind); }

std::size_t uniform_index(Philox4x64& rng, std::size_t bound) {
  const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(bound));
  return std::min(i, bound - 1);
}

// Everything about a chain except how strongly its hazardous states leak into the outcome.
struct Skeleton {
  std::size_t n = 0;             // including the outcome state
  std::vector<double> moves;     // (n-1) x (n-1), rows sum to 1
  std::vector<double> weight;    // per non-outcome state; 0 when not hazardous
  std::size_t steps = 0;

  double max_scale() const {
    double w = std::numeric_limits<double>::infinity();
    for (double x : weight)
      if (x > 0.0) w = std::min(w, x);
    return 1.0 / w;
  }

  MarkovModel build(double scale) const {
    const std::size_t m = n - 1;
    std::vector<double> t(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double h = std::min(scale * weight[i], 1.0);
      for (std::size_t j = 0; j < m; ++j) t[i * n + j] = (1.0 - h) * moves[i * m + j];
      t[i * n + m] = h;
    }
    t[m * n + m] = 1.0;
    return MarkovModel(n, std::move(t), 0, m, steps);
  }
};

Skeleton make_skeleton(const ChainSpec& spec, const RandomSource& source) {
  Skeleton sk;
  sk.n = spec.n_states;
  sk.steps = spec.horizon_steps;
  const std::size_t m = spec.n_states - 1;
  const std::size_t k = spec.hazardous_states();
  sk.moves.assign(m * m, 0.0);
  sk.weight.assign(m, 0.0);

  if (spec.layout == ChainLayout::uniform) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        sk.moves[i * m + j] = m == 1 ? 1.0 : (i == j ? 0.0 : 1.0 / static_cast<double>(m - 1));
    for (std::size_t i = 0; i < k; ++i) sk.weight[i] = 1.0;
    return sk;
  }

  auto rng = source.stream(0);
  for (std::size_t i = 0; i < m; ++i) {
    CompensatedSum total;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = -std::log1p(-rng.uniform());
      sk.moves[i * m + j] = e;
      total.add(e);
    }
    const double z = total.value();
    for (std::size_t j = 0; j < m; ++j) {
      if (z > 0.0)
        sk.moves[i * m + j] /= z;
      else
        sk.moves[i * m + j] = i == j ? 1.0 : 0.0;
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + uniform_index(rng, m - i)]);
  for (std::size_t i = 0; i < k; ++i) sk.weight[order[i]] = 0.2 + 0.8 * rng.uniform();
  return sk;
}

std::vector<double> block_means(std::span<const double> subs, std::size_t block) {
  std::vector<double> out(subs.size() / block);
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = compensated_mean(subs.subspan(r * block, block));
  return out;
}

MetricRow row(std::string task, std::string kind, std::size_t n, std::string statistic,
              double value, std::uint64_t seed) {
  MetricRow r;
  r.task = std::move(task);
  r.kind = std::move(kind);
  r.n = n;
  r.statistic = std::move(statistic);
  r.value = value;
  r.seed = seed;
  return r;
}

MetricRow row_ci(std::string task, std::string kind, std::size_t n, std::string statistic,
                 double value, Interval ci, std::uint64_t seed) {
  auto r = row(std::move(task), std::move(kind), n, std::move(statistic), value, seed);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

double task_value(const std::string& task) {
  const auto eq = task.rfind('=');
  if (eq == std::string::npos) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(task.data() + eq + 1, task.data() + task.size(), v);
  return ec == std::errc() ? v : std::numeric_limits<double>::quiet_NaN();
}

std::array<std::vector<double>, 3> pooled_subs(const MarkovModel& chain, std::size_t count,
                                               const RandomSource& source, unsigned workers) {
  const EstimateOptions opts{ClipPolicy::none, workers};
  auto paired = paired_estimates(chain, count, source, opts);
  auto reach = estimate(chain, EstimatorKind::reach, count, source, opts);
  return {std::move(paired.mc.sub_values), std::move(paired.scope.sub_values),
          std::move(reach.sub_values)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Chains

std::string_view to_string(ChainLayout layout) {
  return layout == ChainLayout::uniform ? "uniform" : "random";
}

ChainLayout parse_chain_layout(std::string_view text) {
  const auto t = lower(text);
  if (t == "random") return ChainLayout::random;
  if (t == "uniform") return ChainLayout::uniform;
  throw InvalidArgument("unknown chain layout '" + std::string(text) + "'");
}

std::size_t ChainSpec::hazardous_states() const {
  if (n_states < 2) return 0;
  return static_cast<std::size_t>(std::lround(spontaneity * static_cast<double>(n_states - 1)));
}

void ChainSpec::check() const {
  if (n_states < 2) throw InvalidArgument("a chain needs at least 2 states");
  if (!(spontaneity > 0.0 && spontaneity <= 1.0))
    throw InvalidArgument("spontaneity must lie in (0, 1]");
  if (hazardous_states() == 0)
    throw InvalidArgument("spontaneity " + format_double(spontaneity) + " with " +
                          std::to_string(n_states) + " states leaves no hazardous state");
  if (horizon_steps == 0) throw InvalidArgument("horizon_steps must be >= 1");
  if (target_probability && !(*target_probability >= 0.0 && *target_probability <= 1.0))
    throw InvalidArgument("target probability must lie in [0, 1]");
  if (!(hazard_scale >= 0.0 && std::isfinite(hazard_scale)))
    throw InvalidArgument("hazard_scale must be finite and non-negative");
}

MarkovModel random_chain(const ChainSpec& spec) { return random_chain(spec, RandomSource(spec.seed)); }

MarkovModel random_chain(const ChainSpec& spec, const RandomSource& source) {
  spec.check();
  const Skeleton sk = make_skeleton(spec, source);
  if (!spec.target_probability) return sk.build(spec.hazard_scale);

  const double target = *spec.target_probability;
  double lo = 0.0, hi = sk.max_scale();
  const double p_hi = exact_outcome_probability(sk.build(hi));
  if (target > p_hi + kCalibrationTolerance) throw CalibrationFailure(target, 0.0, p_hi);
  if (target >= p_hi) return sk.build(hi);
  if (target <= 0.0) return sk.build(0.0);

  double best_scale = hi, best_err = p_hi - target;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = exact_outcome_probability(sk.build(mid));
    if (std::abs(p - target) < best_err) {
      best_err = std::abs(p - target);
      best_scale = mid;
    }
    if (best_err <= 1e-13) break;
    (p < target ? lo : hi) = mid;
  }
  if (best_err > kCalibrationTolerance) throw CalibrationFailure(target, 0.0, p_hi);
  return sk.build(best_scale);
}

double spontaneity(const MarkovModel& model) {
  const std::size_t o = model.outcome_state();
  std::size_t others = 0, hazardous = 0;
  for (std::size_t s = 0; s < model.n_states(); ++s) {
    if (s == o) continue;
    ++others;
    hazardous += model.at(s, o) > kHazardFloor;
  }
  return others == 0 ? 0.0 : static_cast<double>(hazardous) / static_cast<double>(others);
}

// ---------------------------------------------------------------------------
// Sweeps

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::probability: return "probability";
    case SweepAxis::spontaneity: return "spontaneity";
    case SweepAxis::sample_count: return "sample_count";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view text) {
  const auto t = lower(text);
  if (t == "probability") return SweepAxis::probability;
  if (t == "spontaneity") return SweepAxis::spontaneity;
  if (t == "sample_count" || t == "samples" || t == "n") return SweepAxis::sample_count;
  throw InvalidArgument("unknown sweep axis '" + std::string(text) + "'");
}

SweepConfig SweepConfig::defaults(SweepAxis axis) {
  SweepConfig c;
  c.axis = axis;
  c.base.n_states = 11;
  c.base.horizon_steps = 20;
  c.base.spontaneity = 1.0;
  c.base.layout = ChainLayout::random;
  if (axis == SweepAxis::spontaneity) {
    c.base.layout = ChainLayout::uniform;
    c.base.target_probability = 0.5;
  } else if (axis == SweepAxis::sample_count) {
    c.base.target_probability = 0.5;
  }
  return c;
}

std::vector<double> SweepConfig::resolved_grid() const {
  if (!grid.empty()) return grid;
  std::vector<double> g;
  switch (axis) {
    case SweepAxis::probability:
      for (int i = 1; i <= 19; ++i) g.push_back(i * 0.05);
      break;
    case SweepAxis::spontaneity:
      for (int i = 1; i <= 10; ++i) g.push_back(i * 0.1);
      break;
    case SweepAxis::sample_count:
      for (int n = 1; n <= 128; n *= 2) g.push_back(n);
      break;
  }
  return g;
}

SweepResult variance_sweep(const SweepConfig& config, const RandomSource& source) {
  if (config.replications < 2) throw InvalidArgument("a sweep needs at least 2 replications");
  if (config.samples_per_estimate == 0) throw InvalidArgument("samples_per_estimate must be >= 1");
  const auto grid = config.resolved_grid();
  const auto axis_name = std::string(to_string(config.axis));
  const auto axis_source = source.child(axis_name);
  const double z = normal_two_sided_z(0.95);
  const std::uint64_t seed = source.seed();

  SweepResult out;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const double x = grid[idx];
    ChainSpec spec = config.base;
    std::size_t n = config.samples_per_estimate;
    const std::string task = "variance_sweep/" + axis_name + "=" + format_double(x);
    MarkovModel chain;
    try {
      switch (config.axis) {
        case SweepAxis::probability: spec.target_probability = x; break;
        case SweepAxis::spontaneity: spec.spontaneity = x; break;
        case SweepAxis::sample_count:
          if (!(x >= 1.0 && x == std::floor(x)))
            throw InvalidArgument("sample counts must be positive integers");
          n = static_cast<std::size_t>(x);
          break;
      }
      chain = random_chain(spec);
    } catch (const Error& e) {
      out.table.add(row(task, "-", n, "failed", std::numeric_limits<double>::quiet_NaN(), seed));
      out.failures.push_back(task + ": " + e.what());
      continue;
    }

    const auto exact = exact_moments(chain);
    out.table.add(row(task, "-", n, "true_probability", exact.probability, seed));
    out.table.add(row(task, "-", n, "spontaneity", spontaneity(chain), seed));

    const std::size_t R = config.replications;
    const auto subs = pooled_subs(chain, R * n, axis_source.child(idx), config.workers);
    for (auto kind : kAllEstimators) {
      const auto est = block_means(subs[kind_index(kind)], n);
      const auto name = std::string(to_string(kind));
      const double mean = compensated_mean(est);
      const double var = sample_variance(est);
      const double mean_half = z * std::sqrt(var / static_cast<double>(R));
      const double var_half = z * variance_standard_error(est);
      out.table.add(row_ci(task, name, n, "mean", mean, {mean - mean_half, mean + mean_half}, seed));
      out.table.add(row_ci(task, name, n, "variance", var, {var - var_half, var + var_half}, seed));
      const double exact_var = exact.variance(kind) / static_cast<double>(n);
      out.table.add(row(task, name, n, "exact_variance", exact_var, seed));
      if (config.axis == SweepAxis::sample_count) {
        const double nn = static_cast<double>(n);
        out.table.add(row_ci(task, name, n, "variance_x_n", var * nn,
                             {(var - var_half) * nn, (var + var_half) * nn}, seed));
      }
    }
  }
  return out;
}

LinePlot sweep_plot(const ExperimentTable& table, SweepAxis axis) {
  LinePlot plot;
  const bool by_n = axis == SweepAxis::sample_count;
  plot.title = "Estimator variance by " + std::string(to_string(axis));
  plot.x_label = std::string(to_string(axis));
  plot.y_label = by_n ? "variance x n" : "variance";
  plot.log_x = by_n;
  const std::string stat = by_n ? "variance_x_n" : "variance";
  for (auto kind : kAllEstimators) {
    Series empirical{std::string(to_string(kind)), {}, {}, true};
    Series exact{std::string(to_string(kind)) + " exact", {}, {}, false};
    for (const auto& r : table.select(stat, "variance_sweep/", to_string(kind))) {
      empirical.x.push_back(task_value(r.task));
      empirical.y.push_back(r.value);
    }
    for (const auto& r : table.select("exact_variance", "variance_sweep/", to_string(kind))) {
      exact.x.push_back(task_value(r.task));
      exact.y.push_back(by_n ? r.value * static_cast<double>(r.n) : r.value);
    }
    plot.series.push_back(std::move(empirical));
    plot.series.push_back(std::move(exact));
  }
  return plot;
}

// ---------------------------------------------------------------------------
// Distribution experiment

DistributionResult estimate_distribution_experiment(const DistributionConfig& config,
                                                    const RandomSource& source) {
  if (config.n_estimates == 0 || config.samples_per_estimate == 0 || config.bins == 0)
    throw InvalidArgument("n_estimates, samples_per_estimate and bins must be >= 1");
  const auto chain = random_chain(config.spec);
  DistributionResult out;
  out.seed = source.seed();
  out.true_probability = exact_outcome_probability(chain);
  const std::size_t k = config.samples_per_estimate;
  const auto subs = pooled_subs(chain, config.n_estimates * k, source, config.workers);

  double upper = 1.0;
  for (auto kind : kAllEstimators) {
    out.estimates[kind_index(kind)] = block_means(subs[kind_index(kind)], k);
    for (double v : out.estimates[kind_index(kind)]) upper = std::max(upper, v);
  }
  const double width = upper / static_cast<double>(config.bins);
  for (auto kind : kAllEstimators) {
    auto& hist = out.histograms[kind_index(kind)];
    hist.resize(config.bins);
    for (std::size_t b = 0; b < config.bins; ++b) {
      hist[b].low = width * static_cast<double>(b);
      hist[b].high = b + 1 == config.bins ? upper : width * static_cast<double>(b + 1);
    }
    for (double v : out.estimates[kind_index(kind)]) {
      auto b = static_cast<std::size_t>(v / width);
      ++hist[std::min(b, config.bins - 1)].count;
    }
  }
  return out;
}

std::string DistributionResult::histogram_csv() const {
  std::ostringstream os;
  os << "kind,bin_low,bin_high,count,seed\n";
  for (auto kind : kAllEstimators)
    for (const auto& b : histograms[kind_index(kind)])
      os << to_string(kind) << ',' << format_double(b.low) << ',' << format_double(b.high) << ','
         << b.count << ',' << seed << '\n';
  return os.str();
}

ExperimentTable DistributionResult::summary() const {
  ExperimentTable t;
  const std::string task = "estimate_distribution";
  t.add(row(task, "-", 0, "true_probability", true_probability, seed));
  for (auto kind : kAllEstimators) {
    const auto& est = of(kind);
    const auto name = std::string(to_string(kind));
    const auto above = std::count_if(est.begin(), est.end(), [](double v) { return v > 1.0; });
    t.add(row(task, name, est.size(), "mean", compensated_mean(est), seed));
    t.add(row(task, name, est.size(), "variance", sample_variance(est), seed));
    t.add(row(task, name, est.size(), "fraction_above_one",
              static_cast<double>(above) / static_cast<double>(est.size()), seed));
  }
  return t;
}

LinePlot DistributionResult::plot() const {
  LinePlot plot;
  plot.title = "Distribution of estimates (true P = " + format_double(true_probability) + ")";
  plot.x_label = "estimate";
  plot.y_label = "count";
  for (auto kind : kAllEstimators) {
    Series s{std::string(to_string(kind)), {}, {}, false};
    for (const auto& b : histograms[kind_index(kind)]) {
      s.x.push_back(0.5 * (b.low + b.high));
      s.y.push_back(static_cast<double>(b.count));
    }
    plot.series.push_back(std::move(s));
  }
  Series truth{"true P", {true_probability, true_probability}, {0.0, 0.0}, false};
  double peak = 0.0;
  for (const auto& h : histograms)
    for (const auto& b : h) peak = std::max(peak, static_cast<double>(b.count));
  truth.y[1] = peak;
  plot.series.push_back(std::move(truth));
  return plot;
}

// ---------------------------------------------------------------------------
// AUROC table and equivalence bootstrap

void AucTable::set(EstimatorKind kind, std::size_t n, std::vector<double> replicates) {
  cells_[{kind, n}] = std::move(replicates);
}

bool AucTable::has(EstimatorKind kind, std::size_t n) const {
  const auto it = cells_.find({kind, n});
  return it != cells_.end() && !it->second.empty();
}

const std::vector<double>& AucTable::at(EstimatorKind kind, std::size_t n) const {
  const auto it = cells_.find({kind, n});
  if (it == cells_.end() || it->second.empty())
    throw InvalidArgument("no AUROC replicates for " + std::string(to_string(kind)) + " at n=" +
                          std::to_string(n));
  return it->second;
}

std::size_t AucTable::max_n(EstimatorKind kind) const {
  std::size_t best = 0;
  for (const auto& [key, v] : cells_)
    if (key.first == kind && !v.empty()) best = std::max(best, key.second);
  return best;
}

namespace {

double resampled_mean(const std::vector<double>& values, Philox4x64& rng) {
  CompensatedSum s;
  for (std::size_t i = 0; i < values.size(); ++i) s.add(values[uniform_index(rng, values.size())]);
  return s.value() / static_cast<double>(values.size());
}

}  // namespace

std::vector<EquivalenceResult> equivalence_curve(const AucTable& table,
                                                 EstimatorKind reference_kind,
                                                 std::span<const std::size_t> reference_ns,
                                                 EstimatorKind alternative_kind,
                                                 std::size_t bootstrap_rounds,
                                                 const RandomSource& source) {
  if (bootstrap_rounds == 0) throw InvalidArgument("equivalence needs at least one round");
  const std::size_t alt_max = table.max_n(alternative_kind);
  if (alt_max == 0)
    throw InvalidArgument("no AUROC replicates for " + std::string(to_string(alternative_kind)));
  for (std::size_t m = 1; m <= alt_max; ++m) table.at(alternative_kind, m);
  for (std::size_t n : reference_ns) table.at(reference_kind, n);

  std::vector<EquivalenceResult> out(reference_ns.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r].reference = reference_kind;
    out[r].alternative = alternative_kind;
    out[r].reference_n = reference_ns[r];
    out[r].rounds = bootstrap_rounds;
    out[r].m_per_round.reserve(bootstrap_rounds);
  }

  std::vector<double> alt_means(alt_max + 1);
  for (std::size_t b = 0; b < bootstrap_rounds; ++b) {
    auto rng = source.stream(b);
    for (std::size_t m = 1; m <= alt_max; ++m)
      alt_means[m] = resampled_mean(table.at(alternative_kind, m), rng);
    for (std::size_t r = 0; r < out.size(); ++r) {
      const double ref = resampled_mean(table.at(reference_kind, reference_ns[r]), rng);
      std::optional<std::size_t> found;
      for (std::size_t m = 1; m <= alt_max; ++m) {
        if (alt_means[m] > ref) {
          found = m;
          break;
        }
      }
      out[r].m_per_round.push_back(found);
      out[r].not_reached += !found;
    }
  }

  const std::string alt_name(to_string(alternative_kind));
  for (auto& res : out) {
    std::vector<double> ratios, ms;
    for (const auto& m : res.m_per_round) {
      if (!m) continue;
      ms.push_back(static_cast<double>(*m));
      ratios.push_back(static_cast<double>(res.reference_n) / static_cast<double>(*m));
    }
    const std::string task = "equivalence/" + std::string(to_string(reference_kind)) + "@" +
                             std::to_string(res.reference_n);
    res.ratio = row(task, alt_name, res.reference_n, "equivalence_ratio",
                    std::numeric_limits<double>::quiet_NaN(), source.seed());
    res.m = row(task, alt_name, res.reference_n, "equivalence_m",
                std::numeric_limits<double>::quiet_NaN(), source.seed());
    if (ratios.empty()) continue;
    const auto ci_ratio = percentile_interval(ratios);
    const auto ci_m = percentile_interval(ms);
    res.ratio.value = quantile(ratios, 0.5);
    res.ratio.ci_low = ci_ratio.low;
    res.ratio.ci_high = ci_ratio.high;
    res.m.value = quantile(ms, 0.5);
    res.m.ci_low = ci_m.low;
    res.m.ci_high = ci_m.high;
  }
  return out;
}

EquivalenceResult equivalence_ratio(const AucTable& table, EstimatorKind reference_kind,
                                    std::size_t reference_n, EstimatorKind alternative_kind,
                                    std::size_t bootstrap_rounds, const RandomSource& source) {
  const std::size_t ns[] = {reference_n};
  return equivalence_curve(table, reference_kind, ns, alternative_kind, bootstrap_rounds, source)
      .front();
}

// ---------------------------------------------------------------------------
// Cohort

void CohortSpec::check() const {
  if (n_patients < 2) throw InvalidArgument("a cohort needs at least 2 patients");
  if (n_timelines == 0) throw InvalidArgument("n_timelines must be >= 1");
  if (reference_n == 0 || reference_n > n_timelines)
    throw InvalidArgument("reference_n must lie in [1, n_timelines]");
  if (bootstrap_rounds < 2) throw InvalidArgument("bootstrap_rounds must be >= 2");
  if (equivalence_rounds == 0) throw InvalidArgument("equivalence_rounds must be >= 1");
  if (calibration_bins == 0) throw InvalidArgument("calibration_bins must be >= 1");
  if (!(risk.low > 0.0 && risk.low <= risk.high && risk.high <= 1.0))
    throw InvalidArgument("risk prior needs 0 < low <= high <= 1");
  ChainSpec probe = chains;
  probe.target_probability.reset();
  probe.check();
}

bool CalibrationReport::all_within() const {
  return std::all_of(within_bounds.begin(), within_bounds.end(), [](bool b) { return b; });
}

const EquivalenceResult* CohortResult::find_equivalence(EstimatorKind alternative,
                                                        std::size_t reference_n) const {
  for (const auto& e : equivalence)
    if (e.alternative == alternative && e.reference_n == reference_n) return &e;
  return nullptr;
}

namespace {

void shuffle_indices(std::vector<std::size_t>& v, Philox4x64& rng) {
  std::iota(v.begin(), v.end(), std::size_t{0});
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

CalibrationReport calibrate(EstimatorKind kind, std::size_t n, std::span<const double> raw,
                            std::span<const Label> labels, std::size_t bins) {
  CalibrationReport rep;
  rep.kind = kind;
  rep.n = n;
  auto clipped = clip_to_unit(raw);
  rep.n_clipped = clipped.n_clipped;
  rep.bins = calibration_curve(clipped.scores, labels, bins);
  for (const auto& b : rep.bins) {
    const auto region = binomial_acceptance_region(b.count, b.mean_score, 0.95);
    rep.acceptance.push_back(region);
    rep.within_bounds.push_back(region.contains(static_cast<double>(b.events)));
  }
  return rep;
}

}  // namespace

CohortResult synthetic_cohort_eval(const CohortSpec& spec, const RandomSource& source) {
  spec.check();
  const std::size_t P = spec.n_patients, T = spec.n_timelines, B = spec.bootstrap_rounds;
  const std::uint64_t seed = source.seed();
  CohortResult out;
  out.true_risk.resize(P);
  out.labels.resize(P);

  // subs[kind][patient * T + j]
  std::array<std::vector<double>, 3> subs;
  for (auto& s : subs) s.resize(P * T);

  const auto patient_source = source.child("patients");
  const auto chain_source = source.child("chains");
  const auto timeline_source = source.child("timelines");
  const double log_lo = std::log(spec.risk.low), log_hi = std::log(spec.risk.high);
  parallel_for(P, spec.workers, [&](std::size_t i) {
    auto rng = patient_source.stream(i);
    ChainSpec cs = spec.chains;
    cs.target_probability = std::exp(log_lo + rng.uniform() * (log_hi - log_lo));
    const auto chain = random_chain(cs, chain_source.child(i));
    const double p = exact_outcome_probability(chain);
    out.true_risk[i] = p;
    out.labels[i] = rng.uniform() < p ? 1 : 0;
    const auto pool = pooled_subs(chain, T, timeline_source.child(i), 1);
    for (std::size_t k = 0; k < 3; ++k)
      std::copy(pool[k].begin(), pool[k].end(), subs[k].begin() + static_cast<std::ptrdiff_t>(i * T));
  });

  const std::size_t positives =
      static_cast<std::size_t>(std::count(out.labels.begin(), out.labels.end(), Label{1}));
  out.table.add(row("cohort", "-", P, "prevalence",
                    static_cast<double>(positives) / static_cast<double>(P), seed));
  out.table.add(row("cohort", "-", P, "mean_true_risk", compensated_mean(out.true_risk), seed));

  // auc[kind][n-1][round], brier likewise; NaN marks a dropped cell.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::array<std::vector<std::vector<double>>, 3> auc, brier_v;
  for (std::size_t k = 0; k < 3; ++k) {
    auc[k].assign(T, std::vector<double>(B, nan));
    brier_v[k].assign(T, std::vector<double>(B, nan));
  }
  // Round-0 scores, kept for calibration: first[kind][n-1][patient].
  std::array<std::vector<std::vector<double>>, 3> first;
  const auto subsample_source = source.child("subsample");
  std::vector<std::size_t> clipped_per_round(B, 0);
  std::vector<bool> dropped(B, false);

  for (std::size_t b = 0; b < B; ++b) {
    std::array<std::vector<std::vector<double>>, 3> scores;
    for (auto& s : scores) s.assign(T, std::vector<double>(P));
    const auto round_source = subsample_source.child(b);
    parallel_for(P, spec.workers, [&](std::size_t i) {
      auto rng = round_source.stream(i);
      std::vector<std::size_t> standard(T), excluded(T);
      shuffle_indices(standard, rng);
      shuffle_indices(excluded, rng);
      double run[3] = {0.0, 0.0, 0.0};
      for (std::size_t n = 1; n <= T; ++n) {
        run[0] += subs[0][i * T + standard[n - 1]];
        run[1] += subs[1][i * T + standard[n - 1]];
        run[2] += subs[2][i * T + excluded[n - 1]];
        for (std::size_t k = 0; k < 3; ++k) scores[k][n - 1][i] = run[k] / static_cast<double>(n);
      }
    });
    std::vector<std::size_t> clipped(T, 0);
    std::vector<char> undefined(T, 0);
    parallel_for(T, spec.workers, [&](std::size_t n0) {
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& s = scores[k][n0];
        try {
          auc[k][n0][b] = auroc(s, out.labels);
        } catch (const UndefinedMetric&) {
          undefined[n0] = 1;
        }
        const auto c = clip_to_unit(s);
        if (k == kind_index(EstimatorKind::scope)) clipped[n0] = c.n_clipped;
        brier_v[k][n0][b] = brier(c.scores, out.labels);
      }
    });
    clipped_per_round[b] = std::accumulate(clipped.begin(), clipped.end(), std::size_t{0});
    dropped[b] = std::any_of(undefined.begin(), undefined.end(), [](char c) { return c != 0; });
    if (b == 0) first = std::move(scores);
  }
  out.dropped_rounds = static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), true));
  out.scope_clipped = std::accumulate(clipped_per_round.begin(), clipped_per_round.end(), std::size_t{0});
  out.table.add(row("cohort", "-", B, "dropped_rounds", static_cast<double>(out.dropped_rounds), seed));
  out.table.add(row("cohort", "SCOPE", T, "clipped_scores", static_cast<double>(out.scope_clipped), seed));

  for (auto kind : kAllEstimators) {
    const auto k = kind_index(kind);
    const auto name = std::string(to_string(kind));
    for (std::size_t n = 1; n <= T; ++n) {
      std::vector<double> a, br;
      for (std::size_t b = 0; b < B; ++b) {
        if (dropped[b]) continue;
        a.push_back(auc[k][n - 1][b]);
        br.push_back(brier_v[k][n - 1][b]);
      }
      if (a.empty()) continue;
      out.table.add(row_ci("cohort/auroc", name, n, "auroc", compensated_mean(a),
                           percentile_interval(a), seed));
      out.table.add(row_ci("cohort/brier", name, n, "brier", compensated_mean(br),
                           percentile_interval(br), seed));
      out.auc.set(kind, n, std::move(a));
    }
  }
  if (out.auc.max_n(EstimatorKind::mc) == 0) return out;  // single-class labels: nothing to rank

  std::vector<std::size_t> ref_ns(spec.reference_n);
  std::iota(ref_ns.begin(), ref_ns.end(), std::size_t{1});
  const auto eq_source = source.child("equivalence");
  for (auto alt : {EstimatorKind::scope, EstimatorKind::reach}) {
    auto curve = equivalence_curve(out.auc, EstimatorKind::mc, ref_ns, alt,
                                   spec.equivalence_rounds, eq_source.child(to_string(alt)));
    for (auto& e : curve) {
      e.ratio.task = e.m.task = "cohort/" + e.ratio.task;
      e.ratio.seed = e.m.seed = seed;
      out.table.add(e.ratio);
      out.table.add(e.m);
      out.table.add(row(e.ratio.task, e.ratio.kind, e.reference_n, "equivalence_not_reached",
                        static_cast<double>(e.not_reached), seed));
      out.equivalence.push_back(std::move(e));
    }
  }

  auto add_calibration = [&](EstimatorKind kind, std::size_t n) {
    auto rep = calibrate(kind, n, first[kind_index(kind)][n - 1], out.labels, spec.calibration_bins);
    const auto name = std::string(to_string(kind));
    for (std::size_t j = 0; j < rep.bins.size(); ++j) {
      const auto& bin = rep.bins[j];
      const std::string task = "cohort/calibration/bin=" + format_double(bin.lower) + "-" +
                               format_double(bin.upper);
      out.table.add(row(task, name, n, "calibration_mean_score", bin.mean_score, seed));
      out.table.add(row_ci(task, name, n, "calibration_event_rate", bin.event_rate,
                           wilson_interval(bin.events, bin.count), seed));
      out.table.add(row(task, name, n, "calibration_count", static_cast<double>(bin.count), seed));
      out.table.add(row_ci(task, name, n, "calibration_events", static_cast<double>(bin.events),
                           rep.acceptance[j], seed));
      out.table.add(row(task, name, n, "calibration_within_bounds",
                        rep.within_bounds[j] ? 1.0 : 0.0, seed));
    }
    out.calibration.push_back(std::move(rep));
  };
  add_calibration(EstimatorKind::mc, spec.reference_n);
  for (auto alt : {EstimatorKind::scope, EstimatorKind::reach}) {
    const auto* e = out.find_equivalence(alt, spec.reference_n);
    if (e == nullptr || !std::isfinite(e->m.value)) continue;
    const auto m = static_cast<std::size_t>(std::lround(e->m.value));
    add_calibration(alt, std::clamp<std::size_t>(m, 1, T));
  }
  return out;
}

LinePlot cohort_auc_plot(const CohortResult& result) {
  LinePlot plot;
  plot.title = "Discrimination by sample count";
  plot.x_label = "timelines per patient";
  plot.y_label = "AUROC";
  for (auto kind : kAllEstimators) {
    Series s{std::string(to_string(kind)), {}, {}, false};
    for (const auto& r : result.table.select("auroc", "cohort/auroc", to_string(kind))) {
      s.x.push_back(static_cast<double>(r.n));
      s.y.push_back(r.value);
    }
    plot.series.push_back(std::move(s));
  }
  return plot;
}

LinePlot equivalence_plot(const CohortResult& result) {
  LinePlot plot;
  plot.title = "Sample-count ratio matching MC discrimination";
  plot.x_label = "MC timelines";
  plot.y_label = "MC count / alternative count";
  for (auto alt : {EstimatorKind::scope, EstimatorKind::reach}) {
    Series s{std::string(to_string(alt)), {}, {}, false};
    for (const auto& e : result.equivalence) {
      if (e.alternative != alt) continue;
      s.x.push_back(static_cast<double>(e.reference_n));
      s.y.push_back(e.ratio.value);
    }
    plot.series.push_back(std::move(s));
  }
  return plot;
}

}  // namespace reachlab
