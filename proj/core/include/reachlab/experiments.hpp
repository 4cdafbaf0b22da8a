#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reachlab/estimators.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/rng.hpp"
#include "reachlab/seqmodel.hpp"
#include "reachlab/svg.hpp"
#include "reachlab/table.hpp"

namespace reachlab {

// ---------------------------------------------------------------------------
// Random chains

/// How non-outcome states move among themselves.
///   random:  Exp(1) weights per row, hazardous states get U(0.2, 1) outcome weights.
///   uniform: every non-outcome state moves uniformly to all *other* non-outcome
///            states, and all hazardous states share one hazard.
enum class ChainLayout { random, uniform };

std::string_view to_string(ChainLayout layout);
ChainLayout parse_chain_layout(std::string_view text);

/// Recipe for a chain whose last state is the absorbing outcome and whose
/// first state is the initial state.
struct ChainSpec {
  std::size_t n_states = 11;
  double spontaneity = 1.0;  // fraction of non-outcome states with outcome mass
  std::optional<double> target_probability;
  std::size_t horizon_steps = 20;
  std::uint64_t seed = 0;
  ChainLayout layout = ChainLayout::random;
  double hazard_scale = 0.1;  // outcome-mass multiplier when no target is set

  /// round(spontaneity * (n_states - 1)).
  std::size_t hazardous_states() const;
  void check() const;
};

/// Builds the chain described by `spec`, drawing structure from RandomSource(spec.seed).
/// With a target probability the outcome masses are scaled by bisection until the
/// exact outcome probability is within 1e-6 of it; throws CalibrationFailure naming
/// the achievable interval otherwise.
MarkovModel random_chain(const ChainSpec& spec);
MarkovModel random_chain(const ChainSpec& spec, const RandomSource& source);

/// Fraction of non-outcome states whose outcome transition exceeds 1e-12.
double spontaneity(const MarkovModel& model);

// ---------------------------------------------------------------------------
// Variance sweeps

enum class SweepAxis { probability, spontaneity, sample_count };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepConfig {
  SweepAxis axis = SweepAxis::probability;
  std::vector<double> grid;  // empty: the axis default
  ChainSpec base;
  std::size_t replications = 10'000;
  std::size_t samples_per_estimate = 1;  // per replicate; the grid value on the sample_count axis
  unsigned workers = 1;

  /// Documented defaults: 11 states, horizon 20, 10k replications, and
  ///   probability:  grid 0.05..0.95 step 0.05, random layout, spontaneity 1
  ///   spontaneity:  grid 0.1..1.0 step 0.1, uniform layout, P = 0.5
  ///   sample_count: grid 1, 2, 4, ..., 128, random layout, spontaneity 1, P = 0.5
  static SweepConfig defaults(SweepAxis axis);
  std::vector<double> resolved_grid() const;
};

struct SweepResult {
  ExperimentTable table;
  std::vector<std::string> failures;  // one message per grid point that could not be built
};

/// For each grid point: build the chain, draw `replications` independent
/// estimates of every kind, and emit mean / variance (with CIs), the exact
/// variance from the moment recursion, the true probability and the measured
/// spontaneity. Task names are "variance_sweep/<axis>=<value>". A point whose
/// chain cannot be built yields a single "failed" row and the sweep continues.
SweepResult variance_sweep(const SweepConfig& config, const RandomSource& source);

LinePlot sweep_plot(const ExperimentTable& table, SweepAxis axis);

// ---------------------------------------------------------------------------
// Distribution of repeated estimates

struct DistributionConfig {
  ChainSpec spec;
  std::size_t n_estimates = 2000;
  std::size_t samples_per_estimate = 10;
  std::size_t bins = 50;
  unsigned workers = 1;
};

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct DistributionResult {
  double true_probability = 0.0;
  std::array<std::vector<double>, 3> estimates;  // indexed by EstimatorKind
  std::array<std::vector<HistogramBin>, 3> histograms;
  std::uint64_t seed = 0;

  const std::vector<double>& of(EstimatorKind kind) const {
    return estimates[static_cast<std::size_t>(kind)];
  }
  /// Columns: kind,bin_low,bin_high,count,seed.
  std::string histogram_csv() const;
  ExperimentTable summary() const;
  LinePlot plot() const;
};

DistributionResult estimate_distribution_experiment(const DistributionConfig& config,
                                                    const RandomSource& source);

// ---------------------------------------------------------------------------
// Synthetic cohort evaluation

/// Replicate AUROCs per (estimator, sample count).
class AucTable {
 public:
  void set(EstimatorKind kind, std::size_t n, std::vector<double> replicates);
  bool has(EstimatorKind kind, std::size_t n) const;
  /// Throws InvalidArgument for a missing cell.
  const std::vector<double>& at(EstimatorKind kind, std::size_t n) const;
  /// Largest sample count present for `kind` (0 if none).
  std::size_t max_n(EstimatorKind kind) const;

 private:
  std::map<std::pair<EstimatorKind, std::size_t>, std::vector<double>> cells_;
};

struct EquivalenceResult {
  EstimatorKind reference = EstimatorKind::mc;
  EstimatorKind alternative = EstimatorKind::reach;
  std::size_t reference_n = 0;
  std::size_t rounds = 0;
  std::size_t not_reached = 0;
  std::vector<std::optional<std::size_t>> m_per_round;
  MetricRow ratio;  // n / m: bootstrap median with 95% percentile CI over reached rounds
  MetricRow m;      // smallest alternative count strictly beating the reference
};

/// Bootstrap of the sample count at which `alternative` first beats
/// `reference` at `reference_n`: each round resamples every cell's replicate
/// AUROCs with replacement, averages them, and takes the smallest m with
/// alt-mean(m) > ref-mean(reference_n). Rounds without such m are "not reached".
EquivalenceResult equivalence_ratio(const AucTable& table, EstimatorKind reference_kind,
                                    std::size_t reference_n, EstimatorKind alternative_kind,
                                    std::size_t bootstrap_rounds, const RandomSource& source);

/// The same bootstrap for many reference counts, sharing each round's
/// resampled alternative curve.
std::vector<EquivalenceResult> equivalence_curve(const AucTable& table,
                                                 EstimatorKind reference_kind,
                                                 std::span<const std::size_t> reference_ns,
                                                 EstimatorKind alternative_kind,
                                                 std::size_t bootstrap_rounds,
                                                 const RandomSource& source);

/// Per-patient target probabilities are drawn log-uniformly from [low, high].
struct RiskPrior {
  double low = 0.005;
  double high = 0.5;
};

struct CohortSpec {
  std::size_t n_patients = 2000;
  ChainSpec chains;  // per-patient template; its target is replaced by a draw from `risk`
  RiskPrior risk;
  std::size_t n_timelines = 100;
  std::size_t bootstrap_rounds = 40;
  std::size_t equivalence_rounds = 1000;
  std::size_t reference_n = 100;
  std::size_t calibration_bins = 10;
  unsigned workers = 1;

  void check() const;
};

struct CalibrationReport {
  EstimatorKind kind = EstimatorKind::mc;
  std::size_t n = 0;
  std::vector<CalibrationBin> bins;
  std::vector<Interval> acceptance;  // event-count region of Binomial(count, mean score)
  std::vector<bool> within_bounds;
  std::size_t n_clipped = 0;

  bool all_within() const;
};

struct CohortResult {
  ExperimentTable table;
  AucTable auc;
  std::vector<double> true_risk;
  std::vector<Label> labels;
  std::vector<EquivalenceResult> equivalence;  // every (alternative, reference n)
  std::vector<CalibrationReport> calibration;  // at the equivalence sample counts
  std::size_t dropped_rounds = 0;
  std::size_t scope_clipped = 0;  // SCOPE scores clipped for Brier/calibration

  const EquivalenceResult* find_equivalence(EstimatorKind alternative,
                                            std::size_t reference_n) const;
};

/// Draws heterogeneous patients (one chain each), one label per patient from
/// the exact outcome probability, and per-patient pools of `n_timelines`
/// standard and outcome-free timelines. For each of `bootstrap_rounds`
/// subsamples (a random order of each pool, read as nested prefixes) it
/// records AUROC and Brier at every sample count, then runs the equivalence
/// bootstrap against MC at every reference count and checks calibration.
CohortResult synthetic_cohort_eval(const CohortSpec& spec, const RandomSource& source);

LinePlot cohort_auc_plot(const CohortResult& result);
LinePlot equivalence_plot(const CohortResult& result);

}  // namespace reachlab
