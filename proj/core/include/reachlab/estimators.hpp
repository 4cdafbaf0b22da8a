#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "reachlab/rng.hpp"
#include "reachlab/seqmodel.hpp"

namespace reachlab {

enum class EstimatorKind { mc, scope, reach };

inline constexpr EstimatorKind kAllEstimators[] = {EstimatorKind::mc, EstimatorKind::scope,
                                                   EstimatorKind::reach};

std::string_view to_string(EstimatorKind kind);
/// Accepts "mc", "scope", "reach" in any case.
EstimatorKind parse_estimator_kind(std::string_view text);

/// REACH samples outcome-free backbones; MC and SCOPE share standard timelines.
constexpr SamplingMode required_mode(EstimatorKind kind) {
  return kind == EstimatorKind::reach ? SamplingMode::outcome_excluded : SamplingMode::standard;
}

enum class ClipPolicy { none, clip_to_unit };

std::string_view to_string(ClipPolicy policy);
ClipPolicy parse_clip_policy(std::string_view text);

/// 1 if the outcome was generated before the end of the timeline, else 0.
double mc_sub(const Trajectory& traj);

/// Sum of the outcome hazards up to and including the step at which the
/// outcome was drawn (or the last generated step). Unbounded above.
double scope_sub(const Trajectory& traj);

/// 1 - prod(1 - h_t) over an outcome-free backbone; exactly 1 for degenerate
/// backbones.
double reach_sub(const Trajectory& traj);

double sub_value(EstimatorKind kind, const Trajectory& traj);

struct EstimateReport {
  EstimatorKind kind = EstimatorKind::mc;
  std::size_t n = 0;
  double mean = 0.0;
  double sample_variance = 0.0;  // divisor n - 1; 0 when n == 1
  double std_error = 0.0;        // sqrt(sample_variance / n)
  std::vector<double> sub_values;
  ClipPolicy clip_policy = ClipPolicy::none;
  std::size_t n_clipped = 0;
  std::uint64_t seed = 0;
};

/// Applies the clip policy and aggregates with compensated summation in index order.
EstimateReport summarize(EstimatorKind kind, std::vector<double> sub_values,
                         ClipPolicy clip = ClipPolicy::none, std::uint64_t seed = 0);

struct EstimateOptions {
  ClipPolicy clip = ClipPolicy::none;
  unsigned workers = 1;  // 0 = machine parallelism
};

/// The RandomSource whose stream i drives the i-th trajectory of a pool in `mode`.
inline RandomSource pool_source(const RandomSource& source, SamplingMode mode) {
  return source.child(to_string(mode));
}

/// Samples `n` trajectories in the mode `kind` requires and averages the
/// sub-estimates. Results do not depend on the worker count.
EstimateReport estimate(const SequenceModel& model, const Vocabulary& vocab,
                        const HorizonPolicy& horizon, EstimatorKind kind, std::size_t n,
                        const RandomSource& source, const EstimateOptions& options = {});

EstimateReport estimate(const MarkovModel& model, EstimatorKind kind, std::size_t n,
                        const RandomSource& source, const EstimateOptions& options = {});

struct PairedReports {
  EstimateReport mc;
  EstimateReport scope;
};

/// MC and SCOPE computed over one shared pool of standard-mode timelines.
PairedReports paired_estimates(const SequenceModel& model, const Vocabulary& vocab,
                               const HorizonPolicy& horizon, std::size_t n,
                               const RandomSource& source, const EstimateOptions& options = {});

PairedReports paired_estimates(const MarkovModel& model, std::size_t n,
                               const RandomSource& source, const EstimateOptions& options = {});

}  // namespace reachlab
