#include "reachlab/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "reachlab/parallel.hpp"
#include "reachlab/summation.hpp"

namespace reachlab {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require_mode(const Trajectory& traj, SamplingMode expected, std::string_view estimator) {
  if (traj.mode != expected)
    throw ModeMismatch(std::string(estimator) + " needs a " + std::string(to_string(expected)) +
                       " trajectory, got " + std::string(to_string(traj.mode)));
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::mc: return "MC";
    case EstimatorKind::scope: return "SCOPE";
    case EstimatorKind::reach: return "REACH";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view text) {
  const auto s = lower(text);
  if (s == "mc") return EstimatorKind::mc;
  if (s == "scope") return EstimatorKind::scope;
  if (s == "reach") return EstimatorKind::reach;
  throw InvalidArgument("unknown estimator kind '" + std::string(text) + "'");
}

std::string_view to_string(ClipPolicy policy) {
  return policy == ClipPolicy::none ? "none" : "clip_to_unit";
}

ClipPolicy parse_clip_policy(std::string_view text) {
  const auto s = lower(text);
  if (s == "none") return ClipPolicy::none;
  if (s == "unit" || s == "clip_to_unit") return ClipPolicy::clip_to_unit;
  throw InvalidArgument("unknown clip policy '" + std::string(text) + "'");
}

double mc_sub(const Trajectory& traj) {
  require_mode(traj, SamplingMode::standard, "MC");
  return traj.hit_index && *traj.hit_index < traj.end_index ? 1.0 : 0.0;
}

double scope_sub(const Trajectory& traj) {
  require_mode(traj, SamplingMode::standard, "SCOPE");
  // Generation halts at the outcome, so hazards already end at min(T_E, T_O).
  return compensated_sum(std::span(traj.hazards).first(traj.end_index));
}

double reach_sub(const Trajectory& traj) {
  require_mode(traj, SamplingMode::outcome_excluded, "REACH");
  if (traj.degenerate) return 1.0;
  double log_survival = 0.0;
  for (std::size_t t = 0; t < traj.end_index; ++t) log_survival += std::log1p(-traj.hazards[t]);
  return -std::expm1(log_survival);
}

double sub_value(EstimatorKind kind, const Trajectory& traj) {
  switch (kind) {
    case EstimatorKind::mc: return mc_sub(traj);
    case EstimatorKind::scope: return scope_sub(traj);
    case EstimatorKind::reach: return reach_sub(traj);
  }
  return 0.0;
}

EstimateReport summarize(EstimatorKind kind, std::vector<double> sub_values, ClipPolicy clip,
                         std::uint64_t seed) {
  if (sub_values.empty()) throw InvalidArgument("cannot summarize zero sub-estimates");
  EstimateReport report;
  report.kind = kind;
  report.n = sub_values.size();
  report.clip_policy = clip;
  report.seed = seed;
  if (clip == ClipPolicy::clip_to_unit) {
    for (double& v : sub_values) {
      if (v > 1.0) {
        v = 1.0;
        ++report.n_clipped;
      }
    }
  } else {
    report.n_clipped = 0;
  }
  report.mean = compensated_mean(sub_values);
  report.sample_variance = sample_variance(sub_values);
  report.std_error = std::sqrt(report.sample_variance / static_cast<double>(report.n));
  report.sub_values = std::move(sub_values);
  return report;
}

EstimateReport estimate(const SequenceModel& model, const Vocabulary& vocab,
                        const HorizonPolicy& horizon, EstimatorKind kind, std::size_t n,
                        const RandomSource& source, const EstimateOptions& options) {
  if (n == 0) throw InvalidArgument("estimate needs n >= 1 trajectories");
  vocab.check();
  horizon.check();
  const SamplingMode mode = required_mode(kind);
  const RandomSource pool = pool_source(source, mode);
  std::vector<double> values(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    values[i] = sub_value(kind, sample_trajectory(model, vocab, horizon, mode, pool, i));
  });
  return summarize(kind, std::move(values), options.clip, source.seed());
}

EstimateReport estimate(const MarkovModel& model, EstimatorKind kind, std::size_t n,
                        const RandomSource& source, const EstimateOptions& options) {
  require_valid(model);
  return estimate(model, model.vocabulary(), model.horizon(), kind, n, source, options);
}

PairedReports paired_estimates(const SequenceModel& model, const Vocabulary& vocab,
                               const HorizonPolicy& horizon, std::size_t n,
                               const RandomSource& source, const EstimateOptions& options) {
  if (n == 0) throw InvalidArgument("estimate needs n >= 1 trajectories");
  vocab.check();
  horizon.check();
  const RandomSource pool = pool_source(source, SamplingMode::standard);
  std::vector<double> mc(n), scope(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const auto traj = sample_trajectory(model, vocab, horizon, SamplingMode::standard, pool, i);
    mc[i] = mc_sub(traj);
    scope[i] = scope_sub(traj);
  });
  return {summarize(EstimatorKind::mc, std::move(mc), ClipPolicy::none, source.seed()),
          summarize(EstimatorKind::scope, std::move(scope), options.clip, source.seed())};
}

PairedReports paired_estimates(const MarkovModel& model, std::size_t n,
                               const RandomSource& source, const EstimateOptions& options) {
  require_valid(model);
  return paired_estimates(model, model.vocabulary(), model.horizon(), n, source, options);
}

}  // namespace reachlab
