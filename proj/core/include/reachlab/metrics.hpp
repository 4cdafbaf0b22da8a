#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace reachlab {

using Label = std::uint8_t;  // 0 or 1

/// Mann-Whitney AUROC; tied scores across classes count 1/2. Throws
/// UndefinedMetric unless both classes are present.
double auroc(std::span<const double> scores, std::span<const Label> labels);

/// Mean squared error between scores in [0,1] and binary labels.
double brier(std::span<const double> scores, std::span<const Label> labels);

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_score = 0.0;
  double event_rate = 0.0;
  std::size_t count = 0;
  std::size_t events = 0;
};

/// Equal-width bins over [0,1] (a score of 1 falls in the last bin); empty
/// bins are omitted.
std::vector<CalibrationBin> calibration_curve(std::span<const double> scores,
                                              std::span<const Label> labels,
                                              std::size_t n_bins = 10);

struct ClippedScores {
  std::vector<double> scores;
  std::size_t n_clipped = 0;
};

/// Clamps into [0,1] and counts how many values moved.
ClippedScores clip_to_unit(std::span<const double> scores);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double x) const { return low <= x && x <= high; }
};

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double quantile(std::vector<double> values, double q);

/// Percentile bootstrap interval: the (1-level)/2 and (1+level)/2 quantiles.
Interval percentile_interval(std::span<const double> values, double level = 0.95);

/// Central acceptance region [k_lo, k_hi] for Binomial(trials, p): both tails
/// outside it carry at most (1-level)/2 probability each.
Interval binomial_acceptance_region(std::size_t trials, double p, double level = 0.95);

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t events, std::size_t trials, double level = 0.95);

/// Two-sided standard normal quantile for a central `level` (0.95 -> 1.95996...).
double normal_two_sided_z(double level);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Standard error of an (n-1) sample variance from the central sample moments
/// m2, m4 (both divided by n): sqrt((m4 - m2^2 (n-3)/(n-1)) / n).
double variance_standard_error(std::span<const double> values);

}  // namespace reachlab
