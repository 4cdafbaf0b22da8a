#include "reachlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reachlab/errors.hpp"
#include "reachlab/summation.hpp"

namespace reachlab {

namespace {

void require_same_length(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size())
    throw InvalidArgument("scores and labels differ in length");
  if (scores.empty()) throw InvalidArgument("scores are empty");
}

void require_unit_scores(std::span<const double> scores) {
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("scores must lie in [0, 1]");
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const Label> labels) {
  require_same_length(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based mid-ranks of the positives; tied groups share their mean rank.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t group_positives = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_positives += labels[order[j]] != 0;
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    positive_rank_sum += mid_rank * static_cast<double>(group_positives);
    positives += group_positives;
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0)
    throw UndefinedMetric("AUROC needs at least one positive and one negative label");
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

double brier(std::span<const double> scores, std::span<const Label> labels) {
  require_same_length(scores, labels);
  require_unit_scores(scores);
  CompensatedSum sum;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - (labels[i] ? 1.0 : 0.0);
    sum.add(d * d);
  }
  return sum.value() / static_cast<double>(scores.size());
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> scores,
                                              std::span<const Label> labels,
                                              std::size_t n_bins) {
  require_same_length(scores, labels);
  require_unit_scores(scores);
  if (n_bins == 0) throw InvalidArgument("calibration needs at least one bin");
  std::vector<CompensatedSum> score_sums(n_bins);
  std::vector<std::size_t> counts(n_bins, 0), events(n_bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto bin = static_cast<std::size_t>(scores[i] * static_cast<double>(n_bins));
    bin = std::min(bin, n_bins - 1);
    score_sums[bin].add(scores[i]);
    ++counts[bin];
    events[bin] += labels[i] != 0;
  }
  std::vector<CalibrationBin> out;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    CalibrationBin bin;
    bin.lower = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    bin.count = counts[b];
    bin.events = events[b];
    bin.mean_score = score_sums[b].value() / static_cast<double>(counts[b]);
    bin.event_rate = static_cast<double>(events[b]) / static_cast<double>(counts[b]);
    out.push_back(bin);
  }
  return out;
}

ClippedScores clip_to_unit(std::span<const double> scores) {
  ClippedScores out;
  out.scores.reserve(scores.size());
  for (double s : scores) {
    const double c = std::clamp(s, 0.0, 1.0);
    out.n_clipped += c != s;
    out.scores.push_back(c);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval percentile_interval(std::span<const double> values, double level) {
  std::vector<double> v(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile(v, tail), quantile(v, 1.0 - tail)};
}

Interval binomial_acceptance_region(std::size_t trials, double p, double level) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binomial p must lie in [0, 1]");
  const double tail = (1.0 - level) / 2.0;
  std::vector<double> pmf(trials + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
  } else if (p == 1.0) {
    pmf[trials] = 1.0;
  } else {
    const double n = static_cast<double>(trials);
    for (std::size_t k = 0; k <= trials; ++k) {
      const double kk = static_cast<double>(k);
      pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) +
                        kk * std::log(p) + (n - kk) * std::log1p(-p));
    }
  }
  // Largest k_lo with P(X < k_lo) <= tail; smallest k_hi with P(X > k_hi) <= tail.
  std::size_t lo = 0;
  double below = 0.0;
  while (lo < trials && below + pmf[lo] <= tail) below += pmf[lo++];
  std::size_t hi = trials;
  double above = 0.0;
  while (hi > 0 && above + pmf[hi] <= tail) above += pmf[hi--];
  return {static_cast<double>(lo), static_cast<double>(hi)};
}

double normal_two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  // Solve erfc(z / sqrt 2) = 1 - level by bisection.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > 1.0 - level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Interval wilson_interval(std::size_t events, std::size_t trials, double level) {
  if (trials == 0) throw InvalidArgument("Wilson interval needs trials >= 1");
  const double z = normal_two_sided_z(level);
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(events) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs >= 2 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw InvalidArgument("log-log slope needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = compensated_mean(lx), my = compensated_mean(ly);
  CompensatedSum sxy, sxx;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy.add((lx[i] - mx) * (ly[i] - my));
    sxx.add((lx[i] - mx) * (lx[i] - mx));
  }
  return sxy.value() / sxx.value();
}

double variance_standard_error(std::span<const double> values) {
  const std::size_t count = values.size();
  if (count < 4) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(count);
  const double mean = compensated_mean(values);
  CompensatedSum m2, m4;
  for (double v : values) {
    const double d2 = (v - mean) * (v - mean);
    m2.add(d2);
    m4.add(d2 * d2);
  }
  const double second = m2.value() / n;
  const double fourth = m4.value() / n;
  const double var_of_s2 = (fourth - second * second * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(0.0, var_of_s2));
}

}  // namespace reachlab
