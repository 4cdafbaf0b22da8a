// One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/generators.hpp"
#include "reachlab/estimators.hpp"
#include "reachlab/experiments.hpp"
#include "reachlab/metrics.hpp"
#include "reachlab/oracle.hpp"

using namespace reachlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_seconds) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(budget_seconds) + " s budget)";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// The 200 seeded random models shared by the oracle suites.
const std::vector<MarkovModel>& oracle_models() {
  static const std::vector<MarkovModel> models = [] {
    std::mt19937_64 gen(20250101);
    std::vector<MarkovModel> out;
    for (int i = 0; i < 200; ++i) out.push_back(testgen::random_markov(gen, 5, 6));
    return out;
  }();
  return models;
}

std::vector<double> sweep_series(const ExperimentTable& t, const char* stat, const char* kind) {
  std::vector<double> v;
  for (const auto& r : t.select(stat, "variance_sweep/", kind)) v.push_back(r.value);
  return v;
}

std::vector<double> sweep_axis(const ExperimentTable& t, const char* kind) {
  std::vector<double> x;
  for (const auto& r : t.select("variance", "variance_sweep/", kind))
    x.push_back(std::stod(r.task.substr(r.task.find('=') + 1)));
  return x;
}

Outcome counterexample_closed_form() {
  double worst = 0.0;
  for (double p : {0.0, 0.25, 0.5, 0.9}) {
    const auto cm = counterexample_model(p);
    const auto mc = enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::mc);
    const auto sc =
        enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::scope);
    worst = std::max(worst, std::abs((sc.variance() - mc.variance()) - (1.0 - p) / 16.0));
    worst = std::max(worst, std::abs(mc.second_moment() - 7.0 / 8.0 * (1.0 - p)));
    worst = std::max(worst, std::abs(sc.second_moment() - 15.0 / 16.0 * (1.0 - p)));
  }
  return {worst <= 1e-12, "max deviation " + fmt(worst) + " (tol 1e-12)"};
}

Outcome dispersion_number() {
  const double d = dispersion_probability(100, 1.0 / 10000.0, 1.0 / 1000.0);
  return {std::abs(d - 0.0943) <= 1e-4, "value " + fmt(d) + " (target 0.0943 +- 1e-4)"};
}

Outcome unbiasedness() {
  double worst = 0.0;
  for (const auto& m : oracle_models()) {
    const double p = exact_outcome_probability(m);
    for (auto kind : kAllEstimators)
      worst = std::max(worst, std::abs(enumerate_sub_distribution(m, kind).mean() - p));
  }
  return {worst <= 1e-10, "200 models, max |E[sub] - p| " + fmt(worst) + " (tol 1e-10)"};
}

Outcome variance_ordering() {
  double worst_order = 0.0, worst_identity = 0.0;
  for (const auto& m : oracle_models()) {
    const auto mc = enumerate_sub_distribution(m, EstimatorKind::mc);
    const auto sc = enumerate_sub_distribution(m, EstimatorKind::scope);
    const auto re = enumerate_sub_distribution(m, EstimatorKind::reach);
    worst_order = std::max({worst_order, re.variance() - mc.variance(), re.variance() - sc.variance()});
    const double gap = re.expectation([](double r) { return r * (1.0 - r); });
    worst_identity =
        std::max(worst_identity, std::abs((mc.variance() - re.variance()) - gap));
  }
  const bool pass = worst_order <= 1e-12 && worst_identity <= 1e-10;
  return {pass, "max ordering excess " + fmt(worst_order) + " (tol 1e-12), identity error " +
                    fmt(worst_identity) + " (tol 1e-10)"};
}

Outcome bijection() {
  double worst = 0.0;
  for (const auto& m : oracle_models()) {
    const auto b = exact_bijection_check(m);
    worst = std::max(worst, std::abs(b.p_a - b.p_b));
  }
  return {worst < 1e-10, "200 models, max |P(A) - P(B)| " + fmt(worst) + " (tol 1e-10)"};
}

Outcome variance_sweeps() {
  std::ostringstream detail;
  bool pass = true;
  const RandomSource src(1);

  // SCOPE minus MC variance across the probability grid.
  {
    const auto res = variance_sweep(SweepConfig::defaults(SweepAxis::probability), src);
    const auto x = sweep_axis(res.table, "MC");
    const auto mc = sweep_series(res.table, "variance", "MC");
    const auto sc = sweep_series(res.table, "variance", "SCOPE");
    std::vector<double> diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = sc[i] - mc[i];
    double crossover = std::nan("");
    for (std::size_t i = 1; i < diff.size(); ++i) {
      if (diff[i - 1] < 0.0 && diff[i] >= 0.0) {
        crossover = x[i - 1] + (x[i] - x[i - 1]) * (-diff[i - 1]) / (diff[i] - diff[i - 1]);
        break;
      }
    }
    const bool ok = res.failures.empty() && !diff.empty() && diff.front() < 0.0 &&
                    diff.back() > 0.0 && crossover >= 0.6 && crossover <= 0.95;
    pass = pass && ok;
    detail << "probability: crossover " << fmt(crossover) << (ok ? " ok" : " BAD") << "; ";
  }

  // Spontaneity sweep at P = 0.5.
  {
    const auto res = variance_sweep(SweepConfig::defaults(SweepAxis::spontaneity), src);
    bool mc_flat = res.failures.empty();
    double worst_z = 0.0;
    for (const auto& r : res.table.select("variance", "variance_sweep/", "MC")) {
      const double se = (*r.ci_high - r.value) / normal_two_sided_z(0.95);
      const double z = std::abs(r.value - 0.25) / se;
      worst_z = std::max(worst_z, z);
      mc_flat = mc_flat && z <= 3.0;
    }
    const auto reach = res.table.select("variance", "variance_sweep/", "REACH");
    bool reach_down = true;
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < reach.size(); ++i) {
      const double se_a = (*reach[i - 1].ci_high - reach[i - 1].value) / normal_two_sided_z(0.95);
      const double se_b = (*reach[i].ci_high - reach[i].value) / normal_two_sided_z(0.95);
      const double rise = (reach[i].value - reach[i - 1].value) / std::hypot(se_a, se_b);
      worst_rise = std::max(worst_rise, rise);
      reach_down = reach_down && rise <= 2.0;
    }
    const auto exact = res.table.select("exact_variance", "variance_sweep/", "REACH");
    for (std::size_t i = 1; i < exact.size(); ++i)
      reach_down = reach_down && exact[i].value <= exact[i - 1].value + 1e-12;
    pass = pass && mc_flat && reach_down;
    detail << "spontaneity: max |Var(MC)-0.25|/SE " << fmt(worst_z) << ", max REACH rise "
           << fmt(worst_rise) << " pooled SE" << (mc_flat && reach_down ? " ok" : " BAD") << "; ";
  }

  // MC variance against n.
  {
    const auto res = variance_sweep(SweepConfig::defaults(SweepAxis::sample_count), src);
    std::vector<double> n, v;
    for (const auto& r : res.table.select("variance", "variance_sweep/", "MC")) {
      n.push_back(static_cast<double>(r.n));
      v.push_back(r.value);
    }
    const double slope = loglog_slope(n, v);
    const bool ok = res.failures.empty() && std::abs(slope + 1.0) <= 0.1;
    pass = pass && ok;
    detail << "sample count: slope " << fmt(slope) << (ok ? " ok" : " BAD");
  }
  return {pass, detail.str()};
}

Outcome mc_contract() {
  double worst_z = 0.0;
  bool pass = true;
  for (std::uint64_t i = 0; i < 20; ++i) {
    ChainSpec spec;
    spec.seed = 1000 + i;
    spec.spontaneity = 0.2 + 0.04 * static_cast<double>(i);
    spec.layout = i % 2 ? ChainLayout::uniform : ChainLayout::random;
    spec.hazard_scale = 0.02 + 0.01 * static_cast<double>(i);
    const auto chain = random_chain(spec);
    const double p = exact_outcome_probability(chain);
    const auto r = estimate(chain, EstimatorKind::mc, 100000, RandomSource(spec.seed));
    const double err = std::abs(r.mean - p);
    if (r.std_error == 0.0) {
      pass = pass && err == 0.0;
      continue;
    }
    worst_z = std::max(worst_z, err / r.std_error);
    pass = pass && err <= 4.0 * r.std_error;
  }
  return {pass, "20 chains at n=100000, max |mean - p| / SE " + fmt(worst_z) + " (tol 4)"};
}

Outcome auroc_oracle() {
  std::mt19937_64 gen(777);
  std::vector<double> s;
  std::vector<Label> y;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    testgen::random_scores(gen, 2 + static_cast<std::size_t>(trial) * 5, s, y);
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (y[i] != 1 || y[j] != 0) continue;
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    worst = std::max(worst, std::abs(auroc(s, y) - wins / pairs));
  }
  return {worst <= 1e-12, "100 tied score sets, max error " + fmt(worst) + " (tol 1e-12)"};
}

Outcome synthetic_cohort() {
  CohortSpec spec;  // 2000 patients, 100 timelines, spontaneity 1
  const auto res = synthetic_cohort_eval(spec, RandomSource(1));
  std::ostringstream detail;
  bool pass = true;
  for (auto alt : {EstimatorKind::scope, EstimatorKind::reach}) {
    const auto* e = res.find_equivalence(alt, spec.reference_n);
    const bool ok = e != nullptr && e->m.ci_high && *e->m.ci_high < 100.0;
    pass = pass && ok;
    detail << to_string(alt) << " m=" << (e ? fmt(e->m.value) : "none");
    if (e && e->m.ci_high) detail << " CI [" << fmt(*e->m.ci_low) << ", " << fmt(*e->m.ci_high) << "]";
    detail << "; ";
  }
  bool calibrated = res.calibration.size() == 3;
  for (const auto& c : res.calibration) {
    calibrated = calibrated && c.all_within();
    detail << to_string(c.kind) << "@" << c.n << " bins " << (c.all_within() ? "within" : "OUTSIDE")
           << "; ";
  }
  pass = pass && calibrated;
  detail << "labels " << res.labels.size();
  return {pass, detail.str()};
}

}  // namespace

int main() {
  criterion("coin-flip closed forms", 1.0, counterexample_closed_form);
  criterion("dispersion probability 0.0943", 1.0, dispersion_number);
  criterion("unbiasedness on 200 random models", 30.0, unbiasedness);
  criterion("variance ordering and gap identity", 30.0, variance_ordering);
  criterion("bijection P(A) = P(B)", 30.0, bijection);
  criterion("variance sweeps (probability, spontaneity, sample count)", 600.0, variance_sweeps);
  criterion("MC within 4 SE of the exact probability", 120.0, mc_contract);
  criterion("AUROC against pairwise oracle", 10.0, auroc_oracle);
  criterion("synthetic cohort equivalence and calibration", 1200.0, synthetic_cohort);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
