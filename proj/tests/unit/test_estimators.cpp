#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/generators.hpp"
#include "reachlab/errors.hpp"
#include "reachlab/estimators.hpp"
#include "reachlab/oracle.hpp"

using namespace reachlab;

namespace {

Trajectory standard_traj(std::vector<double> hazards, std::optional<std::size_t> hit) {
  Trajectory t;
  t.mode = SamplingMode::standard;
  t.hazards = std::move(hazards);
  t.tokens.assign(t.hazards.size(), 0);
  t.hit_index = hit;
  t.end_index = t.hazards.size();
  return t;
}

Trajectory excluded_traj(std::vector<double> hazards, bool degenerate = false) {
  Trajectory t;
  t.mode = SamplingMode::outcome_excluded;
  t.hazards = std::move(hazards);
  t.tokens.assign(t.hazards.size() - (degenerate ? 1 : 0), 0);
  t.end_index = t.hazards.size();
  t.degenerate = degenerate;
  return t;
}

}  // namespace

TEST_CASE("sub-estimator examples") {
  CHECK(mc_sub(standard_traj({0.1, 0.2, 0.3}, 2)) == 1.0);
  CHECK(mc_sub(standard_traj({0.1, 0.2}, std::nullopt)) == 0.0);
  CHECK(scope_sub(standard_traj({0.0, 0.0, 0.0}, std::nullopt)) == 0.0);
  CHECK(scope_sub(standard_traj({0.5, 0.5, 0.5}, std::nullopt)) == 1.5);
  CHECK(scope_sub(standard_traj({0.25, 0.5}, 1)) == 0.75);
  CHECK(reach_sub(excluded_traj({0.0, 0.0})) == 0.0);
  CHECK(reach_sub(excluded_traj({1.0}, true)) == 1.0);
  CHECK(reach_sub(excluded_traj({0.5, 0.5, 0.5})) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("mode mismatches are rejected") {
  CHECK_THROWS_AS(mc_sub(excluded_traj({0.1})), ModeMismatch);
  CHECK_THROWS_AS(scope_sub(excluded_traj({0.1})), ModeMismatch);
  CHECK_THROWS_AS(reach_sub(standard_traj({0.1}, std::nullopt)), ModeMismatch);
}

TEST_CASE("coin-flip backbone B,T,T,T gives SCOPE 3/2 and REACH 7/8") {
  const auto cm = counterexample_model(0.3);
  const auto vocab = cm.vocabulary();
  const auto horizon = cm.horizon();
  const RandomSource src(1);
  // Every outcome-free backbone after B is B,T,T,T.
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto t = sample_trajectory(cm, vocab, horizon, SamplingMode::outcome_excluded, src, i);
    if (t.tokens.front() != CoinFlipModel::B) continue;
    CHECK(t.tokens == std::vector<TokenId>{1, 3, 3, 3});
    CHECK(reach_sub(t) == 0.875);
    Trajectory s = t;
    s.mode = SamplingMode::standard;
    CHECK(scope_sub(s) == 1.5);
  }
}

TEST_CASE("estimate examples") {
  const RandomSource src(17);
  SUBCASE("certain outcome at step 1") {
    const MarkovModel m(2, {0.0, 1.0, 0.0, 1.0}, 0, 1, 3);
    const auto r = estimate(m, EstimatorKind::mc, 50, src);
    CHECK(r.mean == 1.0);
    CHECK(r.sample_variance == 0.0);
  }
  SUBCASE("deterministic backbone makes REACH exact") {
    const double h = 0.13;
    const MarkovModel m(2, {1.0 - h, h, 0.0, 1.0}, 0, 1, 6);
    const auto r = estimate(m, EstimatorKind::reach, 200, src);
    const double expected = 1.0 - std::pow(1.0 - h, 6);
    for (double v : r.sub_values) CHECK(v == doctest::Approx(expected).epsilon(1e-14));
    CHECK(r.sample_variance == doctest::Approx(0.0).epsilon(1e-20));
  }
  SUBCASE("n = 0 is rejected") {
    const MarkovModel m(2, {0.5, 0.5, 0.0, 1.0}, 0, 1, 3);
    CHECK_THROWS_AS(estimate(m, EstimatorKind::mc, 0, src), InvalidArgument);
  }
}

TEST_CASE("paired estimates share one pool") {
  const MarkovModel none(2, {1.0, 0.0, 0.0, 1.0}, 0, 1, 4);
  const auto z = paired_estimates(none, 30, RandomSource(2));
  CHECK(z.mc.mean == 0.0);
  CHECK(z.scope.mean == 0.0);

  const MarkovModel m(3, {0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.0, 0.0, 1.0}, 0, 2, 4);
  const RandomSource src(5);
  const auto pr = paired_estimates(m, 300, src);
  const auto pool = pool_source(src, SamplingMode::standard);
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto t = sample_trajectory(m, SamplingMode::standard, pool, i);
    CHECK(pr.mc.sub_values[i] == (t.hit_index ? 1.0 : 0.0));
    CHECK(pr.scope.sub_values[i] == scope_sub(t));
  }
  // estimate(MC) draws from the same standard pool
  const auto mc = estimate(m, EstimatorKind::mc, 300, src);
  CHECK(mc.sub_values == pr.mc.sub_values);
  CHECK(pr.mc.seed == pr.scope.seed);
}

TEST_CASE("coin-flip paired means converge to 7/8(1-p)") {
  const double p = 0.25;
  const auto cm = counterexample_model(p);
  const auto pr = paired_estimates(cm, cm.vocabulary(), cm.horizon(), 200000, RandomSource(11));
  const double truth = 7.0 / 8.0 * (1.0 - p);
  CHECK(std::abs(pr.mc.mean - truth) < 4.0 * pr.mc.std_error);
  CHECK(std::abs(pr.scope.mean - truth) < 4.0 * pr.scope.std_error);
}

TEST_CASE("report invariants and worker-count independence") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = testgen::random_markov(gen);
    const RandomSource src(static_cast<std::uint64_t>(trial) * 31 + 1);
    for (auto kind : kAllEstimators) {
      const auto one = estimate(m, kind, 257, src, {ClipPolicy::none, 1});
      const auto four = estimate(m, kind, 257, src, {ClipPolicy::none, 4});
      CHECK(one.sub_values == four.sub_values);
      CHECK(one.mean == four.mean);
      CHECK(one.sample_variance == four.sample_variance);
      double plain = 0.0;
      for (double v : one.sub_values) plain += v;
      CHECK(std::abs(one.mean - plain / 257.0) <= 1e-12);
      CHECK(one.std_error == doctest::Approx(std::sqrt(one.sample_variance / 257.0)));
      for (double v : one.sub_values) {
        CHECK(v >= 0.0);
        if (kind != EstimatorKind::scope) CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("clip policy") {
  const std::vector<double> raw = {0.2, 1.7, 1.0, 0.0, 2.5};
  const auto none = summarize(EstimatorKind::scope, raw);
  CHECK(none.n_clipped == 0);
  CHECK(none.sub_values == raw);
  const auto clipped = summarize(EstimatorKind::scope, raw, ClipPolicy::clip_to_unit);
  CHECK(clipped.n_clipped == 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(clipped.sub_values[i] <= raw[i]);
    if (raw[i] <= 1.0) CHECK(clipped.sub_values[i] == raw[i]);
  }
  CHECK(clipped.mean == doctest::Approx(3.2 / 5.0));
  CHECK(parse_clip_policy("unit") == ClipPolicy::clip_to_unit);
  CHECK(parse_clip_policy("none") == ClipPolicy::none);
  CHECK_THROWS_AS(parse_clip_policy("sometimes"), InvalidArgument);
}

TEST_CASE("single-sample report has zero variance") {
  const auto r = summarize(EstimatorKind::mc, {1.0});
  CHECK(r.n == 1);
  CHECK(r.sample_variance == 0.0);
  CHECK(r.std_error == 0.0);
}

TEST_CASE("estimator kind names") {
  CHECK(parse_estimator_kind("ReAcH") == EstimatorKind::reach);
  CHECK(to_string(EstimatorKind::scope) == "SCOPE");
  CHECK(required_mode(EstimatorKind::reach) == SamplingMode::outcome_excluded);
  CHECK(required_mode(EstimatorKind::scope) == SamplingMode::standard);
  CHECK_THROWS_AS(parse_estimator_kind("bogus"), InvalidArgument);
}
