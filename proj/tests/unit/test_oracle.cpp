#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/generators.hpp"
#include "reachlab/errors.hpp"
#include "reachlab/oracle.hpp"

using namespace reachlab;

TEST_CASE("DP outcome probability examples") {
  const MarkovModel unreachable(3, {0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0}, 0, 2, 10);
  CHECK(exact_outcome_probability(unreachable) == 0.0);
  const double h = 0.07;
  const MarkovModel geometric(2, {1.0 - h, h, 0.0, 1.0}, 0, 1, 9);
  CHECK(exact_outcome_probability(geometric) ==
        doctest::Approx(1.0 - std::pow(1.0 - h, 9)).epsilon(1e-14));
  for (double p : {0.0, 0.25, 0.5, 0.9, 1.0})
    CHECK(exact_outcome_probability(counterexample_chain(p)) ==
          doctest::Approx(7.0 / 8.0 * (1.0 - p)).epsilon(1e-14));
  const MarkovModel invalid(2, {0.5, 0.4, 0.0, 1.0}, 0, 1, 2);
  CHECK_THROWS_AS(exact_outcome_probability(invalid), ValidationError);
}

// Frozen from an independent numpy implementation of the moment recursions.
TEST_CASE("exact moments match frozen independent values") {
  const MarkovModel a(3, {0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.0, 0.0, 1.0}, 0, 2, 4);
  const auto ma = exact_moments(a);
  CHECK(ma.probability == doctest::Approx(0.5004).epsilon(1e-14));
  CHECK(ma.var_mc == doctest::Approx(0.24999984).epsilon(1e-13));
  CHECK(ma.var_scope == doctest::Approx(0.03791984000000004).epsilon(1e-12));
  CHECK(ma.var_reach == doctest::Approx(0.00443952000000003).epsilon(1e-10));

  const MarkovModel b(3, {0.2, 0.5, 0.3, 0.6, 0.0, 0.4, 0.0, 0.0, 1.0}, 1, 2, 6);
  const auto mb = exact_moments(b);
  CHECK(mb.probability == doctest::Approx(0.923368).epsilon(1e-14));
  CHECK(mb.var_mc == doctest::Approx(0.070759536576).epsilon(1e-12));
  CHECK(mb.var_scope == doctest::Approx(0.338827536576).epsilon(1e-12));
  CHECK(std::abs(mb.var_reach - 2.7509760000099526e-05) < 1e-15);
}

TEST_CASE("enumeration agrees with the DP and the moment recursion on random models") {
  std::mt19937_64 gen(314159);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = testgen::random_markov(gen);
    const double p = exact_outcome_probability(m);
    const auto moments = exact_moments(m);
    const auto mc = enumerate_sub_distribution(m, EstimatorKind::mc);
    const auto sc = enumerate_sub_distribution(m, EstimatorKind::scope);
    const auto re = enumerate_sub_distribution(m, EstimatorKind::reach);
    for (const auto* d : {&mc, &sc, &re}) {
      CHECK(std::abs(d->total_probability() - 1.0) < 1e-10);
      CHECK(std::abs(d->mean() - p) < 1e-10);
    }
    CHECK(std::abs(mc.variance() - p * (1.0 - p)) < 1e-10);
    CHECK(std::abs(sc.variance() - moments.var_scope) < 1e-10);
    CHECK(std::abs(re.variance() - moments.var_reach) < 1e-10);
    CHECK(re.variance() <= mc.variance() + 1e-12);
    CHECK(re.variance() <= sc.variance() + 1e-12);
    const double gap = re.expectation([](double r) { return r * (1.0 - r); });
    CHECK(std::abs((mc.variance() - re.variance()) - gap) < 1e-10);
    const double scope_gap = sc.expectation([](double s) { return s * (s - 1.0); });
    CHECK(std::abs((sc.variance() - mc.variance()) - scope_gap) < 1e-10);
  }
}

TEST_CASE("coin-flip counterexample closed forms") {
  for (double p : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    const auto cm = counterexample_model(p);
    const auto mc = enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::mc);
    const auto sc =
        enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), EstimatorKind::scope);
    CHECK(std::abs(mc.second_moment() - 7.0 / 8.0 * (1.0 - p)) < 1e-12);
    CHECK(std::abs(sc.second_moment() - 15.0 / 16.0 * (1.0 - p)) < 1e-12);
    CHECK(std::abs((sc.variance() - mc.variance()) - (1.0 - p) / 16.0) < 1e-12);
    if (p < 1.0) {
      // MC atoms {1 w.p. 7/8(1-p), 0 w.p. p + 1/8(1-p)}
      REQUIRE(mc.atoms().size() == 2);
      CHECK(mc.atoms()[0].value == 0.0);
      CHECK(mc.atoms()[0].probability == doctest::Approx(p + (1.0 - p) / 8.0));
      CHECK(mc.atoms()[1].value == 1.0);
      CHECK(mc.atoms()[1].probability == doctest::Approx(7.0 / 8.0 * (1.0 - p)));
    }
  }
  CHECK(exact_outcome_probability(counterexample_chain(1.0)) == 0.0);
  CHECK_THROWS_AS(counterexample_model(-0.1), InvalidArgument);
  CHECK_THROWS_AS(counterexample_model(1.1), InvalidArgument);
}

TEST_CASE("SCOPE is worse than MC as the outcome becomes rare") {
  for (double p : {0.9, 0.99, 0.999}) {
    const auto m = exact_moments(counterexample_chain(p));
    CHECK(m.var_scope > m.var_mc);
    CHECK(m.probability < 0.125);
  }
}

TEST_CASE("the coin-flip chain and sequence model agree") {
  for (double p : {0.1, 0.6}) {
    const auto cm = counterexample_model(p);
    const auto chain = counterexample_chain(p);
    for (auto kind : kAllEstimators) {
      const auto a = enumerate_sub_distribution(cm, cm.vocabulary(), cm.horizon(), kind);
      const auto b = enumerate_sub_distribution(chain, kind);
      CHECK(a.mean() == doctest::Approx(b.mean()).epsilon(1e-13));
      CHECK(a.variance() == doctest::Approx(b.variance()).epsilon(1e-13));
    }
  }
}

TEST_CASE("dispersion probability") {
  CHECK(std::abs(dispersion_probability(100, 1e-4, 1e-3) - 0.0943) <= 1e-4);
  CHECK(dispersion_probability(100, 1e-4, 1e-3) ==
        doctest::Approx(0.0943064029177178).epsilon(1e-12));
  CHECK(dispersion_probability(50, 0.0, 0.0) == 0.0);
  CHECK(dispersion_probability(1, 0.0, 1.0) == 1.0);
  CHECK_THROWS_AS(dispersion_probability(0, 0.1, 0.2), InvalidArgument);
  CHECK_THROWS_AS(dispersion_probability(10, -0.1, 0.2), InvalidArgument);

  // Direct double sum for a small case.
  auto pmf = [](int n, int k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) *
           std::pow(p, k) * std::pow(1.0 - p, n - k);
  };
  double direct = 0.0;
  for (int k = 0; k <= 7; ++k)
    for (int j = k + 1; j <= 7; ++j) direct += pmf(7, k, 0.2) * pmf(7, j, 0.35);
  CHECK(dispersion_probability(7, 0.2, 0.35) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("dispersion is nondecreasing in the elevated risk") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n_dist(1, 200);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(gen);
    const double base = u(gen) * 0.5;
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    CHECK(dispersion_probability(n, base, a) <= dispersion_probability(n, base, b) + 1e-12);
  }
}

TEST_CASE("outcome probability is nondecreasing in the horizon") {
  std::mt19937_64 gen(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testgen::random_markov(gen, 6, 1);
    std::vector<double> row(m.transition().begin(), m.transition().end());
    double prev = 0.0;
    for (std::size_t h = 1; h <= 12; ++h) {
      const MarkovModel mh(m.n_states(), row, m.initial_state(), m.outcome_state(), h);
      const double p = exact_outcome_probability(mh);
      CHECK(p >= prev - 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("bijection check") {
  std::mt19937_64 gen(271828);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = testgen::random_markov(gen);
    const auto b = exact_bijection_check(m);
    CHECK(std::abs(b.p_a - b.p_b) < 1e-10);
  }
  const MarkovModel none(2, {1.0, 0.0, 0.0, 1.0}, 0, 1, 5);
  const auto z = exact_bijection_check(none);
  CHECK(z.p_a == 0.0);
  CHECK(z.p_b == 0.0);
  const auto cm = counterexample_model(0.4);
  const auto c = exact_bijection_check(cm, cm.vocabulary(), cm.horizon());
  CHECK(c.p_a == doctest::Approx(7.0 / 8.0 * 0.6).epsilon(1e-14));
  CHECK(c.p_b == doctest::Approx(7.0 / 8.0 * 0.6).epsilon(1e-14));
}

TEST_CASE("enumeration guard") {
  std::vector<double> t(10 * 10, 0.0);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) t[i * 10 + j] = 0.1;
    t[i * 10 + 9] = 0.1;
  }
  t[99] = 1.0;
  const MarkovModel wide(10, t, 0, 9, 12);
  CHECK_THROWS_AS(enumerate_sub_distribution(wide, EstimatorKind::mc), InstanceTooLarge);
  CHECK_THROWS_AS(enumerate_sub_distribution(wide, EstimatorKind::mc, 1000), InstanceTooLarge);
}

TEST_CASE("value distributions merge near-duplicates") {
  const auto d = ValueDistribution::from_atoms(
      {{0.5, 0.25}, {0.5 + 1e-14, 0.25}, {1.0, 0.5}, {2.0, 0.0}});
  REQUIRE(d.atoms().size() == 2);
  CHECK(d.atoms()[0].probability == 0.5);
  CHECK(d.mean() == doctest::Approx(0.75));
  CHECK(d.variance() == doctest::Approx(0.0625));
  CHECK(d.to_csv().rfind("value,probability\n", 0) == 0);
}
