#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "reachlab/estimators.hpp"
#include "reachlab/seqmodel.hpp"
#include "reachlab/summation.hpp"

namespace reachlab {

struct ValueAtom {
  double value = 0.0;
  double probability = 0.0;
};

/// A finitely supported distribution of sub-estimator values.
class ValueDistribution {
 public:
  ValueDistribution() = default;

  /// Sorts by value and merges neighbours closer than `merge_tolerance`. A merged
  /// atom takes the probability-weighted mean value, so the mean is preserved.
  static ValueDistribution from_atoms(std::vector<ValueAtom> atoms,
                                      double merge_tolerance = 1e-12);

  std::span<const ValueAtom> atoms() const { return atoms_; }
  double total_probability() const;
  double mean() const;
  double second_moment() const;
  /// Central second moment, sum p (x - mean)^2.
  double variance() const;

  template <typename Fn>
  double expectation(Fn&& fn) const;

  /// "value,probability" header plus one line per atom, 17 significant digits.
  std::string to_csv() const;

 private:
  std::vector<ValueAtom> atoms_;
};

/// P(outcome within the chain's step budget) via
/// p_h(s) = T[s,O] + sum_{s' != O} T[s,s'] p_{h-1}(s'), p_0 = 0.
double exact_outcome_probability(const MarkovModel& model);

/// Exact single-sample variances of the three sub-estimators for a Markov chain,
/// from first/second-moment recursions over (state, steps left).
struct ExactMoments {
  double probability = 0.0;
  double scope_second_moment = 0.0;
  double reach_second_moment = 0.0;
  double var_mc = 0.0;
  double var_scope = 0.0;
  double var_reach = 0.0;

  double variance(EstimatorKind kind) const;
};

ExactMoments exact_moments(const MarkovModel& model);

inline constexpr std::size_t kDefaultLeafBudget = 10'000'000;

/// Walks every timeline in the support of P (or of the outcome-excluded P for
/// REACH) and collects (sub-estimate, path probability). Throws
/// InstanceTooLarge once more than `max_leaves` timelines have been visited.
ValueDistribution enumerate_sub_distribution(const SequenceModel& model, const Vocabulary& vocab,
                                             const HorizonPolicy& horizon, EstimatorKind kind,
                                             std::size_t max_leaves = kDefaultLeafBudget);

ValueDistribution enumerate_sub_distribution(const MarkovModel& model, EstimatorKind kind,
                                             std::size_t max_leaves = kDefaultLeafBudget);

/// The coin-flip construction showing SCOPE can be worse than MC at any
/// outcome probability. Tokens: A (terminal, w.p. p), B, then fair H/T coins
/// until the first H (the outcome) or three coins.
class CoinFlipModel final : public SequenceModel {
 public:
  enum Token : TokenId { A = 0, B = 1, H = 2, T = 3 };

  explicit CoinFlipModel(double p);

  double p() const { return p_; }
  Vocabulary vocabulary() const;
  HorizonPolicy horizon() const;

  std::size_t vocab_size() const override { return 4; }
  void fill_next(std::span<const TokenId> prefix, std::span<double> out) const override;

 private:
  double p_;
};

/// Throws InvalidArgument unless p is in [0, 1].
CoinFlipModel counterexample_model(double p);

/// The same construction as a 7-state Markov chain with a 4-step budget.
MarkovModel counterexample_chain(double p);

/// Probability that Binomial(n, p_elevated) strictly exceeds an independent
/// Binomial(n, p_base), i.e. that MC ranks the riskier patient strictly higher.
double dispersion_probability(std::size_t n_samples, double p_base, double p_elevated);

struct BijectionCheck {
  double p_a = 0.0;  // P(outcome appears) under standard sampling
  double p_b = 0.0;  // P(some Bernoulli flip succeeds) over outcome-free backbones
};

BijectionCheck exact_bijection_check(const SequenceModel& model, const Vocabulary& vocab,
                                     const HorizonPolicy& horizon,
                                     std::size_t max_leaves = kDefaultLeafBudget);

BijectionCheck exact_bijection_check(const MarkovModel& model,
                                     std::size_t max_leaves = kDefaultLeafBudget);

template <typename Fn>
double ValueDistribution::expectation(Fn&& fn) const {
  CompensatedSum sum;
  for (const auto& a : atoms_) sum.add(a.probability * fn(a.value));
  return sum.value();
}

}  // namespace reachlab
