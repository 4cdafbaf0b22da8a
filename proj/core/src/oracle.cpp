#include "reachlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reachlab {

// ---------------------------------------------------------------------------
// ValueDistribution

ValueDistribution ValueDistribution::from_atoms(std::vector<ValueAtom> atoms,
                                                double merge_tolerance) {
  std::erase_if(atoms, [](const ValueAtom& a) { return !(a.probability > 0.0); });
  std::sort(atoms.begin(), atoms.end(),
            [](const ValueAtom& a, const ValueAtom& b) { return a.value < b.value; });
  ValueDistribution out;
  std::size_t i = 0;
  while (i < atoms.size()) {
    CompensatedSum mass, weighted;
    std::size_t j = i;
    do {
      mass.add(atoms[j].probability);
      weighted.add(atoms[j].probability * atoms[j].value);
      ++j;
    } while (j < atoms.size() && atoms[j].value - atoms[j - 1].value <= merge_tolerance);
    const double m = mass.value();
    const double v = j - i == 1 ? atoms[i].value : weighted.value() / m;
    out.atoms_.push_back({v, m});
    i = j;
  }
  return out;
}

double ValueDistribution::total_probability() const {
  return expectation([](double) { return 1.0; });
}

double ValueDistribution::mean() const {
  return expectation([](double x) { return x; });
}

double ValueDistribution::second_moment() const {
  return expectation([](double x) { return x * x; });
}

double ValueDistribution::variance() const {
  const double mu = mean();
  return expectation([mu](double x) { return (x - mu) * (x - mu); });
}

std::string ValueDistribution::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "value,probability\n";
  for (const auto& a : atoms_) os << a.value << ',' << a.probability << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Dynamic programming over (state, steps left)

double exact_outcome_probability(const MarkovModel& model) {
  require_valid(model);
  const std::size_t n = model.n_states();
  const std::size_t outcome = model.outcome_state();
  std::vector<double> reach(n, 0.0), next(n);
  for (std::size_t h = 0; h < model.steps(); ++h) {
    for (std::size_t s = 0; s < n; ++s) {
      CompensatedSum sum;
      sum.add(model.at(s, outcome));
      for (std::size_t t = 0; t < n; ++t)
        if (t != outcome) sum.add(model.at(s, t) * reach[t]);
      next[s] = sum.value();
    }
    reach.swap(next);
  }
  return reach[model.initial_state()];
}

double ExactMoments::variance(EstimatorKind kind) const {
  switch (kind) {
    case EstimatorKind::mc: return var_mc;
    case EstimatorKind::scope: return var_scope;
    case EstimatorKind::reach: return var_reach;
  }
  return 0.0;
}

ExactMoments exact_moments(const MarkovModel& model) {
  require_valid(model);
  const std::size_t n = model.n_states();
  const std::size_t outcome = model.outcome_state();
  // first: E[S]; second: E[S^2]; survival2: E_hat[prod (1 - h)^2] over backbones.
  std::vector<double> first(n, 0.0), second(n, 0.0), survival2(n, 1.0);
  std::vector<double> first_next(n), second_next(n), survival2_next(n);
  for (std::size_t h = 0; h < model.steps(); ++h) {
    for (std::size_t s = 0; s < n; ++s) {
      const double a = model.at(s, outcome);
      CompensatedSum m1, m2, q;
      m1.add(a);
      m2.add(a * a);
      for (std::size_t t = 0; t < n; ++t) {
        if (t == outcome) continue;
        const double w = model.at(s, t);
        if (w == 0.0) continue;
        m1.add(w * first[t]);
        m2.add(w * (2.0 * a * first[t] + second[t]));
        // (1-a)^2 * T_hat[s,t] with T_hat = T / (1 - a).
        q.add((1.0 - a) * w * survival2[t]);
      }
      first_next[s] = m1.value();
      second_next[s] = m2.value();
      survival2_next[s] = q.value();
    }
    first.swap(first_next);
    second.swap(second_next);
    survival2.swap(survival2_next);
  }
  const std::size_t s0 = model.initial_state();
  ExactMoments out;
  out.probability = first[s0];
  const double p = out.probability;
  out.scope_second_moment = second[s0];
  // r = 1 - Pi with E[Pi] = 1 - p, so E[r^2] = 1 - 2(1 - p) + E[Pi^2].
  out.reach_second_moment = 2.0 * p - 1.0 + survival2[s0];
  out.var_mc = p * (1.0 - p);
  out.var_scope = out.scope_second_moment - p * p;
  out.var_reach = out.reach_second_moment - p * p;
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

namespace {

class Enumerator {
 public:
  Enumerator(const SequenceModel& model, const Vocabulary& vocab, const HorizonPolicy& horizon,
             EstimatorKind kind, std::size_t max_leaves)
      : model_(model),
        vocab_(vocab),
        horizon_(horizon),
        kind_(kind),
        max_leaves_(max_leaves) {
    traj_.mode = required_mode(kind);
  }

  ValueDistribution run() {
    visit(1.0, 0.0);
    return ValueDistribution::from_atoms(std::move(atoms_));
  }

 private:
  void visit(double path_probability, double elapsed) {
    const bool can_step = traj_.hazards.size() < horizon_.max_steps &&
                          (!horizon_.time_limit || elapsed < *horizon_.time_limit);
    if (!can_step) {
      leaf(path_probability);
      return;
    }
    std::vector<double> dist(vocab_.size);
    model_.fill_next(traj_.tokens, dist);
    const TokenId outcome = vocab_.outcome;
    const double hazard = dist[outcome];
    traj_.hazards.push_back(hazard);

    if (traj_.mode == SamplingMode::outcome_excluded) {
      if (hazard >= 1.0 - kDegenerateHazard) {
        traj_.degenerate = true;
        leaf(path_probability);
        traj_.degenerate = false;
      } else {
        const double keep = 1.0 - hazard;
        for (TokenId v = 0; v < dist.size(); ++v) {
          if (v == outcome || dist[v] <= 0.0) continue;
          step(v, path_probability * (dist[v] / keep), elapsed);
        }
      }
    } else {
      for (TokenId v = 0; v < dist.size(); ++v) {
        if (dist[v] <= 0.0) continue;
        if (v == outcome) {
          traj_.tokens.push_back(v);
          traj_.hit_index = traj_.tokens.size() - 1;
          leaf(path_probability * dist[v]);
          traj_.hit_index.reset();
          traj_.tokens.pop_back();
        } else {
          step(v, path_probability * dist[v], elapsed);
        }
      }
    }
    traj_.hazards.pop_back();
  }

  void step(TokenId token, double path_probability, double elapsed) {
    traj_.tokens.push_back(token);
    if (vocab_.is_terminal(token))
      leaf(path_probability);
    else
      visit(path_probability, elapsed + vocab_.time_of(token));
    traj_.tokens.pop_back();
  }

  void leaf(double path_probability) {
    if (++leaves_ > max_leaves_)
      throw InstanceTooLarge("enumeration exceeds the budget of " + std::to_string(max_leaves_) +
                             " timelines");
    traj_.end_index = traj_.hazards.size();
    atoms_.push_back({sub_value(kind_, traj_), path_probability});
  }

  const SequenceModel& model_;
  const Vocabulary& vocab_;
  const HorizonPolicy& horizon_;
  EstimatorKind kind_;
  std::size_t max_leaves_;
  std::size_t leaves_ = 0;
  Trajectory traj_;
  std::vector<ValueAtom> atoms_;
};

}  // namespace

ValueDistribution enumerate_sub_distribution(const SequenceModel& model, const Vocabulary& vocab,
                                             const HorizonPolicy& horizon, EstimatorKind kind,
                                             std::size_t max_leaves) {
  vocab.check();
  horizon.check();
  if (vocab.size != model.vocab_size())
    throw InvalidArgument("vocabulary size does not match the model");
  return Enumerator(model, vocab, horizon, kind, max_leaves).run();
}

ValueDistribution enumerate_sub_distribution(const MarkovModel& model, EstimatorKind kind,
                                             std::size_t max_leaves) {
  require_valid(model);
  return enumerate_sub_distribution(model, model.vocabulary(), model.horizon(), kind, max_leaves);
}

BijectionCheck exact_bijection_check(const SequenceModel& model, const Vocabulary& vocab,
                                     const HorizonPolicy& horizon, std::size_t max_leaves) {
  return {enumerate_sub_distribution(model, vocab, horizon, EstimatorKind::mc, max_leaves).mean(),
          enumerate_sub_distribution(model, vocab, horizon, EstimatorKind::reach, max_leaves)
              .mean()};
}

BijectionCheck exact_bijection_check(const MarkovModel& model, std::size_t max_leaves) {
  require_valid(model);
  return exact_bijection_check(model, model.vocabulary(), model.horizon(), max_leaves);
}

// ---------------------------------------------------------------------------
// Coin-flip counterexample

CoinFlipModel::CoinFlipModel(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("counterexample p must lie in [0, 1]");
}

Vocabulary CoinFlipModel::vocabulary() const {
  Vocabulary v;
  v.size = 4;
  v.outcome = H;
  v.terminal_set = {A};
  // Only coin tokens advance the clock; the limit of 3 allows exactly three coins.
  v.time_map = {0.0, 0.0, 1.0, 1.0};
  return v;
}

HorizonPolicy CoinFlipModel::horizon() const { return HorizonPolicy{3.0, 4}; }

void CoinFlipModel::fill_next(std::span<const TokenId> prefix, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (prefix.empty()) {
    out[A] = p_;
    out[B] = 1.0 - p_;
  } else if (prefix.front() == A) {
    out[A] = 1.0;
  } else {
    out[H] = 0.5;
    out[T] = 0.5;
  }
}

CoinFlipModel counterexample_model(double p) { return CoinFlipModel(p); }

MarkovModel counterexample_chain(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("counterexample p must lie in [0, 1]");
  enum { start, a, b, tail1, tail2, spent, heads, count };
  std::vector<double> t(count * count, 0.0);
  auto set = [&](int from, int to, double w) { t[from * count + to] = w; };
  set(start, a, p);
  set(start, b, 1.0 - p);
  set(a, a, 1.0);
  set(b, heads, 0.5);
  set(b, tail1, 0.5);
  set(tail1, heads, 0.5);
  set(tail1, tail2, 0.5);
  set(tail2, heads, 0.5);
  set(tail2, spent, 0.5);
  set(spent, spent, 1.0);
  set(heads, heads, 1.0);
  return MarkovModel(count, std::move(t), start, heads, 4);
}

// ---------------------------------------------------------------------------
// Dispersion of Monte Carlo estimates

namespace {

std::vector<double> binomial_pmf(std::size_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    const double log_term = log_n_fact - std::lgamma(kk + 1.0) -
                            std::lgamma(static_cast<double>(n - k) + 1.0) + kk * log_p +
                            static_cast<double>(n - k) * log_q;
    pmf[k] = std::exp(log_term);
  }
  return pmf;
}

}  // namespace

double dispersion_probability(std::size_t n_samples, double p_base, double p_elevated) {
  if (n_samples == 0) throw InvalidArgument("dispersion needs n_samples >= 1");
  if (!(p_base >= 0.0 && p_base <= 1.0) || !(p_elevated >= 0.0 && p_elevated <= 1.0))
    throw InvalidArgument("dispersion probabilities must lie in [0, 1]");
  const auto base = binomial_pmf(n_samples, p_base);
  const auto elevated = binomial_pmf(n_samples, p_elevated);
  // strictly_above[k] = P(J > k) for the elevated patient.
  std::vector<double> strictly_above(n_samples + 1, 0.0);
  CompensatedSum tail;
  for (std::size_t k = n_samples; k-- > 0;) {
    tail.add(elevated[k + 1]);
    strictly_above[k] = tail.value();
  }
  CompensatedSum total;
  for (std::size_t k = 0; k <= n_samples; ++k) total.add(base[k] * strictly_above[k]);
  return total.value();
}

}  // namespace reachlab
