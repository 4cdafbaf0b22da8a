#include "reachlab/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "reachlab/summation.hpp"

namespace reachlab {

Vocabulary Vocabulary::step_count(std::size_t size, TokenId outcome) {
  Vocabulary v;
  v.size = size;
  v.outcome = outcome;
  v.time_map.assign(size, 1.0);
  return v;
}

bool Vocabulary::is_terminal(TokenId token) const {
  return std::find(terminal_set.begin(), terminal_set.end(), token) != terminal_set.end();
}

void Vocabulary::check() const {
  if (size == 0) throw InvalidArgument("vocabulary is empty");
  if (outcome >= size) throw InvalidArgument("outcome token is outside the vocabulary");
  if (time_map.size() != size)
    throw InvalidArgument("time map has " + std::to_string(time_map.size()) +
                          " entries, expected " + std::to_string(size));
  for (std::size_t i = 0; i < size; ++i)
    if (!(time_map[i] >= 0.0) || !std::isfinite(time_map[i]))
      throw InvalidArgument("time of token " + std::to_string(i) + " is not a finite value >= 0");
  for (TokenId t : terminal_set)
    if (t >= size) throw InvalidArgument("terminal token " + std::to_string(t) + " out of range");
}

HorizonPolicy HorizonPolicy::step_count(std::size_t steps) {
  return HorizonPolicy{static_cast<double>(steps), steps};
}

void HorizonPolicy::check() const {
  if (max_steps == 0) throw InvalidArgument("max_steps must be positive");
  if (time_limit && (!(*time_limit >= 0.0) || std::isnan(*time_limit)))
    throw InvalidArgument("time_limit must be >= 0");
}

std::vector<double> next_distribution(const SequenceModel& model,
                                      std::span<const TokenId> prefix) {
  const std::size_t v = model.vocab_size();
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (prefix[i] >= v)
      throw InvalidArgument("prefix token " + std::to_string(prefix[i]) + " at position " +
                            std::to_string(i) + " is outside the vocabulary of size " +
                            std::to_string(v));
  std::vector<double> out(v);
  model.fill_next(prefix, out);
  return out;
}

MarkovModel::MarkovModel(std::size_t n_states, std::vector<double> transition,
                         std::size_t initial_state, std::size_t outcome_state, std::size_t steps)
    : n_states_(n_states),
      transition_(std::move(transition)),
      initial_state_(initial_state),
      outcome_state_(outcome_state),
      steps_(steps) {}

void MarkovModel::fill_next(std::span<const TokenId> prefix, std::span<double> out) const {
  const std::size_t state = prefix.empty() ? initial_state_ : prefix.back();
  const auto r = row(state);
  std::copy(r.begin(), r.end(), out.begin());
}

std::vector<Violation> validate(const MarkovModel& model) {
  std::vector<Violation> out;
  const std::size_t n = model.n_states();
  if (n == 0) {
    out.push_back({Violation::Kind::shape, -1, -1, "n_states must be positive"});
    return out;
  }
  if (model.transition().size() != n * n) {
    std::ostringstream os;
    os << "transition has " << model.transition().size() << " entries, expected " << n * n;
    out.push_back({Violation::Kind::shape, -1, -1, os.str()});
    return out;
  }
  if (model.initial_state() >= n)
    out.push_back({Violation::Kind::index, -1, -1,
                   "initial_state " + std::to_string(model.initial_state()) + " out of range"});
  if (model.outcome_state() >= n)
    out.push_back({Violation::Kind::index, -1, -1,
                   "outcome_state " + std::to_string(model.outcome_state()) + " out of range"});
  if (model.steps() == 0)
    out.push_back({Violation::Kind::index, -1, -1, "horizon max_steps must be positive"});

  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = model.at(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "row " << i << ", column " << j << ": entry " << p << " outside [0, 1]";
        out.push_back({Violation::Kind::range, static_cast<int>(i), static_cast<int>(j), os.str()});
      }
      sum += p;
    }
    if (!(std::abs(sum - 1.0) <= 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " sums to " << sum << ", expected 1 within 1e-12";
      out.push_back({Violation::Kind::row_sum, static_cast<int>(i), -1, os.str()});
    }
  }
  return out;
}

void require_valid(const MarkovModel& model) {
  auto violations = validate(model);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<double> restricted_distribution(std::span<const double> dist, TokenId outcome) {
  if (outcome >= dist.size()) throw InvalidArgument("outcome token outside distribution");
  const double hazard = dist[outcome];
  if (hazard >= 1.0 - kDegenerateHazard)
    throw DegenerateHazard("outcome probability is 1; the outcome-excluded distribution is undefined");
  CompensatedSum rest;
  for (std::size_t v = 0; v < dist.size(); ++v)
    if (v != outcome) rest.add(dist[v]);
  const double keep = rest.value() > 0.0 ? rest.value() : 1.0 - hazard;
  std::vector<double> out(dist.size());
  for (std::size_t v = 0; v < dist.size(); ++v) out[v] = v == outcome ? 0.0 : dist[v] / keep;
  return out;
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::standard ? "standard" : "outcome_excluded";
}

std::size_t draw_token(std::span<const double> dist, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cumulative += dist[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

Trajectory sample_trajectory(const SequenceModel& model, const Vocabulary& vocab,
                             const HorizonPolicy& horizon, SamplingMode mode, Philox4x64& rng) {
  if (vocab.size != model.vocab_size())
    throw InvalidArgument("vocabulary size does not match the model");

  const TokenId outcome = vocab.outcome;
  std::vector<double> dist(vocab.size);
  std::vector<double> restricted(vocab.size);

  Trajectory traj;
  traj.mode = mode;
  double elapsed = 0.0;
  while (traj.hazards.size() < horizon.max_steps &&
         (!horizon.time_limit || elapsed < *horizon.time_limit)) {
    model.fill_next(traj.tokens, dist);
    const double hazard = dist[outcome];
    traj.hazards.push_back(hazard);

    TokenId token;
    if (mode == SamplingMode::outcome_excluded) {
      if (hazard >= 1.0 - kDegenerateHazard) {
        traj.degenerate = true;
        break;
      }
      const double keep = 1.0 - hazard;
      for (std::size_t v = 0; v < dist.size(); ++v)
        restricted[v] = v == outcome ? 0.0 : dist[v] / keep;
      token = static_cast<TokenId>(draw_token(restricted, rng.uniform()));
    } else {
      token = static_cast<TokenId>(draw_token(dist, rng.uniform()));
    }

    traj.tokens.push_back(token);
    elapsed += vocab.time_of(token);
    if (token == outcome && mode == SamplingMode::standard) {
      traj.hit_index = traj.tokens.size() - 1;
      break;
    }
    if (vocab.is_terminal(token)) break;
  }
  traj.end_index = traj.hazards.size();
  traj.elapsed_time = elapsed;
  return traj;
}

}  // namespace reachlab
