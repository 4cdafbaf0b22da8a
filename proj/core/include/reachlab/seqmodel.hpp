#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reachlab/errors.hpp"
#include "reachlab/rng.hpp"

namespace reachlab {

using TokenId = std::uint32_t;

/// Hazards at or above 1 - kDegenerateHazard leave no mass to renormalize.
inline constexpr double kDegenerateHazard = 1e-15;

/// Token universe plus the time/terminal semantics that decide where a
/// timeline ends.
struct Vocabulary {
  std::size_t size = 0;
  TokenId outcome = 0;
  std::vector<TokenId> terminal_set;  // sorted, unique; may contain `outcome`
  std::vector<double> time_map;       // elapsed time contributed by each token

  /// Every token advances the clock by 1 and nothing is terminal.
  static Vocabulary step_count(std::size_t size, TokenId outcome);

  bool is_terminal(TokenId token) const;
  double time_of(TokenId token) const { return time_map[token]; }

  /// Throws InvalidArgument if the vocabulary is inconsistent.
  void check() const;
};

/// When generation must stop. A position is generated only while the elapsed
/// time of the tokens before it is strictly below `time_limit` and fewer than
/// `max_steps` positions have been generated.
struct HorizonPolicy {
  std::optional<double> time_limit;
  std::size_t max_steps = 1;

  /// Step-count mode: unit token times, limit = max_steps = steps.
  static HorizonPolicy step_count(std::size_t steps);

  void check() const;
};

/// Anything that maps a token prefix to a next-token distribution.
/// Implementations are immutable and may be shared across threads.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual std::size_t vocab_size() const = 0;

  /// Writes P(next | prefix) into `out` (length vocab_size()). The prefix has
  /// already been validated by the caller.
  virtual void fill_next(std::span<const TokenId> prefix, std::span<double> out) const = 0;
};

/// Next-token distribution for `prefix`; throws InvalidArgument for token ids
/// outside the vocabulary.
std::vector<double> next_distribution(const SequenceModel& model,
                                      std::span<const TokenId> prefix);

/// Finite-state chain whose tokens are states; the next distribution depends
/// only on the most recent token (the initial state for an empty prefix).
class MarkovModel final : public SequenceModel {
 public:
  MarkovModel() = default;
  MarkovModel(std::size_t n_states, std::vector<double> transition, std::size_t initial_state,
              std::size_t outcome_state, std::size_t steps);

  std::size_t n_states() const { return n_states_; }
  std::span<const double> transition() const { return transition_; }
  std::span<const double> row(std::size_t state) const {
    return std::span<const double>(transition_).subspan(state * n_states_, n_states_);
  }
  double at(std::size_t from, std::size_t to) const { return transition_[from * n_states_ + to]; }
  std::size_t initial_state() const { return initial_state_; }
  std::size_t outcome_state() const { return outcome_state_; }
  std::size_t steps() const { return steps_; }

  Vocabulary vocabulary() const { return Vocabulary::step_count(n_states_, outcome()); }
  HorizonPolicy horizon() const { return HorizonPolicy::step_count(steps_); }
  TokenId outcome() const { return static_cast<TokenId>(outcome_state_); }

  std::size_t vocab_size() const override { return n_states_; }
  void fill_next(std::span<const TokenId> prefix, std::span<double> out) const override;

 private:
  std::size_t n_states_ = 0;
  std::vector<double> transition_;  // row-major n_states x n_states
  std::size_t initial_state_ = 0;
  std::size_t outcome_state_ = 0;
  std::size_t steps_ = 0;
};

/// Every shape, range, row-sum (1e-12) and index problem in the chain. Empty
/// means the model is valid.
std::vector<Violation> validate(const MarkovModel& model);

/// Throws ValidationError when validate() reports anything.
void require_valid(const MarkovModel& model);

/// The distribution with the outcome token removed and the rest renormalized
/// by 1 - dist[outcome]. Throws DegenerateHazard when dist[outcome] >= 1 - 1e-15.
std::vector<double> restricted_distribution(std::span<const double> dist, TokenId outcome);

enum class SamplingMode { standard, outcome_excluded };

std::string_view to_string(SamplingMode mode);

/// One sampled timeline with its per-position outcome hazards.
///
/// hazards[t] is the unrestricted P(X_t = O | tokens[0..t)) at every generated
/// position, in both modes. end_index is the exclusive end of the generated
/// positions and always equals hazards.size(); when the outcome is hit,
/// end_index = hit_index + 1. A degenerate outcome-excluded trajectory stops
/// at the position whose hazard is 1 without drawing a token there.
struct Trajectory {
  std::vector<TokenId> tokens;
  std::vector<double> hazards;
  std::optional<std::size_t> hit_index;
  std::size_t end_index = 0;
  SamplingMode mode = SamplingMode::standard;
  double elapsed_time = 0.0;
  bool degenerate = false;

  bool operator==(const Trajectory&) const = default;
};

/// Index of the token selected by inverse-CDF lookup of `u` in [0,1).
std::size_t draw_token(std::span<const double> dist, double u);

/// Generates one timeline. Stops at the first of: time limit reached,
/// max_steps reached, a terminal token, or (standard mode) the outcome token.
/// Consumes exactly one uniform per drawn token.
Trajectory sample_trajectory(const SequenceModel& model, const Vocabulary& vocab,
                             const HorizonPolicy& horizon, SamplingMode mode, Philox4x64& rng);

inline Trajectory sample_trajectory(const SequenceModel& model, const Vocabulary& vocab,
                                    const HorizonPolicy& horizon, SamplingMode mode,
                                    const RandomSource& source, std::uint64_t index) {
  auto rng = source.stream(index);
  return sample_trajectory(model, vocab, horizon, mode, rng);
}

inline Trajectory sample_trajectory(const MarkovModel& model, SamplingMode mode,
                                    const RandomSource& source, std::uint64_t index) {
  return sample_trajectory(model, model.vocabulary(), model.horizon(), mode, source, index);
}

}  // namespace reachlab
