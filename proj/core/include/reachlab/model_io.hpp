#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reachlab/experiments.hpp"
#include "reachlab/seqmodel.hpp"

namespace reachlab {

/// Parses a Markov model document:
///   {"n_states": N, "transition": [...N*N row-major, or N rows of N...],
///    "initial_state": i, "outcome_state": o,
///    "horizon": {"max_steps": H, "time_limit": H}}
/// `time_limit` is optional and must equal max_steps when present. Syntax and
/// structural problems raise ValidationError; so does any validate() violation.
MarkovModel parse_markov_model(std::string_view json_text);
std::string markov_model_json(const MarkovModel& model);

/// Every ChainSpec field is optional; absent fields keep their value from
/// `base`. `layout` is "random" or "uniform"; `target_probability` may be null
/// (which clears it). Unknown fields are rejected.
ChainSpec parse_chain_spec(std::string_view json_text, ChainSpec base = {});
std::string chain_spec_json(const ChainSpec& spec);

/// One JSON object per line: tokens, hazards, hit_index (null if none),
/// end_index, mode, seed, index.
std::string trajectory_json_line(const Trajectory& traj, std::uint64_t seed, std::uint64_t index);

/// Whole-file helpers; failures raise IoError.
std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Raw little-endian IEEE-754 doubles, no header.
std::string encode_f64_le(std::span<const double> values);
std::vector<double> decode_f64_le(std::string_view bytes);
void write_f64_le(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64_le(const std::filesystem::path& path);

}  // namespace reachlab
