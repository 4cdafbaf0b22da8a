#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace reachlab {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit key is (seed, stream); the 256-bit counter is the block index.
/// Every (seed, stream) pair is an independent sequence, so a trajectory's
/// draws depend only on its own index and never on how work is scheduled.
/// Satisfies std::uniform_random_bit_generator.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  Philox4x64() : Philox4x64(0, 0) {}
  Philox4x64(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 4) {
      buffer_ = block(counter_, key_);
      increment(counter_);
      lane_ = 0;
    }
    return buffer_[lane_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Skips `blocks` whole blocks (4 outputs each) ahead of the current block boundary.
  void discard_blocks(std::uint64_t blocks);

  /// The raw bijection: ten Philox rounds of `counter` under `key`.
  static Block block(Block counter, Key key);

 private:
  static void increment(Block& counter) {
    for (auto& word : counter)
      if (++word != 0) break;
  }

  Key key_;
  Block counter_{};
  Block buffer_{};
  int lane_ = 4;
};

/// SplitMix64 finalizer; used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// A splittable seed. `stream(i)` hands out the i-th independent generator;
/// `child(tag)` derives an unrelated RandomSource for a sub-task.
class RandomSource {
 public:
  constexpr explicit RandomSource(std::uint64_t seed = 0) : seed_(seed) {}

  constexpr std::uint64_t seed() const { return seed_; }

  Philox4x64 stream(std::uint64_t index) const { return Philox4x64(seed_, index); }

  constexpr RandomSource child(std::uint64_t tag) const {
    return RandomSource(mix64(seed_ ^ mix64(tag + 0x5851F42D4C957F2DULL)));
  }

  /// Child keyed by a label; FNV-1a over the bytes, then mixed.
  constexpr RandomSource child(std::string_view label) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return child(h);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace reachlab
