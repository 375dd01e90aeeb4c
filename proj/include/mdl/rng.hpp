#pragma once

#include <array>
#include <cstdint>

namespace mdl {

/// Philox4x32-10 counter-based block generator.
///
/// Every 128-bit output block is a pure function of (counter, key), so the
/// random stream of any trial can be regenerated without touching the
/// streams of other trials.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// SplitMix64 finalizer; used to derive independent master seeds per
/// experiment family (e.g. the two ensembles of a two-sample test).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Coin-flip stream for a single trial, keyed by (master_seed, trial).
///
/// One Philox block feeds 128 consecutive steps.
class StepStream {
 public:
  StepStream(std::uint64_t master_seed, std::uint64_t trial) noexcept;

  bool next_up() noexcept {
    if (bits_left_ == 0) refill();
    const bool up = (word_ & 1U) != 0;
    word_ >>= 1;
    --bits_left_;
    return up;
  }

  /// Hands the buffered coin flips (LSB first) to a caller that consumes
  /// them in bulk; refills first if the buffer is empty.
  std::uint64_t take_bits(unsigned& count) noexcept {
    if (bits_left_ == 0) refill();
    count = bits_left_;
    bits_left_ = 0;
    return word_;
  }

  /// Returns unconsumed flips from `take_bits` so the stream stays exact.
  void put_back(std::uint64_t word, unsigned count) noexcept {
    word_ = word;
    bits_left_ = count;
  }

  /// Raw 64-bit draw from the same stream (not interleaved with buffered bits).
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  void refill() noexcept;

  Philox4x32::Key key_{};
  std::uint64_t trial_ = 0;
  std::uint64_t block_ = 0;
  std::uint64_t word_ = 0;
  std::uint64_t spare_ = 0;
  bool has_spare_ = false;
  unsigned bits_left_ = 0;
};

}  // namespace mdl
