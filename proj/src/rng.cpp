#include "mdl/rng.hpp"

namespace mdl {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53U;
constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

StepStream::StepStream(std::uint64_t master_seed, std::uint64_t trial) noexcept
    : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
      trial_(trial) {}

std::uint64_t StepStream::next_u64() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const Philox4x32::Counter out = Philox4x32::generate(
      {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
       static_cast<std::uint32_t>(trial_), static_cast<std::uint32_t>(trial_ >> 32)},
      key_);
  ++block_;
  spare_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  has_spare_ = true;
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

void StepStream::refill() noexcept {
  word_ = next_u64();
  bits_left_ = 64;
}

}  // namespace mdl
