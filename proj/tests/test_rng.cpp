#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mdl/rng.hpp"

using mdl::Philox4x32;
using mdl::StepStream;

// Known-answer vectors; cross-checked against the randomgen Philox(4, 32) implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out =
      Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(StepStream, SameSeedAndTrialReplays) {
  StepStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_up(), b.next_up());
}

TEST(StepStream, TrialsAndSeedsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (std::uint64_t trial = 0; trial < 64; ++trial) firsts.insert(StepStream(seed, trial).next_u64());
  }
  EXPECT_EQ(firsts.size(), 256u);
}

TEST(StepStream, BulkBitsMatchSingleDraws) {
  StepStream single(9, 3), bulk(9, 3);
  for (int round = 0; round < 50; ++round) {
    unsigned n = 0;
    std::uint64_t w = bulk.take_bits(n);
    const unsigned use = 1 + static_cast<unsigned>(round * 7) % n;
    for (unsigned i = 0; i < use; ++i) {
      ASSERT_EQ(single.next_up(), (w & 1U) != 0);
      w >>= 1;
    }
    bulk.put_back(w, n - use);
  }
}

TEST(StepStream, CoinIsFair) {
  StepStream s(1, 0);
  int ups = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ups += s.next_up();
  // 5 sigma band for Binomial(n, 1/2).
  EXPECT_NEAR(ups, n / 2, 5 * std::sqrt(n / 4.0));
}

TEST(StepStream, UniformInUnitInterval) {
  StepStream s(5, 11);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 5 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(MixSeed, TagsSeparate) {
  EXPECT_NE(mdl::mix_seed(1, 0), mdl::mix_seed(1, 1));
  EXPECT_NE(mdl::mix_seed(1, 0), mdl::mix_seed(2, 0));
  static_assert(mdl::mix_seed(3, 4) == mdl::mix_seed(3, 4));
}
