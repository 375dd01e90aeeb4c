#include <gtest/gtest.h>

#include <cmath>

#include <map>
#include <stdexcept>
#include <vector>

#include "mdl/rng.hpp"
#include "mdl/stopping_rules.hpp"

using mdl::LatticeRule;
using mdl::LatticeSpec;
using mdl::PathState;
using mdl::RuleKind;
namespace rules = mdl::rules;

namespace {

// Replays a fixed sign sequence; runs out by returning `true` forever.
struct SequenceStream {
  std::vector<bool> steps;
  std::size_t pos = 0;
  bool next_up() { return pos < steps.size() ? steps[pos++] : true; }
};

std::vector<bool> bits_of(unsigned bits, int n) {
  std::vector<bool> v;
  for (int i = 0; i < n; ++i) v.push_back((bits >> i) & 1U);
  return v;
}

// Step count at which `rule` first fires along `path`, or -1.
std::int64_t first_fire(const LatticeRule& rule, const std::vector<bool>& path, PathState s = {}) {
  if (mdl::should_stop(rule, s)) return s.steps;
  for (bool up : path) {
    mdl::advance_in_place(s, up);
    if (mdl::should_stop(rule, s)) return s.steps;
  }
  return -1;
}

PathState state(std::int64_t run_max, std::int64_t run_min, std::int64_t x, std::int64_t drop_sup = 0) {
  PathState s;
  s.run_max = run_max;
  s.run_min = run_min;
  s.x = x;
  s.drop_sup = std::max(drop_sup, run_max - x);
  return s;
}

const LatticeSpec kUnit(1.0);

}  // namespace

TEST(ShouldStop, GapExamples) {
  const LatticeRule gap = mdl::bind(rules::Gap{1.0}, kUnit);
  EXPECT_TRUE(mdl::should_stop(gap, state(2, -1, 1)));
  EXPECT_FALSE(mdl::should_stop(gap, mdl::init_state()));
}

TEST(ShouldStop, DrawdownExactThreshold) {
  EXPECT_TRUE(mdl::should_stop(mdl::bind(rules::Drawdown{1.0}, kUnit), state(1, 0, 0)));
}

TEST(ShouldStop, DropDrawdownRiseAfterDrop) {
  EXPECT_TRUE(mdl::should_stop(mdl::bind(rules::DropDrawdown{1.0}, kUnit), state(1, 0, 1, 1)));
  EXPECT_FALSE(mdl::should_stop(mdl::bind(rules::DropDrawdown{1.0}, kUnit), state(1, 0, 0, 1)));
}

TEST(ShouldStop, VariantOverloadUsesRealUnits) {
  const LatticeSpec spec(0.25);
  EXPECT_TRUE(mdl::should_stop(mdl::StopRule{rules::Gap{0.25}}, state(2, -1, 1), spec));
  EXPECT_FALSE(mdl::should_stop(mdl::StopRule{rules::Gap{0.5}}, state(2, -1, 1), spec));
  EXPECT_TRUE(mdl::should_stop(mdl::StopRule{rules::FirstExit{-0.25, 1.0}}, state(0, -1, -1), spec));
  EXPECT_TRUE(mdl::should_stop(mdl::StopRule{rules::AbsGap{0.5}}, state(3, -1, 1), spec));
}

TEST(Bind, ValidatesThresholds) {
  const LatticeSpec spec(0.05);
  EXPECT_EQ(mdl::bind(rules::Gap{1.0}, spec).a, 20);
  EXPECT_THROW(mdl::bind(rules::Gap{1.01}, spec), std::invalid_argument);
  EXPECT_THROW(mdl::bind(rules::Drawdown{0.0}, spec), std::invalid_argument);
  EXPECT_THROW(mdl::bind(rules::Rise{-1.0}, spec), std::invalid_argument);
  EXPECT_THROW(mdl::bind(rules::FirstExit{0.5, 1.0}, spec), std::invalid_argument);
  EXPECT_THROW(mdl::bind(rules::FirstExit{-1.0, -0.5}, spec), std::invalid_argument);
  const LatticeRule fe = mdl::bind(rules::FirstExit{-1.0, 0.5}, spec);
  EXPECT_EQ(fe.a, -20);
  EXPECT_EQ(fe.b, 10);
  EXPECT_EQ(mdl::bind(rules::FixedTime{1.0}, spec).a, 400);
  EXPECT_THROW(mdl::bind(rules::FixedTime{0.001}, spec), std::invalid_argument);
}

TEST(DefaultMaxSteps, FourHundredSquaredCells) {
  const LatticeSpec spec(0.05);
  EXPECT_EQ(mdl::default_max_steps(mdl::bind(rules::Gap{1.0}, spec)), 400 * 20 * 20);
  EXPECT_EQ(mdl::default_max_steps(mdl::bind(rules::FirstExit{-1.0, 0.5}, spec)), 400 * 20 * 20);
  EXPECT_EQ(mdl::default_max_steps(mdl::bind(rules::FixedTime{1.0}, spec)), 400);
}

TEST(RunUntilStop, FirstExitOneCellFiresInOneStep) {
  const LatticeSpec spec(0.1);
  for (std::uint64_t k = 0; k < 50; ++k) {
    mdl::StepStream stream(3, k);
    const auto p = mdl::run_until_stop(mdl::StopRule{rules::FirstExit{-0.1, 0.1}}, spec, stream, 1000);
    ASSERT_TRUE(p.fired);
    ASSERT_EQ(p.final_state.steps, 1);
    ASSERT_NEAR(std::abs(p.terminal_x), 0.1, 1e-15);
    ASSERT_NEAR(p.stop_time, 0.01, 1e-15);
  }
}

TEST(RunUntilStop, GuardExhaustionIsCensored) {
  mdl::StepStream stream(1, 0);
  const auto p = mdl::run_until_stop(mdl::StopRule{rules::Gap{1.0}}, LatticeSpec(0.01), stream, 10);
  EXPECT_FALSE(p.fired);
  EXPECT_EQ(p.final_state.steps, 10);
}

// Exact terminal law of DiameterReach(2 cells): enumerate every path of 20
// steps; the mass still running afterwards bounds the error.
TEST(RunUntilStop, DiameterTwoTerminalLaw) {
  const LatticeRule rule = mdl::bind(rules::DiameterReach{2.0}, kUnit);
  constexpr int n = 20;
  std::map<std::int64_t, double> law;
  double unfinished = 0.0;
  for (unsigned bits = 0; bits < (1U << n); ++bits) {
    SequenceStream s{bits_of(bits, n)};
    const auto p = mdl::run_until_stop(rule, kUnit, s, n);
    if (p.fired) {
      law[p.final_state.x] += std::ldexp(1.0, -n);
    } else {
      unfinished += std::ldexp(1.0, -n);
    }
  }
  EXPECT_LT(unfinished, 1e-5);
  EXPECT_NEAR(law[-2], 1.0 / 3.0, unfinished + 1e-12);
  EXPECT_NEAR(law[-1], 1.0 / 6.0, unfinished + 1e-12);
  EXPECT_NEAR(law[1], 1.0 / 6.0, unfinished + 1e-12);
  EXPECT_NEAR(law[2], 1.0 / 3.0, unfinished + 1e-12);
}

TEST(RunUntilStop, BulkAndSingleDrawStreamsAgree) {
  // StepStream takes the bulk path; the wrapper only exposes next_up.
  struct SingleOnly {
    mdl::StepStream inner;
    bool next_up() { return inner.next_up(); }
  };
  const LatticeSpec spec(0.05);
  for (const mdl::StopRule& r : {mdl::StopRule{rules::Gap{1.0}}, mdl::StopRule{rules::DropDrawdown{0.5}},
                                 mdl::StopRule{rules::FirstExit{-0.5, 1.0}}}) {
    for (std::uint64_t k = 0; k < 100; ++k) {
      mdl::StepStream bulk(77, k);
      SingleOnly single{mdl::StepStream(77, k)};
      const auto a = mdl::run_until_stop(r, spec, bulk, 1 << 20);
      const auto b = mdl::run_until_stop(r, spec, single, 1 << 20);
      ASSERT_EQ(a.final_state, b.final_state);
      // Both streams sit at the same position afterwards.
      ASSERT_EQ(bulk.next_up(), single.next_up());
    }
  }
}

namespace {

// Gap(d) as "diameter 2d first, then a drawdown (at the max) or a rise (at the min) of d".
std::int64_t two_stage(std::int64_t d, const std::vector<bool>& path) {
  PathState s;
  std::size_t i = 0;
  while (s.diameter() < 2 * d) {
    if (i == path.size()) return -1;
    mdl::advance_in_place(s, path[i++]);
  }
  const LatticeRule second{s.x == s.run_max ? RuleKind::drawdown : RuleKind::rise, d, 0};
  return first_fire(second, std::vector<bool>(path.begin() + static_cast<std::ptrdiff_t>(i), path.end()), s);
}

}  // namespace

TEST(Exhaustive, GapEqualsTwoStageProcedure) {
  constexpr int n = 16;
  for (std::int64_t d = 1; d <= 3; ++d) {
    const LatticeRule gap{RuleKind::gap, d, 0};
    for (unsigned bits = 0; bits < (1U << n); ++bits) {
      const auto path = bits_of(bits, n);
      ASSERT_EQ(first_fire(gap, path), two_stage(d, path)) << "d=" << d << " bits=" << bits;
    }
  }
}

TEST(Exhaustive, FirstFiringIsMinimal) {
  constexpr int n = 14;
  const std::vector<LatticeRule> rules_under_test = {
      {RuleKind::drawdown, 2, 0},     {RuleKind::rise, 2, 0},       {RuleKind::abs_gap, 2, 0},
      {RuleKind::gap, 2, 0},          {RuleKind::drop_drawdown, 1, 0}, {RuleKind::diameter_reach, 3, 0},
      {RuleKind::first_exit, -2, 3},  {RuleKind::fixed_time, 5, 0}};
  for (const LatticeRule& rule : rules_under_test) {
    for (unsigned bits = 0; bits < (1U << n); ++bits) {
      const auto path = bits_of(bits, n);
      SequenceStream stream{path};
      const auto p = mdl::run_until_stop(rule, kUnit, stream, n);
      PathState s;
      for (std::int64_t k = 0; k < p.final_state.steps; ++k) {
        ASSERT_FALSE(mdl::should_stop(rule, s));
        mdl::advance_in_place(s, path[static_cast<std::size_t>(k)]);
      }
      ASSERT_EQ(s, p.final_state);
      ASSERT_EQ(p.fired, mdl::should_stop(rule, s));
    }
  }
}

TEST(Exhaustive, DrawdownRiseMirrorDuality) {
  constexpr int n = 16;
  for (std::int64_t d = 1; d <= 3; ++d) {
    for (unsigned bits = 0; bits < (1U << n); ++bits) {
      const auto path = bits_of(bits, n);
      const auto flipped = bits_of(~bits, n);
      ASSERT_EQ(first_fire({RuleKind::drawdown, d, 0}, path), first_fire({RuleKind::rise, d, 0}, flipped));
    }
  }
}

TEST(Exhaustive, DropDrawdownNotBeforeDrawdown) {
  constexpr int n = 16;
  for (std::int64_t d = 1; d <= 3; ++d) {
    for (unsigned bits = 0; bits < (1U << n); ++bits) {
      const auto path = bits_of(bits, n);
      const std::int64_t dd = first_fire({RuleKind::drawdown, d, 0}, path);
      const std::int64_t plus = first_fire({RuleKind::drop_drawdown, d, 0}, path);
      if (plus >= 0) {
        ASSERT_GE(dd, 0);
        ASSERT_GT(plus, dd);
      }
    }
  }
}

TEST(PairedSimulation, GapEqualsTwoStageForLargerThresholds) {
  for (std::uint64_t k = 0; k < 300; ++k) {
    mdl::StepStream stream(2024, k);
    std::vector<bool> path(20000);
    for (auto&& b : path) b = stream.next_up();
    for (std::int64_t d : {5, 10}) {
      ASSERT_EQ(first_fire({RuleKind::gap, d, 0}, path), two_stage(d, path));
    }
  }
}

TEST(RuleName, Names) {
  EXPECT_EQ(mdl::rule_name(rules::Gap{1.0}), "gap");
  EXPECT_EQ(mdl::rule_name(rules::DropDrawdown{1.0}), "drop_drawdown");
  EXPECT_EQ(mdl::rule_name(rules::FirstExit{-1.0, 1.0}), "first_exit");
}
