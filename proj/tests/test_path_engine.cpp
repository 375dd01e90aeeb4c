#include <gtest/gtest.h>

#include <cmath>

#include <stdexcept>
#include <vector>

#include "mdl/path_engine.hpp"
#include "mdl/rng.hpp"

using mdl::Direction;
using mdl::PathState;

namespace {

PathState walk(std::initializer_list<Direction> steps) {
  PathState s = mdl::init_state();
  for (Direction d : steps) s = mdl::advance(s, d);
  return s;
}

std::vector<int> signs(unsigned bits, int n) {
  std::vector<int> v;
  for (int i = 0; i < n; ++i) v.push_back((bits >> i) & 1U ? 1 : -1);
  return v;
}

void expect_invariants(const PathState& s) {
  EXPECT_LE(s.run_min, s.x);
  EXPECT_LE(s.x, s.run_max);
  EXPECT_LE(s.run_min, 0);
  EXPECT_GE(s.run_max, 0);
  EXPECT_GE(s.gap(), 0);
  EXPECT_LE(2 * s.gap(), s.diameter());
  EXPECT_EQ(s.abs_sup(), std::max(s.run_max, -s.run_min));
}

}  // namespace

TEST(LatticeSpec, TimeStepIsHSquared) {
  const mdl::LatticeSpec spec(0.05);
  EXPECT_DOUBLE_EQ(spec.time_per_step(), 0.0025);
  EXPECT_EQ(spec.cells(1.0), 20);
  EXPECT_EQ(spec.steps_for(1.0), 400);
  EXPECT_TRUE(spec.is_multiple(0.25));
  EXPECT_FALSE(spec.is_multiple(0.26));
  EXPECT_THROW(spec.cells(0.26), std::invalid_argument);
  EXPECT_THROW(mdl::LatticeSpec(0.0), std::invalid_argument);
  EXPECT_THROW(mdl::LatticeSpec(-1.0), std::invalid_argument);
}

TEST(InitState, Origin) {
  const PathState s = mdl::init_state();
  EXPECT_EQ(s.steps, 0);
  EXPECT_EQ(s.x, 0);
  EXPECT_EQ(s.diameter(), 0);
  EXPECT_EQ(s.gap(), 0);
  EXPECT_EQ(s.drop_sup, 0);
  EXPECT_EQ(s.abs_sup(), 0);
  EXPECT_LE(2 * s.gap(), s.diameter());
}

TEST(Advance, SingleUpStep) {
  const PathState s = walk({Direction::up});
  EXPECT_EQ(s.x, 1);
  EXPECT_EQ(s.run_max, 1);
  EXPECT_EQ(s.run_min, 0);
  EXPECT_EQ(s.diameter(), 1);
  EXPECT_EQ(s.gap(), 0);
}

TEST(Advance, FiveStepTrace) {
  using enum Direction;
  const PathState s = walk({up, up, down, down, down});
  EXPECT_EQ(s.x, -1);
  EXPECT_EQ(s.run_max, 2);
  EXPECT_EQ(s.run_min, -1);
  EXPECT_EQ(s.diameter(), 3);
  EXPECT_EQ(s.gap(), 0);
  EXPECT_EQ(s.drop_sup, 3);
}

TEST(Advance, FourStepTrace) {
  using enum Direction;
  const PathState s = walk({up, down, down, up});
  EXPECT_EQ(s.x, 0);
  EXPECT_EQ(s.diameter(), 2);
  EXPECT_EQ(s.gap(), 1);
  EXPECT_EQ(2 * s.gap(), s.diameter());
  EXPECT_EQ(s.drop_sup, 2);
  EXPECT_EQ(s.rise_sup, 1);
}

TEST(RealView, ScalesByH) {
  using enum Direction;
  const mdl::LatticeSpec spec(0.5);
  const auto r = mdl::to_real(walk({up, up, down, down, down}), spec);
  EXPECT_DOUBLE_EQ(r.t, 5 * 0.25);
  EXPECT_DOUBLE_EQ(r.x, -0.5);
  EXPECT_DOUBLE_EQ(r.run_max, 1.0);
  EXPECT_DOUBLE_EQ(r.diameter, 1.5);
  EXPECT_DOUBLE_EQ(r.drop_sup, 1.5);
}

// Every sign sequence of length 16, every prefix: invariants, and running
// statistics against a naive recomputation from the whole prefix.
TEST(Exhaustive, AllPathsOfLength16) {
  constexpr int n = 16;
  for (unsigned bits = 0; bits < (1U << n); ++bits) {
    const auto v = signs(bits, n);
    PathState s = mdl::init_state();
    std::vector<int> xs{0};
    for (int i = 0; i < n; ++i) {
      const PathState prev = s;
      s = mdl::advance(s, v[i] > 0 ? Direction::up : Direction::down);
      xs.push_back(xs.back() + v[i]);
      ASSERT_GE(s.diameter(), prev.diameter());
      ASSERT_GE(s.drop_sup, prev.drop_sup);
      ASSERT_GE(s.rise_sup, prev.rise_sup);
      ASSERT_GE(s.abs_sup(), prev.abs_sup());
      ASSERT_LE(2 * s.gap(), s.diameter());
    }
    // Two-pass oracle: running max first, then the largest drop below it.
    std::vector<int> run_max(xs.size()), run_min(xs.size());
    run_max[0] = run_min[0] = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      run_max[i] = std::max(run_max[i - 1], xs[i]);
      run_min[i] = std::min(run_min[i - 1], xs[i]);
    }
    int drop = 0, rise = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      drop = std::max(drop, run_max[i] - xs[i]);
      rise = std::max(rise, xs[i] - run_min[i]);
    }
    ASSERT_EQ(s.drop_sup, drop);
    ASSERT_EQ(s.rise_sup, rise);
    ASSERT_EQ(s.run_max, run_max.back());
    ASSERT_EQ(s.run_min, run_min.back());
    ASSERT_EQ(s.x, xs.back());
  }
}

TEST(Mirror, NegatedPathSwapsExtremes) {
  constexpr int n = 12;
  for (unsigned bits = 0; bits < (1U << n); ++bits) {
    PathState s = mdl::init_state();
    PathState m = mdl::init_state();
    for (int i = 0; i < n; ++i) {
      const bool up = (bits >> i) & 1U;
      s = mdl::advance(s, up ? Direction::up : Direction::down);
      m = mdl::advance(m, up ? Direction::down : Direction::up);
    }
    ASSERT_EQ(m, mdl::mirrored(s));
    ASSERT_EQ(m.run_max, -s.run_min);
    ASSERT_EQ(m.drop_sup, s.rise_sup);
    ASSERT_EQ(m.diameter(), s.diameter());
    ASSERT_EQ(m.gap(), s.gap());
    ASSERT_EQ(m.abs_sup(), s.abs_sup());
  }
}

TEST(RandomPaths, InvariantsAndMonotonicity) {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    mdl::StepStream stream(123, trial);
    PathState s = mdl::init_state();
    for (int i = 0; i < 2000; ++i) {
      const PathState prev = s;
      mdl::advance_in_place(s, stream.next_up());
      ASSERT_EQ(s.steps, prev.steps + 1);
      ASSERT_GE(s.drop_sup, prev.drop_sup);
      ASSERT_GE(s.rise_sup, prev.rise_sup);
      ASSERT_GE(s.diameter(), prev.diameter());
      ASSERT_GE(s.abs_sup(), prev.abs_sup());
    }
    expect_invariants(s);
  }
}
