#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "mdl/exact_walk.hpp"

TEST(ExitStats, Examples) {
  auto e = mdl::exit_stats(-1, 2, 0);
  EXPECT_DOUBLE_EQ(e.expected_time, 2.0);
  EXPECT_DOUBLE_EQ(e.prob_hit_lower, 2.0 / 3.0);
  e = mdl::exit_stats(0, 1, 0);
  EXPECT_DOUBLE_EQ(e.expected_time, 0.0);
  EXPECT_DOUBLE_EQ(e.prob_hit_lower, 1.0);
  e = mdl::exit_stats(-3, 3, 0);
  EXPECT_DOUBLE_EQ(e.expected_time, 9.0);
  EXPECT_DOUBLE_EQ(e.prob_hit_lower, 0.5);
  EXPECT_THROW(mdl::exit_stats(2, -1, 0), std::invalid_argument);
  EXPECT_THROW(mdl::exit_stats(-1, 1, 3), std::invalid_argument);
}

TEST(DiameterPmf, Examples) {
  const auto p2 = mdl::walk_diameter_pmf(2);
  EXPECT_EQ(p2.size(), 4u);
  EXPECT_DOUBLE_EQ(p2.at(-2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p2.at(-1), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(p2.at(1), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(p2.at(2), 1.0 / 3.0);
  const auto p1 = mdl::walk_diameter_pmf(1);
  EXPECT_DOUBLE_EQ(p1.at(-1), 0.5);
  EXPECT_DOUBLE_EQ(p1.at(1), 0.5);
  const auto p3 = mdl::walk_diameter_pmf(3);
  double total = 0.0;
  for (int x = 1; x <= 3; ++x) {
    EXPECT_DOUBLE_EQ(p3.at(x), x / 12.0);
    EXPECT_DOUBLE_EQ(p3.at(-x), x / 12.0);
  }
  for (const auto& [x, m] : p3) total += m;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_FALSE(p3.contains(0));
  EXPECT_THROW(mdl::walk_diameter_pmf(0), std::invalid_argument);
}

TEST(DiameterPmf, MatchesAbsorptionOracle) {
  for (std::int64_t k = 1; k <= 12; ++k) {
    const auto closed = mdl::walk_diameter_pmf(k);
    const auto solved = mdl::absorption_pmf_oracle(k);
    double total = 0.0;
    for (const auto& [x, m] : solved) {
      total += m;
      const double expect = closed.contains(x) ? closed.at(x) : 0.0;
      EXPECT_NEAR(m, expect, 1e-10) << "hdiam=" << k << " x=" << x;
    }
    for (const auto& [x, m] : closed) EXPECT_TRUE(solved.contains(x) || m < 1e-10);
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
  EXPECT_THROW(mdl::absorption_pmf_oracle(13), std::invalid_argument);
}

// Simpson's rule on |x|/h^2 over [-h, h].
TEST(VShape, VarianceIsHalfHSquared) {
  for (double h : {0.5, 1.0, 3.0}) {
    const int n = 2000;
    const double step = 2.0 * h / n;
    auto f = [h](double x) { return x * x * std::abs(x) / (h * h); };
    auto g = [h](double x) { return std::abs(x) / (h * h); };
    double var = f(-h) + f(h), mass = g(-h) + g(h);
    for (int i = 1; i < n; ++i) {
      const double x = -h + i * step;
      var += (i % 2 ? 4.0 : 2.0) * f(x);
      mass += (i % 2 ? 4.0 : 2.0) * g(x);
    }
    var *= step / 3.0;
    mass *= step / 3.0;
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_NEAR(var, mdl::expected_diameter_time(h), 1e-9);
  }
}

TEST(ClosedForms, Table) {
  const auto one = mdl::closed_forms(1.0, 1.0);
  EXPECT_DOUBLE_EQ(one.e_gap_time, 3.0);
  EXPECT_DOUBLE_EQ(one.e_diameter_at_gap, 3.0);
  const auto half = mdl::closed_forms(1.0, 0.5);
  EXPECT_DOUBLE_EQ(half.payoff_gap, 0.75);
  EXPECT_DOUBLE_EQ(half.payoff_gap_opt, 0.75);
  EXPECT_DOUBLE_EQ(half.payoff_drop, 0.5);
  EXPECT_DOUBLE_EQ(half.payoff_drop_opt, 0.5);
  EXPECT_DOUBLE_EQ(half.e_drop_time, 0.5);
  EXPECT_DOUBLE_EQ(half.e_drop_time_alt, 2.0);
  EXPECT_DOUBLE_EQ(half.e_tau_d, 0.25);
  EXPECT_DOUBLE_EQ(half.e_max_at_tau_d, 0.5);
  EXPECT_THROW(mdl::closed_forms(0.0, 1.0), std::invalid_argument);
}

TEST(ClosedForms, ConsistencyChain) {
  for (double d : {0.1, 0.5, 1.0, 2.0}) {
    const auto f = mdl::closed_forms(1.0, d);
    EXPECT_NEAR(f.e_gap_time, mdl::diameter_time_increment(0.0, 2.0 * d) + f.e_tau_d, 1e-14);
    EXPECT_NEAR(f.e_delta_2d, mdl::expected_diameter_time(2.0 * d), 1e-14);
  }
  EXPECT_DOUBLE_EQ(mdl::diameter_time_increment(1.0, 3.0), 4.0);
}

TEST(ClosedForms, GapPayoffConcaveWithUniqueMaximum) {
  for (double c : {0.5, 1.0, 2.0}) {
    const double dstar = 0.5 / c;
    const int n = 400;
    double prev_slope = std::numeric_limits<double>::infinity();
    for (int i = 1; i < n; ++i) {
      const double a = 2.0 * dstar * i / n;
      const double b = 2.0 * dstar * (i + 1) / n;
      const double slope = mdl::closed_forms(c, b).payoff_gap - mdl::closed_forms(c, a).payoff_gap;
      ASSERT_LT(slope, prev_slope);
      prev_slope = slope;
      if (b <= dstar) {
        ASSERT_GT(slope, 0.0);
      }
      if (a >= dstar) {
        ASSERT_LT(slope, 0.0);
      }
    }
  }
}

namespace {

mdl::WalkDP small_dp(double c = 1.0) {
  mdl::WalkDP w;
  w.c = c;
  w.h = 1.0 / 20.0;
  w.cap = 80;
  return w;
}

}  // namespace

TEST(Dp, ParallelEqualsSerialBitwise) {
  const auto w = small_dp();
  const auto serial = mdl::dp_solve_serial(w);
  for (int workers : {1, 2, 4}) {
    const auto par = mdl::dp_solve(w, workers);
    EXPECT_EQ(par.iterations, serial.iterations);
    EXPECT_EQ(par.value, serial.value);
    EXPECT_EQ(par.stop, serial.stop);
    EXPECT_EQ(par.value_origin, serial.value_origin);
  }
}

TEST(Dp, RecoversOptimalGapRule) {
  const auto sol = mdl::dp_solve(mdl::WalkDP{});
  EXPECT_GE(sol.value_origin, 0.71);
  EXPECT_LE(sol.value_origin, 0.79);
  EXPECT_LT(sol.last_change, 1e-10);
  EXPECT_TRUE(sol.stop_region_monotone());
  const auto cmp = mdl::compare_stop_region(sol, 20);
  EXPECT_EQ(cmp.window, 100);
  EXPECT_EQ(cmp.far_disagreements, 0);
  // Away from the cap, the boundary sits on the threshold or its lattice tie.
  const auto b = sol.boundary();
  for (std::size_t a = 21; a < 100; ++a) EXPECT_TRUE(b[a] == 19 || b[a] == 20) << a;
}

// On the walk the gap rule with d = 1/(2c) is optimal; its exact payoff is
// 3d - c(3d^2 + 2dh). Forced stops at the cap can only lower the value, by
// an amount that shrinks with the cap.
TEST(Dp, CapErrorShrinksTowardsLatticeOptimum) {
  const double exact = 1.5 - (0.75 + 2.0 * 0.5 / 40.0);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (std::int64_t cap : {120, 200, 280}) {
    mdl::WalkDP w;
    w.cap = cap;
    const double v = mdl::dp_solve(w).value_origin;
    EXPECT_LE(v, exact + 1e-9);
    EXPECT_LT(exact - v, prev_gap);
    prev_gap = exact - v;
  }
  EXPECT_LT(prev_gap, 1e-5);
}

TEST(Dp, ValueNonincreasingInCost) {
  double prev = std::numeric_limits<double>::infinity();
  for (double c : {0.8, 1.0, 1.25, 1.6}) {
    mdl::WalkDP w = small_dp(c);
    w.cap = static_cast<std::int64_t>(std::ceil(5.0 / (c * w.h)));
    const double v = mdl::dp_solve(w).value_origin;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Dp, ReportsNonConvergence) {
  mdl::WalkDP w = small_dp();
  w.max_iterations = 10;
  try {
    mdl::dp_solve(w);
    FAIL() << "expected ConvergenceError";
  } catch (const mdl::ConvergenceError& e) {
    EXPECT_EQ(e.iterations, 10);
    EXPECT_GT(e.last_change, w.tol);
  }
}

TEST(Dp, ValidatesInput) {
  mdl::WalkDP w = small_dp();
  w.cap = 10;
  EXPECT_THROW(mdl::dp_solve(w), std::invalid_argument);
  w = small_dp();
  w.tol = 0.0;
  EXPECT_THROW(mdl::dp_solve(w), std::invalid_argument);
}
