#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace mdl {

struct ExitStats {
  double expected_time;
  double prob_hit_lower;
};

/// Exit of Brownian motion (or simple random walk, integer inputs) from
/// (lo, hi) started at x.
ExitStats exit_stats(double lo, double hi, double x);

/// Termination point (lattice cells) -> probability.
using LatticePmf = std::map<std::int64_t, double>;

/// Position of simple random walk at the first time its range spans
/// `hdiam` cells: mass |x| / (hdiam (hdiam + 1)) on x in [-hdiam, hdiam] \ {0}.
LatticePmf walk_diameter_pmf(std::int64_t hdiam);

/// Same law computed by solving the absorbing chain on (x, run_max, run_min)
/// directly. Restricted to hdiam <= 12.
LatticePmf absorption_pmf_oracle(std::int64_t hdiam);

/// Expected time for Brownian range to reach h: h^2 / 2.
constexpr double expected_diameter_time(double h) noexcept { return h * h / 2.0; }

/// Expected extra time to grow the range from h1 to h2.
constexpr double diameter_time_increment(double h1, double h2) noexcept {
  return (h2 * h2 - h1 * h1) / 2.0;
}

/// Closed-form expectations for Brownian motion with cost c and threshold d.
struct ClosedForms {
  double c, d;
  double e_tau_d;             ///< E[tau_d] = d^2
  double e_max_at_tau_d;      ///< E[M(tau_d)] = d
  double e_delta_2d;          ///< E[delta_{2d}] = 2 d^2
  double e_gap_time;          ///< E[T_d] for the gap rule = 3 d^2
  double e_diameter_at_gap;   ///< E[D(T_d)] = 3 d
  double payoff_gap;          ///< 3d - 3cd^2
  double payoff_gap_opt;      ///< 3/(4c)
  double e_drop_time;         ///< E[T+_d] = 2 d^2 (derived)
  double e_drop_sup_at_drop;  ///< E[D+(T+_d)] = 2 d (derived)
  double payoff_drop;         ///< 2d - 2cd^2
  double payoff_drop_opt;     ///< 1/(2c)
  double e_drop_time_alt; ///< 2/c^2 at c = 1/(2d), i.e. 8 d^2; rejected by simulation
};

ClosedForms closed_forms(double c, double d);

/// Lattice Markov decision problem for the diameter c-problem.
///
/// State (a, b): cells below the running max and above the running min.
struct WalkDP {
  double c = 1.0;
  double h = 1.0 / 40.0;
  std::int64_t cap = 200;
  double tol = 1e-10;
  std::int64_t max_iterations = 2'000'000;
};

struct DPSolution {
  double value_origin = 0.0;
  std::int64_t cap = 0;
  std::int64_t iterations = 0;
  double last_change = 0.0;
  std::vector<double> value;        ///< row-major (a, b), (cap+1)^2 entries
  std::vector<std::uint8_t> stop;   ///< 1 where stopping attains the max

  std::size_t index(std::int64_t a, std::int64_t b) const noexcept {
    return static_cast<std::size_t>(a * (cap + 1) + b);
  }
  bool is_stop(std::int64_t a, std::int64_t b) const noexcept { return stop[index(a, b)] != 0; }

  /// For each a < cap, the smallest b with a stop decision (cap if none).
  std::vector<std::int64_t> boundary() const;

  /// True if every stop state's up-right quadrant is all stop states.
  bool stop_region_monotone() const;
};

struct RegionComparison {
  std::int64_t window = 0;      ///< states with a, b < window were compared
  std::int64_t disagreements = 0;
  std::int64_t far_disagreements = 0;  ///< disagreements more than one cell from min(a, b) = threshold
};

/// Compares the DP stop set with {min(a, b) >= threshold} on the square
/// a, b < window. The cap forces stops near its edge, so the window should
/// stay well inside it (cap / 2 by default).
RegionComparison compare_stop_region(const DPSolution& sol, std::int64_t threshold, std::int64_t window = -1);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(std::int64_t iterations, double last_change);
  std::int64_t iterations;
  double last_change;
};

/// Synchronous value iteration, sweeps parallelised over rows.
DPSolution dp_solve(const WalkDP& spec, int workers = 0);

/// Single-threaded reference for dp_solve; results are bit-identical.
DPSolution dp_solve_serial(const WalkDP& spec);

}  // namespace mdl
