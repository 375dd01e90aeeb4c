#include "mdl/exact_walk.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdl {

ExitStats exit_stats(double lo, double hi, double x) {
  if (!(lo < hi)) throw std::invalid_argument("exit interval requires lo < hi");
  if (!(lo <= x && x <= hi)) throw std::invalid_argument("exit start must lie in [lo, hi]");
  return {(x - lo) * (hi - x), (hi - x) / (hi - lo)};
}

LatticePmf walk_diameter_pmf(std::int64_t hdiam) {
  if (hdiam < 1) throw std::invalid_argument("hdiam must be >= 1");
  const double norm = static_cast<double>(hdiam) * static_cast<double>(hdiam + 1);
  LatticePmf pmf;
  for (std::int64_t x = -hdiam; x <= hdiam; ++x) {
    if (x != 0) pmf[x] = static_cast<double>(x < 0 ? -x : x) / norm;
  }
  return pmf;
}

LatticePmf absorption_pmf_oracle(std::int64_t hdiam) {
  if (hdiam < 1 || hdiam > 12) throw std::invalid_argument("absorption oracle supports 1 <= hdiam <= 12");

  // Transient states: run_min <= x <= run_max, run_min <= 0 <= run_max, range < hdiam.
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, Eigen::Index> index;
  std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> states;
  for (std::int64_t lo = -(hdiam - 1); lo <= 0; ++lo) {
    for (std::int64_t hi = 0; hi - lo < hdiam; ++hi) {
      for (std::int64_t x = lo; x <= hi; ++x) {
        index.emplace(std::make_tuple(x, hi, lo), static_cast<Eigen::Index>(states.size()));
        states.emplace_back(x, hi, lo);
      }
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(states.size());
  const Eigen::Index n_terminal = 2 * hdiam;
  auto terminal_column = [hdiam](std::int64_t x) {
    return static_cast<Eigen::Index>(x < 0 ? x + hdiam : x + hdiam - 1);
  };

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd absorbed = Eigen::MatrixXd::Zero(n, n_terminal);
  for (Eigen::Index row = 0; row < n; ++row) {
    const auto [x, hi, lo] = states[static_cast<std::size_t>(row)];
    for (const std::int64_t step : {std::int64_t{1}, std::int64_t{-1}}) {
      const std::int64_t nx = x + step;
      const std::int64_t nhi = std::max(hi, nx);
      const std::int64_t nlo = std::min(lo, nx);
      if (nhi - nlo >= hdiam) {
        absorbed(row, terminal_column(nx)) += 0.5;
      } else {
        system(row, index.at(std::make_tuple(nx, nhi, nlo))) -= 0.5;
      }
    }
  }
  const Eigen::MatrixXd solution = system.partialPivLu().solve(absorbed);
  const Eigen::Index origin = index.at(std::make_tuple(0, 0, 0));

  LatticePmf pmf;
  for (std::int64_t x = -hdiam; x <= hdiam; ++x) {
    if (x != 0) pmf[x] = solution(origin, terminal_column(x));
  }
  return pmf;
}

ClosedForms closed_forms(double c, double d) {
  if (!(c > 0.0) || !(d > 0.0)) throw std::invalid_argument("closed forms require c > 0 and d > 0");
  ClosedForms t{};
  t.c = c;
  t.d = d;
  t.e_tau_d = d * d;
  t.e_max_at_tau_d = d;
  t.e_delta_2d = expected_diameter_time(2.0 * d);
  t.e_gap_time = diameter_time_increment(0.0, 2.0 * d) + t.e_tau_d;
  t.e_diameter_at_gap = 2.0 * d + t.e_max_at_tau_d;
  t.payoff_gap = 3.0 * d - 3.0 * c * d * d;
  t.payoff_gap_opt = 3.0 / (4.0 * c);
  // Drop process ~ |B|: a drawdown of d, then a fresh rise of d.
  t.e_drop_time = 2.0 * t.e_tau_d;
  t.e_drop_sup_at_drop = 2.0 * d;
  t.payoff_drop = 2.0 * d - 2.0 * c * d * d;
  t.payoff_drop_opt = 1.0 / (2.0 * c);
  t.e_drop_time_alt = 8.0 * d * d;
  return t;
}

ConvergenceError::ConvergenceError(std::int64_t iters, double change)
    : std::runtime_error("value iteration did not converge in " + std::to_string(iters) +
                         " sweeps (last sup-norm change " + std::to_string(change) + ")"),
      iterations(iters),
      last_change(change) {}

std::vector<std::int64_t> DPSolution::boundary() const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(cap));
  for (std::int64_t a = 0; a < cap; ++a) {
    std::int64_t b = 0;
    while (b < cap && !is_stop(a, b)) ++b;
    out.push_back(b);
  }
  return out;
}

bool DPSolution::stop_region_monotone() const {
  for (std::int64_t a = 0; a <= cap; ++a) {
    for (std::int64_t b = 0; b <= cap; ++b) {
      if (!is_stop(a, b)) continue;
      if (a < cap && !is_stop(a + 1, b)) return false;
      if (b < cap && !is_stop(a, b + 1)) return false;
    }
  }
  return true;
}

RegionComparison compare_stop_region(const DPSolution& sol, std::int64_t threshold, std::int64_t window) {
  RegionComparison out;
  out.window = window < 0 ? sol.cap / 2 : std::min(window, sol.cap + 1);
  for (std::int64_t a = 0; a < out.window; ++a) {
    for (std::int64_t b = 0; b < out.window; ++b) {
      const std::int64_t g = std::min(a, b);
      if (sol.is_stop(a, b) == (g >= threshold)) continue;
      ++out.disagreements;
      if (g < threshold - 1 || g > threshold + 1) ++out.far_disagreements;
    }
  }
  return out;
}

namespace {

void validate(const WalkDP& spec) {
  if (!(spec.c > 0.0) || !(spec.h > 0.0) || !(spec.tol > 0.0) || spec.max_iterations < 1) {
    throw std::invalid_argument("dp requires c > 0, h > 0, tol > 0 and a positive iteration budget");
  }
  if (static_cast<double>(spec.cap) * spec.h < 3.0 / spec.c * (1.0 - 1e-12)) {
    throw std::invalid_argument("dp cap * h must be at least 3/c");
  }
}

struct Sweeper {
  std::int64_t cap;
  double h;
  double step_cost;

  std::size_t idx(std::int64_t a, std::int64_t b) const noexcept {
    return static_cast<std::size_t>(a * (cap + 1) + b);
  }
  double stop_value(std::int64_t a, std::int64_t b) const noexcept { return static_cast<double>(a + b) * h; }
  double continuation(const std::vector<double>& v, std::int64_t a, std::int64_t b) const noexcept {
    const double up = v[idx(std::max<std::int64_t>(a - 1, 0), b + 1)];
    const double down = v[idx(a + 1, std::max<std::int64_t>(b - 1, 0))];
    return 0.5 * (up + down) - step_cost;
  }
  /// Updates row a into `next`; returns the row's sup-norm change.
  double sweep_row(const std::vector<double>& v, std::vector<double>& next, std::int64_t a) const noexcept {
    double change = 0.0;
    for (std::int64_t b = 0; b <= cap; ++b) {
      const double stop = stop_value(a, b);
      const double updated = (a == cap || b == cap) ? stop : std::max(stop, continuation(v, a, b));
      change = std::max(change, std::abs(updated - v[idx(a, b)]));
      next[idx(a, b)] = updated;
    }
    return change;
  }
};

template <class SweepAll>
DPSolution solve_with(const WalkDP& spec, SweepAll sweep_all) {
  validate(spec);
  const Sweeper sw{spec.cap, spec.h, spec.c * spec.h * spec.h};
  const std::size_t size = static_cast<std::size_t>((spec.cap + 1) * (spec.cap + 1));
  std::vector<double> v(size);
  for (std::int64_t a = 0; a <= spec.cap; ++a) {
    for (std::int64_t b = 0; b <= spec.cap; ++b) v[sw.idx(a, b)] = sw.stop_value(a, b);
  }
  std::vector<double> next(size);

  DPSolution sol;
  sol.cap = spec.cap;
  double change = 0.0;
  for (std::int64_t it = 1; it <= spec.max_iterations; ++it) {
    change = sweep_all(sw, v, next);
    v.swap(next);
    sol.iterations = it;
    if (change < spec.tol) break;
  }
  sol.last_change = change;
  if (!(change < spec.tol)) throw ConvergenceError(sol.iterations, change);

  sol.stop.assign(size, 0);
  for (std::int64_t a = 0; a <= spec.cap; ++a) {
    for (std::int64_t b = 0; b <= spec.cap; ++b) {
      const bool forced = a == spec.cap || b == spec.cap;
      sol.stop[sw.idx(a, b)] = forced || sw.stop_value(a, b) >= sw.continuation(v, a, b) - spec.tol;
    }
  }
  sol.value_origin = v[0];
  sol.value = std::move(v);
  return sol;
}

}  // namespace

DPSolution dp_solve_serial(const WalkDP& spec) {
  return solve_with(spec, [](const Sweeper& sw, const std::vector<double>& v, std::vector<double>& next) {
    double change = 0.0;
    for (std::int64_t a = 0; a <= sw.cap; ++a) change = std::max(change, sw.sweep_row(v, next, a));
    return change;
  });
}

DPSolution dp_solve(const WalkDP& spec, int workers) {
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
#endif
  return solve_with(spec, [&](const Sweeper& sw, const std::vector<double>& v, std::vector<double>& next) {
    double change = 0.0;
#pragma omp parallel for schedule(static) reduction(max : change) num_threads(threads)
    for (std::int64_t a = 0; a <= sw.cap; ++a) change = std::max(change, sw.sweep_row(v, next, a));
    return change;
  });
}

}  // namespace mdl
