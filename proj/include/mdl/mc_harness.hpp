#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mdl/path_engine.hpp"
#include "mdl/statistics.hpp"
#include "mdl/stopping_rules.hpp"

namespace mdl {

/// Trial-level outcomes that can be averaged.
enum class Reward { max, min_abs, abs_sup, diameter, drop_sup, stop_time, terminal_sq };
inline constexpr std::size_t kRewardCount = 7;

std::string_view reward_name(Reward r) noexcept;
std::optional<Reward> parse_reward(std::string_view name) noexcept;

/// All rewards of one stopped path, indexed by Reward.
std::array<double, kRewardCount> reward_vector(const StoppedPath& path, const LatticeSpec& spec) noexcept;

struct RunOptions {
  int workers = 0;              ///< 0: OpenMP default
  std::int64_t max_steps = 0;   ///< 0: default_max_steps(rule)
  std::int64_t block_size = 512;
};

/// Joint statistics of every reward over a batch of trials.
struct RunSummary {
  std::int64_t trials = 0;
  std::int64_t censored = 0;
  CovAccumulator<kRewardCount> acc;

  TrialStats stats(Reward r) const;
  double covariance(Reward a, Reward b) const;
  /// Statistics of wa * A + wb * B, built from the joint moments.
  TrialStats combination(double wa, Reward a, double wb, Reward b) const;

  friend bool operator==(const RunSummary& x, const RunSummary& y);
};

/// Runs n trials; trial k uses StepStream(seed, k). Blocks of trials are
/// distributed over OpenMP threads and merged in a fixed tree order, so the
/// result is bit-identical for any worker count.
RunSummary simulate(const StopRule& rule, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                    const RunOptions& opts = {});

/// Sequential single-accumulator reference for `simulate`.
RunSummary simulate_serial(const StopRule& rule, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                           const RunOptions& opts = {});

TrialStats estimate(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                    std::uint64_t seed, const RunOptions& opts = {});

/// Every stopped path, in trial order.
std::vector<StoppedPath> run_trials(const StopRule& rule, const LatticeSpec& spec, std::int64_t n,
                                    std::uint64_t seed, const RunOptions& opts = {});

/// One reward per trial, in trial order (censored trials are skipped and counted).
std::vector<double> collect(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                            std::uint64_t seed, std::int64_t* censored = nullptr, const RunOptions& opts = {});

struct RatioReport {
  TrialStats reward_mean;
  TrialStats terminal_second_moment;
  double ratio = 0.0;
  double ratio_stderr = 0.0;  ///< delta method on (reward mean, second moment)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t censored = 0;
};

/// E[reward] / sqrt(E[x_T^2]) from a summary.
RatioReport ratio_from(const RunSummary& summary, Reward reward);

RatioReport ratio_report(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                         std::uint64_t seed, const RunOptions& opts = {});

namespace targets {
struct Exponential { double mean; };
struct Uniform { double hi; };
/// Density |x|/h^2 on [-h, h].
struct VShape { double hdiam; };
struct Empirical { std::vector<double> sample; };
/// Discrete law on `support` (matched to 1e-9) with masses `mass`.
struct DiscretePmf {
  std::vector<double> support;
  std::vector<double> mass;
};
}  // namespace targets

using GofTarget = std::variant<targets::Exponential, targets::Uniform, targets::VShape, targets::Empirical,
                               targets::DiscretePmf>;

/// One-sample KS for continuous targets, two-sample KS for Empirical, and
/// chi-square for DiscretePmf. Throws on an empty or constant sample.
TestResult gof_test(std::span<const double> sample, const GofTarget& target);

/// How Q is evaluated along simulated walks.
enum class QForm {
  lattice,    ///< q_lattice_value: exact expected payoff of the gap rule for the walk
  continuum,  ///< q_value on (D, G, t); carries an O(h) drift on the walk
};

struct DriftInterval {
  double t0 = 0.0;
  double t1 = 0.0;
  TrialStats unstopped;  ///< E[Q(t1) - Q(t0)]
  TrialStats stopped;    ///< E[Q(t1 ^ T) - Q(t0 ^ T)]
  bool unstopped_ok = false;
  bool stopped_ok = false;
};

struct DriftReport {
  double c = 0.0;
  double d = 0.0;
  double h = 0.0;
  QForm form = QForm::lattice;
  std::int64_t n = 0;
  double q_origin = 0.0;            ///< q_value(c, 1/(2c), 0, 0, 0)
  double q_origin_lattice = 0.0;    ///< walk counterpart at the origin
  std::vector<DriftInterval> intervals;

  bool all_ok() const noexcept;
};

/// Simulates n walks up to the last checkpoint with d = 1/(2c) and estimates
/// the increments of Q between consecutive checkpoints, for Q itself and for
/// Q stopped at the gap rule. Verdicts use a 3-standard-error band.
DriftReport drift_check(double c, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                        std::span<const double> checkpoints, QForm form = QForm::lattice,
                        const RunOptions& opts = {});

struct SweepPoint {
  double d = 0.0;
  TrialStats payoff;           ///< E[D(T_d) - c T_d] on the lattice h
  TrialStats extrapolated;     ///< 2 P(h/2) - P(h); valid when extrapolation is on
  double continuum = 0.0;      ///< 3d - 3cd^2
  double lattice_exact = 0.0;  ///< same for the walk: 3d - c(3d^2 + 2dh)
};

struct SweepCurve {
  double c = 0.0;
  double h = 0.0;
  bool extrapolated = false;
  std::vector<SweepPoint> points;
  double argmax_d = 0.0;      ///< from the extrapolated curve when available
  double argmax_raw_d = 0.0;  ///< from the lattice-h curve
  std::int64_t censored = 0;
};

/// Payoff curve of the gap rule over `d_grid` (each a multiple of h).
///
/// The walk's payoff bias is exactly -2cdh, so with `extrapolate` an
/// independent run on h/2 gives the unbiased Richardson estimate
/// 2 P(h/2) - P(h) alongside the raw lattice curve.
SweepCurve sweep_payoff(double c, std::span<const double> d_grid, const LatticeSpec& spec, std::int64_t n,
                        std::uint64_t seed, const RunOptions& opts = {}, bool extrapolate = true);

}  // namespace mdl
