#include "mdl/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdl/q_process.hpp"
#include "mdl/rng.hpp"
#include "parallel_trials.hpp"

namespace mdl {
namespace {

constexpr std::array<std::string_view, kRewardCount> kRewardNames = {
    "max", "min_abs", "abs_sup", "diameter", "drop_sup", "stop_time", "terminal_sq"};

constexpr std::size_t idx(Reward r) noexcept { return static_cast<std::size_t>(r); }

void require_trials(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("trial count must be >= 1");
}

std::int64_t guard_for(const LatticeRule& rule, const RunOptions& opts) {
  return opts.max_steps > 0 ? opts.max_steps : default_max_steps(rule);
}

struct SummaryBlock {
  std::int64_t trials = 0;
  std::int64_t censored = 0;
  CovAccumulator<kRewardCount> acc;
};

}  // namespace

std::string_view reward_name(Reward r) noexcept { return kRewardNames[idx(r)]; }

std::optional<Reward> parse_reward(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kRewardCount; ++i) {
    if (kRewardNames[i] == name) return static_cast<Reward>(i);
  }
  return std::nullopt;
}

std::array<double, kRewardCount> reward_vector(const StoppedPath& path, const LatticeSpec& spec) noexcept {
  const PathState& s = path.final_state;
  const double h = spec.h();
  return {static_cast<double>(s.run_max) * h,
          static_cast<double>(-s.run_min) * h,
          static_cast<double>(s.abs_sup()) * h,
          static_cast<double>(s.diameter()) * h,
          static_cast<double>(s.drop_sup) * h,
          path.stop_time,
          path.terminal_x * path.terminal_x};
}

TrialStats RunSummary::stats(Reward r) const {
  return TrialStats::from_moments(acc.count(), acc.mean(idx(r)), acc.covariance(idx(r), idx(r)), censored);
}

double RunSummary::covariance(Reward a, Reward b) const { return acc.covariance(idx(a), idx(b)); }

TrialStats RunSummary::combination(double wa, Reward a, double wb, Reward b) const {
  const double mean = wa * acc.mean(idx(a)) + wb * acc.mean(idx(b));
  const double var = wa * wa * covariance(a, a) + wb * wb * covariance(b, b) + 2.0 * wa * wb * covariance(a, b);
  return TrialStats::from_moments(acc.count(), mean, var, censored);
}

bool operator==(const RunSummary& x, const RunSummary& y) {
  if (x.trials != y.trials || x.censored != y.censored || x.acc.count() != y.acc.count()) return false;
  for (std::size_t i = 0; i < kRewardCount; ++i) {
    if (x.acc.mean(i) != y.acc.mean(i)) return false;
    for (std::size_t j = 0; j < kRewardCount; ++j) {
      if (x.acc.covariance(i, j) != y.acc.covariance(i, j)) return false;
    }
  }
  return true;
}

RunSummary simulate(const StopRule& rule, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                    const RunOptions& opts) {
  require_trials(n);
  const LatticeRule bound = bind(rule, spec);
  const std::int64_t guard = guard_for(bound, opts);
  auto blocks = detail::run_blocks(n, opts.block_size, opts.workers, SummaryBlock{},
                                   [&](SummaryBlock& blk, std::int64_t first, std::int64_t last) {
                                     for (std::int64_t k = first; k < last; ++k) {
                                       StepStream stream(seed, static_cast<std::uint64_t>(k));
                                       const StoppedPath p = run_until_stop(bound, spec, stream, guard);
                                       ++blk.trials;
                                       if (!p.fired) {
                                         ++blk.censored;
                                         continue;
                                       }
                                       blk.acc.add(reward_vector(p, spec));
                                     }
                                   });
  const SummaryBlock total = tree_reduce(std::move(blocks), [](SummaryBlock& a, const SummaryBlock& b) {
    a.trials += b.trials;
    a.censored += b.censored;
    a.acc.merge(b.acc);
  });
  return {total.trials, total.censored, total.acc};
}

RunSummary simulate_serial(const StopRule& rule, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                           const RunOptions& opts) {
  require_trials(n);
  const LatticeRule bound = bind(rule, spec);
  const std::int64_t guard = guard_for(bound, opts);
  RunSummary out;
  for (std::int64_t k = 0; k < n; ++k) {
    StepStream stream(seed, static_cast<std::uint64_t>(k));
    const StoppedPath p = run_until_stop(bound, spec, stream, guard);
    ++out.trials;
    if (!p.fired) {
      ++out.censored;
      continue;
    }
    out.acc.add(reward_vector(p, spec));
  }
  return out;
}

TrialStats estimate(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                    std::uint64_t seed, const RunOptions& opts) {
  return simulate(rule, spec, n, seed, opts).stats(reward);
}

std::vector<StoppedPath> run_trials(const StopRule& rule, const LatticeSpec& spec, std::int64_t n,
                                    std::uint64_t seed, const RunOptions& opts) {
  require_trials(n);
  const LatticeRule bound = bind(rule, spec);
  const std::int64_t guard = guard_for(bound, opts);
  std::vector<StoppedPath> out(static_cast<std::size_t>(n));
  detail::run_blocks(n, opts.block_size, opts.workers, 0, [&](int&, std::int64_t first, std::int64_t last) {
    for (std::int64_t k = first; k < last; ++k) {
      StepStream stream(seed, static_cast<std::uint64_t>(k));
      out[static_cast<std::size_t>(k)] = run_until_stop(bound, spec, stream, guard);
    }
  });
  return out;
}

std::vector<double> collect(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                            std::uint64_t seed, std::int64_t* censored, const RunOptions& opts) {
  const std::vector<StoppedPath> paths = run_trials(rule, spec, n, seed, opts);
  std::vector<double> values;
  values.reserve(paths.size());
  std::int64_t lost = 0;
  for (const StoppedPath& p : paths) {
    if (!p.fired) {
      ++lost;
      continue;
    }
    values.push_back(reward_vector(p, spec)[idx(reward)]);
  }
  if (censored != nullptr) *censored = lost;
  return values;
}

RatioReport ratio_from(const RunSummary& summary, Reward reward) {
  RatioReport r;
  r.reward_mean = summary.stats(reward);
  r.terminal_second_moment = summary.stats(Reward::terminal_sq);
  r.censored = summary.censored;
  const double mr = r.reward_mean.mean;
  const double ms = r.terminal_second_moment.mean;
  if (!(ms > 0.0)) throw std::runtime_error("terminal second moment is zero; the rule never moved");
  r.ratio = mr / std::sqrt(ms);
  const double g_r = 1.0 / std::sqrt(ms);
  const double g_s = -mr / (2.0 * ms * std::sqrt(ms));
  const double var = g_r * g_r * summary.covariance(reward, reward) +
                     2.0 * g_r * g_s * summary.covariance(reward, Reward::terminal_sq) +
                     g_s * g_s * summary.covariance(Reward::terminal_sq, Reward::terminal_sq);
  const double n = static_cast<double>(std::max<std::int64_t>(summary.acc.count(), 1));
  r.ratio_stderr = std::sqrt(std::max(var, 0.0) / n);
  r.ci_low = r.ratio - kZ99 * r.ratio_stderr;
  r.ci_high = r.ratio + kZ99 * r.ratio_stderr;
  return r;
}

RatioReport ratio_report(const StopRule& rule, Reward reward, const LatticeSpec& spec, std::int64_t n,
                         std::uint64_t seed, const RunOptions& opts) {
  return ratio_from(simulate(rule, spec, n, seed, opts), reward);
}

TestResult gof_test(std::span<const double> sample, const GofTarget& target) {
  if (sample.empty()) throw std::invalid_argument("goodness-of-fit sample is empty");
  if (const auto* e = std::get_if<targets::Exponential>(&target)) {
    if (!(e->mean > 0.0)) throw std::invalid_argument("exponential mean must be positive");
    const double mean = e->mean;
    return ks_one_sample(sample, [mean](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x / mean); });
  }
  if (const auto* u = std::get_if<targets::Uniform>(&target)) {
    if (!(u->hi > 0.0)) throw std::invalid_argument("uniform upper bound must be positive");
    const double hi = u->hi;
    return ks_one_sample(sample, [hi](double x) { return std::clamp(x / hi, 0.0, 1.0); });
  }
  if (const auto* v = std::get_if<targets::VShape>(&target)) {
    if (!(v->hdiam > 0.0)) throw std::invalid_argument("V-shape half-width must be positive");
    const double h2 = v->hdiam * v->hdiam;
    const double h = v->hdiam;
    return ks_one_sample(sample, [h, h2](double x) {
      if (x <= -h) return 0.0;
      if (x >= h) return 1.0;
      return x < 0.0 ? (h2 - x * x) / (2.0 * h2) : 0.5 + x * x / (2.0 * h2);
    });
  }
  if (const auto* emp = std::get_if<targets::Empirical>(&target)) {
    return ks_two_sample(sample, emp->sample);
  }
  const auto& pmf = std::get<targets::DiscretePmf>(target);
  if (pmf.support.size() != pmf.mass.size() || pmf.support.empty()) {
    throw std::invalid_argument("discrete pmf needs matching support and mass vectors");
  }
  {
    const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
    if (*lo == *hi) throw std::invalid_argument("goodness-of-fit sample is degenerate (all values equal)");
  }
  std::vector<std::size_t> order(pmf.support.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pmf.support[a] < pmf.support[b]; });
  std::vector<double> sorted_support;
  std::vector<double> probabilities;
  for (std::size_t i : order) {
    sorted_support.push_back(pmf.support[i]);
    probabilities.push_back(pmf.mass[i]);
  }
  std::vector<double> counts(sorted_support.size(), 0.0);
  for (double x : sample) {
    auto it = std::lower_bound(sorted_support.begin(), sorted_support.end(), x - 1e-9 * std::max(1.0, std::abs(x)));
    if (it == sorted_support.end() || std::abs(*it - x) > 1e-9 * std::max(1.0, std::abs(x))) {
      return {std::numeric_limits<double>::infinity(), 0.0};
    }
    counts[static_cast<std::size_t>(it - sorted_support.begin())] += 1.0;
  }
  return chi_square(counts, probabilities);
}

bool DriftReport::all_ok() const noexcept {
  return std::all_of(intervals.begin(), intervals.end(),
                     [](const DriftInterval& i) { return i.unstopped_ok && i.stopped_ok; });
}

namespace {

struct DriftBlock {
  std::vector<Accumulator> unstopped;
  std::vector<Accumulator> stopped;
};

}  // namespace

DriftReport drift_check(double c, const LatticeSpec& spec, std::int64_t n, std::uint64_t seed,
                        std::span<const double> checkpoints, QForm form, const RunOptions& opts) {
  require_trials(n);
  if (checkpoints.size() < 2) throw std::invalid_argument("drift check needs at least two checkpoints");
  const QParams params = QParams::optimal(c);
  const std::int64_t gap_cells = spec.cells(params.d);
  std::vector<std::int64_t> cp_steps;
  for (double t : checkpoints) cp_steps.push_back(spec.steps_for(t));
  if (!std::is_sorted(cp_steps.begin(), cp_steps.end())) {
    throw std::invalid_argument("checkpoints must be nondecreasing");
  }

  const double dt = spec.time_per_step();
  const double h = spec.h();
  auto q_of = [&](const PathState& s) {
    const double t = static_cast<double>(s.steps) * dt;
    if (form == QForm::lattice) return q_lattice_value(params, spec, s.drop(), s.rise(), t);
    return q_value(params, static_cast<double>(s.diameter()) * h, static_cast<double>(s.gap()) * h, t);
  };

  const std::size_t intervals = cp_steps.size() - 1;
  DriftBlock init{std::vector<Accumulator>(intervals), std::vector<Accumulator>(intervals)};
  auto blocks = detail::run_blocks(n, opts.block_size, opts.workers, init,
                                   [&](DriftBlock& blk, std::int64_t first, std::int64_t last) {
                                     for (std::int64_t k = first; k < last; ++k) {
                                       StepStream stream(seed, static_cast<std::uint64_t>(k));
                                       PathState s = init_state();
                                       PathState frozen{};
                                       bool stopped = false;
                                       double prev_u = 0.0;
                                       double prev_s = 0.0;
                                       for (std::size_t j = 0; j < cp_steps.size(); ++j) {
                                         while (s.steps < cp_steps[j]) {
                                           advance_in_place(s, stream.next_up());
                                           if (!stopped && s.gap() >= gap_cells) {
                                             stopped = true;
                                             frozen = s;
                                           }
                                         }
                                         const double qu = q_of(s);
                                         const double qs = stopped ? q_of(frozen) : qu;
                                         if (j > 0) {
                                           blk.unstopped[j - 1].add(qu - prev_u);
                                           blk.stopped[j - 1].add(qs - prev_s);
                                         }
                                         prev_u = qu;
                                         prev_s = qs;
                                       }
                                     }
                                   });
  const DriftBlock total = tree_reduce(std::move(blocks), [](DriftBlock& a, const DriftBlock& b) {
    for (std::size_t i = 0; i < a.unstopped.size(); ++i) {
      a.unstopped[i].merge(b.unstopped[i]);
      a.stopped[i].merge(b.stopped[i]);
    }
  });

  DriftReport report;
  report.c = c;
  report.d = params.d;
  report.h = h;
  report.form = form;
  report.n = n;
  report.q_origin = q_value(params, 0.0, 0.0, 0.0);
  report.q_origin_lattice = q_lattice_value(params, spec, 0, 0, 0.0);
  for (std::size_t i = 0; i < intervals; ++i) {
    DriftInterval iv;
    iv.t0 = checkpoints[i];
    iv.t1 = checkpoints[i + 1];
    iv.unstopped = TrialStats::from(total.unstopped[i]);
    iv.stopped = TrialStats::from(total.stopped[i]);
    iv.unstopped_ok = iv.unstopped.mean <= 3.0 * iv.unstopped.stderr_of_mean();
    iv.stopped_ok = std::abs(iv.stopped.mean) <= 3.0 * iv.stopped.stderr_of_mean();
    report.intervals.push_back(iv);
  }
  return report;
}

SweepCurve sweep_payoff(double c, std::span<const double> d_grid, const LatticeSpec& spec, std::int64_t n,
                        std::uint64_t seed, const RunOptions& opts, bool extrapolate) {
  if (!(c > 0.0)) throw std::invalid_argument("sweep requires c > 0");
  if (d_grid.empty()) throw std::invalid_argument("sweep grid is empty");
  for (double d : d_grid) bind(rules::Gap{d}, spec);
  const LatticeSpec half(spec.h() / 2.0);

  SweepCurve curve;
  curve.c = c;
  curve.h = spec.h();
  curve.extrapolated = extrapolate;
  double best = -std::numeric_limits<double>::infinity();
  double best_raw = best;
  for (std::size_t i = 0; i < d_grid.size(); ++i) {
    const double d = d_grid[i];
    const RunSummary coarse = simulate(rules::Gap{d}, spec, n, mix_seed(seed, 2 * i), opts);
    SweepPoint pt;
    pt.d = d;
    pt.payoff = coarse.combination(1.0, Reward::diameter, -c, Reward::stop_time);
    pt.continuum = 3.0 * d - 3.0 * c * d * d;
    pt.lattice_exact = 3.0 * d - c * (3.0 * d * d + 2.0 * d * spec.h());
    curve.censored += coarse.censored;
    if (extrapolate) {
      const RunSummary fine = simulate(rules::Gap{d}, half, n, mix_seed(seed, 2 * i + 1), opts);
      const TrialStats f = fine.combination(1.0, Reward::diameter, -c, Reward::stop_time);
      curve.censored += fine.censored;
      // Equal trial counts: Var(2F - C) per trial is 4 var_F + var_C.
      pt.extrapolated = TrialStats::from_moments(std::min(f.n, pt.payoff.n), 2.0 * f.mean - pt.payoff.mean,
                                                 4.0 * f.variance + pt.payoff.variance,
                                                 coarse.censored + fine.censored);
    }
    const double score = extrapolate ? pt.extrapolated.mean : pt.payoff.mean;
    if (score > best) {
      best = score;
      curve.argmax_d = d;
    }
    if (pt.payoff.mean > best_raw) {
      best_raw = pt.payoff.mean;
      curve.argmax_raw_d = d;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace mdl
