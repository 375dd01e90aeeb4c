#include "mdl/statistics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace mdl {

void Accumulator::merge(const Accumulator& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double delta = o.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += o.m2_ + delta * delta * na * nb / n;
  n_ += o.n_;
}

TrialStats TrialStats::from_moments(std::int64_t n, double mean, double variance, std::int64_t censored) {
  TrialStats s;
  s.n = n;
  s.mean = mean;
  s.variance = std::max(variance, 0.0);
  s.censored = censored;
  const double half = kZ99 * s.stderr_of_mean();
  s.ci_low = mean - half;
  s.ci_high = mean + half;
  return s;
}

double kolmogorov_survival(double lambda) noexcept {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double sum = 0.0;
    double term = y;
    for (int k = 1; k <= 7; ++k) {
      sum += term;
      const double next = static_cast<double>(2 * k + 1);
      term = std::pow(y, next * next);
    }
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double kk = static_cast<double>(k);
    const double term = std::exp(-2.0 * kk * kk * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_pvalue(double stat, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * stat);
}

void reject_degenerate(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("goodness-of-fit sample is empty");
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  if (*lo == *hi) throw std::invalid_argument("goodness-of-fit sample is degenerate (all values equal)");
}

}  // namespace

TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  reject_degenerate(sample);
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    stat = std::max({stat, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {stat, ks_pvalue(stat, n)};
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  reject_degenerate(a);
  reject_degenerate(b);
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double stat = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {stat, ks_pvalue(stat, na * nb / (na + nb))};
}

TestResult chi_square(std::span<const double> observed, std::span<const double> probabilities,
                      double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw std::invalid_argument("chi-square needs matching nonempty count and probability vectors");
  }
  double total = 0.0;
  for (double o : observed) total += o;
  if (!(total > 0.0)) throw std::invalid_argument("chi-square needs a nonempty sample");

  std::vector<double> obs_cells;
  std::vector<double> exp_cells;
  double obs_acc = 0.0;
  double exp_acc = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    obs_acc += observed[k];
    exp_acc += probabilities[k] * total;
    if (exp_acc >= min_expected) {
      obs_cells.push_back(obs_acc);
      exp_cells.push_back(exp_acc);
      obs_acc = exp_acc = 0.0;
    }
  }
  if (obs_acc > 0.0 || exp_acc > 0.0) {
    if (exp_cells.empty()) {
      obs_cells.push_back(obs_acc);
      exp_cells.push_back(exp_acc);
    } else {
      obs_cells.back() += obs_acc;
      exp_cells.back() += exp_acc;
    }
  }
  double stat = 0.0;
  for (std::size_t k = 0; k < obs_cells.size(); ++k) {
    if (exp_cells[k] <= 0.0) {
      if (obs_cells[k] > 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
      continue;
    }
    const double diff = obs_cells[k] - exp_cells[k];
    stat += diff * diff / exp_cells[k];
  }
  const double dof = static_cast<double>(obs_cells.size()) - 1.0;
  if (dof < 1.0) return {stat, 1.0};
  return {stat, boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat))};
}

}  // namespace mdl
