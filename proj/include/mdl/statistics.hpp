#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mdl {

/// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

/// Welford accumulator with Chan et al. pairwise merge.
class Accumulator {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const Accumulator& other) noexcept;

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Joint mean and co-moment accumulator for a fixed number of variables.
template <std::size_t K>
class CovAccumulator {
 public:
  void add(const std::array<double, K>& x) noexcept {
    ++n_;
    const double inv_n = 1.0 / static_cast<double>(n_);
    std::array<double, K> delta{};
    for (std::size_t i = 0; i < K; ++i) {
      delta[i] = x[i] - mean_[i];
      mean_[i] += delta[i] * inv_n;
    }
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) comoment_[i][j] += delta[i] * (x[j] - mean_[j]);
    }
  }

  void merge(const CovAccumulator& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    std::array<double, K> delta{};
    for (std::size_t i = 0; i < K; ++i) delta[i] = o.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        comoment_[i][j] += o.comoment_[i][j] + delta[i] * delta[j] * na * nb / n;
      }
    }
    for (std::size_t i = 0; i < K; ++i) mean_[i] += delta[i] * nb / n;
    n_ += o.n_;
  }

  std::int64_t count() const noexcept { return n_; }
  double mean(std::size_t i) const noexcept { return mean_[i]; }
  double covariance(std::size_t i, std::size_t j) const noexcept {
    return n_ > 1 ? comoment_[i][j] / static_cast<double>(n_ - 1) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  std::array<double, K> mean_{};
  std::array<std::array<double, K>, K> comoment_{};
};

/// Pooled Monte Carlo estimate with a 99% normal-approximation interval.
struct TrialStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t censored = 0;

  double stderr_of_mean() const noexcept {
    return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
  }

  static TrialStats from_moments(std::int64_t n, double mean, double variance, std::int64_t censored = 0);
  static TrialStats from(const Accumulator& acc, std::int64_t censored = 0) {
    return from_moments(acc.count(), acc.mean(), acc.variance(), censored);
  }
};

/// Reduces per-block values in a fixed binary-tree order so the result does
/// not depend on how blocks were scheduled.
template <class T, class Merge>
T tree_reduce(std::vector<T> items, Merge merge) {
  if (items.empty()) return T{};
  for (std::size_t stride = 1; stride < items.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < items.size(); i += 2 * stride) merge(items[i], items[i + stride]);
  }
  return items.front();
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov limiting survival function P(K > lambda).
double kolmogorov_survival(double lambda) noexcept;

/// One-sample Kolmogorov-Smirnov against a continuous CDF.
TestResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov; ties across samples are handled jointly.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square of counts against expected probabilities. Adjacent
/// cells are pooled until every expected count is at least `min_expected`.
TestResult chi_square(std::span<const double> observed, std::span<const double> probabilities,
                      double min_expected = 5.0);

}  // namespace mdl
