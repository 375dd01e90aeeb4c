#include "mdl/q_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mdl {
namespace {

constexpr double kDomainSlack = 1e-12;

void check_domain(double delta, double gamma) {
  if (!(gamma >= 0.0) || !(delta >= 0.0) || gamma > delta / 2.0 + kDomainSlack) {
    throw std::domain_error("q is defined on 0 <= gamma <= delta/2; got delta=" + std::to_string(delta) +
                            ", gamma=" + std::to_string(gamma));
  }
}

}  // namespace

QParams::QParams(double cost, double gap_threshold) : c(cost), d(gap_threshold) {
  if (!(c > 0.0) || !(d > 0.0) || !std::isfinite(c) || !std::isfinite(d)) {
    throw std::invalid_argument("QParams requires c > 0 and d > 0");
  }
}

QBranch q_branch(const QParams& p, double delta, double gamma) noexcept {
  if (gamma >= p.d) return QBranch::stopped;
  if (delta < 2.0 * p.d) return QBranch::small_diameter;
  return QBranch::large_diameter;
}

double q_branch_term(const QParams& p, QBranch branch, double delta, double gamma) noexcept {
  const double c = p.c;
  const double d = p.d;
  switch (branch) {
    case QBranch::stopped: return 0.0;
    case QBranch::small_diameter:
      return 3.0 * d - delta - c * (gamma * (delta - gamma) + 3.0 * d * d - delta * delta / 2.0);
    case QBranch::large_diameter: return (d - gamma) * (1.0 - c * (d + gamma));
  }
  return 0.0;
}

double q_value(const QParams& p, double delta, double gamma, double t) {
  check_domain(delta, gamma);
  if (!(t >= 0.0)) throw std::domain_error("q requires t >= 0");
  return delta - p.c * t + q_branch_term(p, q_branch(p, delta, gamma), delta, gamma);
}

double payoff(double delta, double t, double c) { return delta - c * t; }

double q_gap_form(double c, double delta, double gamma) {
  if (!(c > 0.0)) throw std::domain_error("q_gap_form requires c > 0");
  check_domain(delta, gamma);
  const double inv_c = 1.0 / c;
  if (gamma >= 0.5 * inv_c) return 0.0;
  if (delta < inv_c) {
    const double centre = delta / 2.0 - gamma;
    return c * (0.25 * (inv_c - delta) * (3.0 * inv_c - delta) + centre * centre);
  }
  const double r = 0.5 * inv_c - gamma;
  return c * r * r;
}

double q_lattice_value(const QParams& p, const LatticeSpec& spec, std::int64_t below_max,
                       std::int64_t above_min, double t) {
  if (below_max < 0 || above_min < 0) throw std::domain_error("lattice distances must be nonnegative");
  const std::int64_t cells = spec.cells(p.d);
  const double h = spec.h();
  const double c = p.c;
  const double big_h = static_cast<double>(cells);
  const std::int64_t g = std::min(below_max, above_min);
  const double diameter = static_cast<double>(below_max + above_min) * h;
  if (g >= cells) return diameter - c * t;
  if (below_max + above_min >= 2 * cells) {
    // Walk reflected at the near extreme until it is `cells` away from it.
    const double remaining = static_cast<double>(cells - g);
    return diameter - c * t + remaining * h * (1.0 - c * h * (big_h + static_cast<double>(g) + 1.0));
  }
  // (a + 1/2)^2 + (b + 1/2)^2 - 2 n is a martingale of the walk before the
  // diameter reaches 2 * cells.
  const double ah = static_cast<double>(below_max) + 0.5;
  const double bh = static_cast<double>(above_min) + 0.5;
  const double target = (2.0 * big_h + 0.5) * (2.0 * big_h + 0.5) + 0.25;
  const double steps_to_diameter = (target - ah * ah - bh * bh) / 2.0;
  return 3.0 * big_h * h - c * h * h * big_h * (big_h + 1.0) - c * h * h * steps_to_diameter - c * t;
}

}  // namespace mdl
