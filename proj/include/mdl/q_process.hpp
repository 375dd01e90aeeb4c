#pragma once

#include <cstdint>

#include "mdl/path_engine.hpp"

namespace mdl {

/// Cost rate c and gap threshold d of the c-problem; both must be positive.
struct QParams {
  double c;
  double d;

  QParams(double cost, double gap_threshold);

  /// The pairing d = 1/(2c) under which the gap rule is optimal.
  static QParams optimal(double cost) { return QParams(cost, 0.5 / cost); }
};

enum class QBranch {
  stopped,         ///< gamma >= d
  small_diameter,  ///< delta < 2d
  large_diameter,  ///< delta >= 2d, gamma < d
};

/// Which branch of q the point (delta, gamma) dispatches to.
QBranch q_branch(const QParams& p, double delta, double gamma) noexcept;

/// The additive term of a specific branch, evaluated without dispatch.
double q_branch_term(const QParams& p, QBranch branch, double delta, double gamma) noexcept;

/// q_{c,d}(delta, gamma, t): expected payoff of continuing with the gap rule
/// from diameter delta and gap gamma, net of the cost already paid.
///
/// Domain 0 <= gamma <= delta/2 (absolute slack 1e-12), t >= 0; throws
/// std::domain_error outside it.
double q_value(const QParams& p, double delta, double gamma, double t);

/// D - c t.
double payoff(double delta, double t, double c);

/// Q - Pi in closed form for d = 1/(2c). Nonnegative on the domain.
double q_gap_form(double c, double delta, double gamma);

/// Walk counterpart of q: the exact expected payoff of the gap rule for the
/// +-h lattice walk, from a state `below_max` cells under the running maximum
/// and `above_min` cells over the running minimum, at elapsed time t.
///
/// Reduces to q_value as h -> 0. With d = 1/(2c), Q evaluated with this
/// function is an exact martingale of the walk until the gap rule fires and
/// a supermartingale afterwards. Requires d to be a multiple of h.
double q_lattice_value(const QParams& p, const LatticeSpec& spec, std::int64_t below_max,
                       std::int64_t above_min, double t);

}  // namespace mdl
