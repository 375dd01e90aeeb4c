#pragma once

#include <algorithm>
#include <cstdint>

namespace mdl {

/// Symmetric +-h lattice with diffusive time step h^2.
class LatticeSpec {
 public:
  explicit LatticeSpec(double h);

  double h() const noexcept { return h_; }
  double time_per_step() const noexcept { return h_ * h_; }

  /// True when `length` is an integer multiple of h (relative tolerance 1e-9).
  bool is_multiple(double length) const noexcept;

  /// `length / h` as an exact integer; throws std::invalid_argument otherwise.
  std::int64_t cells(double length) const;

  /// Number of steps covering `time`; throws unless time is a multiple of h^2.
  std::int64_t steps_for(double time) const;

 private:
  double h_;
};

enum class Direction { up, down };

/// Running statistics of a lattice path started at 0, in lattice units.
///
/// Positions are counted in cells of size h and time in steps of h^2, which
/// keeps every threshold comparison exact. `RealPathState` gives the
/// physical view.
struct PathState {
  std::int64_t steps = 0;
  std::int64_t x = 0;
  std::int64_t run_max = 0;
  std::int64_t run_min = 0;
  std::int64_t drop_sup = 0;  ///< sup over prefixes of run_max - x
  std::int64_t rise_sup = 0;  ///< sup over prefixes of x - run_min

  constexpr std::int64_t drop() const noexcept { return run_max - x; }
  constexpr std::int64_t rise() const noexcept { return x - run_min; }
  constexpr std::int64_t diameter() const noexcept { return run_max - run_min; }
  constexpr std::int64_t gap() const noexcept { return std::min(drop(), rise()); }
  constexpr std::int64_t abs_sup() const noexcept { return std::max(run_max, -run_min); }
  constexpr std::int64_t abs_x() const noexcept { return x < 0 ? -x : x; }

  friend constexpr bool operator==(const PathState&, const PathState&) = default;
};

constexpr PathState init_state() noexcept { return {}; }

/// O(1) update of every running statistic for one step. Branch-free: the
/// step direction is a coin flip, so a branch would mispredict half the time.
constexpr void advance_in_place(PathState& s, bool up) noexcept {
  ++s.steps;
  s.x += 2 * static_cast<std::int64_t>(up) - 1;
  s.run_max = std::max(s.run_max, s.x);
  s.run_min = std::min(s.run_min, s.x);
  s.drop_sup = std::max(s.drop_sup, s.run_max - s.x);
  s.rise_sup = std::max(s.rise_sup, s.x - s.run_min);
}

constexpr PathState advance(PathState s, Direction d) noexcept {
  advance_in_place(s, d == Direction::up);
  return s;
}

/// Mirror image of a path state (every step negated).
constexpr PathState mirrored(const PathState& s) noexcept {
  return {s.steps, -s.x, -s.run_min, -s.run_max, s.rise_sup, s.drop_sup};
}

/// Physical (h-scaled) view of a PathState.
struct RealPathState {
  double t, x, run_max, run_min, diameter, gap, abs_sup, drop_sup, rise_sup;
};

RealPathState to_real(const PathState& s, const LatticeSpec& spec) noexcept;

}  // namespace mdl
