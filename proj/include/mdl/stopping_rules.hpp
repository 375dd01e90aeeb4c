#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <variant>

#include "mdl/path_engine.hpp"

namespace mdl {

namespace rules {
/// First time the walk is d below its running maximum.
struct Drawdown { double d; };
/// First time the walk is d above its running minimum.
struct Rise { double d; };
/// First time sup|x| - |x| >= d.
struct AbsGap { double d; };
/// First time the distance to the nearer running extreme is >= d.
struct Gap { double d; };
/// First time the drop process (run_max - x) falls d below its own running sup.
struct DropDrawdown { double d; };
/// First time the range visited reaches `diameter`.
struct DiameterReach { double diameter; };
/// First exit from (lo, hi), lo < 0 < hi.
struct FirstExit { double lo, hi; };
/// Deterministic horizon; used for fixed-time ensembles and as an ad-hoc rule.
struct FixedTime { double t; };
}  // namespace rules

using StopRule = std::variant<rules::Drawdown, rules::Rise, rules::AbsGap, rules::Gap,
                              rules::DropDrawdown, rules::DiameterReach, rules::FirstExit,
                              rules::FixedTime>;

std::string rule_name(const StopRule& rule);

enum class RuleKind { drawdown, rise, abs_gap, gap, drop_drawdown, diameter_reach, first_exit, fixed_time };

/// A rule whose thresholds have been converted to whole lattice cells.
struct LatticeRule {
  RuleKind kind;
  std::int64_t a = 0;  ///< main threshold (cells), or lower exit level, or step count
  std::int64_t b = 0;  ///< upper exit level for first_exit
};

/// Validates positivity and lattice compatibility; throws std::invalid_argument.
LatticeRule bind(const StopRule& rule, const LatticeSpec& spec);

constexpr bool should_stop(const LatticeRule& r, const PathState& s) noexcept {
  switch (r.kind) {
    case RuleKind::drawdown: return s.drop() >= r.a;
    case RuleKind::rise: return s.rise() >= r.a;
    case RuleKind::abs_gap: return s.abs_sup() - s.abs_x() >= r.a;
    case RuleKind::gap: return s.gap() >= r.a;
    case RuleKind::drop_drawdown: return s.drop_sup - s.drop() >= r.a;
    case RuleKind::diameter_reach: return s.diameter() >= r.a;
    case RuleKind::first_exit: return s.x <= r.a || s.x >= r.b;
    case RuleKind::fixed_time: return s.steps >= r.a;
  }
  return false;
}

bool should_stop(const StopRule& rule, const PathState& state, const LatticeSpec& spec);

/// 400 * (L/h)^2 steps, L the rule's length scale; about 100x the mean for gap-type rules.
std::int64_t default_max_steps(const LatticeRule& rule);

struct StoppedPath {
  double stop_time = 0.0;
  double terminal_x = 0.0;
  PathState final_state{};
  bool fired = false;  ///< false when the step guard was exhausted (censored trial)
};

namespace detail {

template <class Stream>
concept BulkStream = requires(Stream& s, unsigned& n, std::uint64_t w) {
  { s.take_bits(n) } -> std::same_as<std::uint64_t>;
  s.put_back(w, n);
};

template <class Stream, class Pred>
inline void run_loop(PathState& state, Stream& stream, std::int64_t max_steps, bool& fired, Pred pred) {
  // Work on a local copy: PathState's int64 fields may alias the stream's
  // uint64 buffer, which would otherwise force a reload after every draw.
  PathState s = state;
  fired = true;
  if constexpr (BulkStream<Stream>) {
    unsigned count = 0;
    std::uint64_t word = 0;
    while (!pred(s)) {
      if (s.steps >= max_steps) {
        fired = false;
        break;
      }
      if (count == 0) word = stream.take_bits(count);
      advance_in_place(s, (word & 1U) != 0);
      word >>= 1;
      --count;
    }
    stream.put_back(word, count);
  } else {
    while (!pred(s)) {
      if (s.steps >= max_steps) {
        fired = false;
        break;
      }
      advance_in_place(s, stream.next_up());
    }
  }
  state = s;
}

}  // namespace detail

/// Advances from the origin until the rule first fires or `max_steps` is hit.
///
/// `Stream` is anything with `bool next_up()`.
template <class Stream>
StoppedPath run_until_stop(const LatticeRule& r, const LatticeSpec& spec, Stream& stream,
                           std::int64_t max_steps) {
  PathState s = init_state();
  bool fired = false;
  const std::int64_t a = r.a;
  const std::int64_t b = r.b;
  switch (r.kind) {
    case RuleKind::drawdown:
      detail::run_loop(s, stream, max_steps, fired, [a](const PathState& p) { return p.drop() >= a; });
      break;
    case RuleKind::rise:
      detail::run_loop(s, stream, max_steps, fired, [a](const PathState& p) { return p.rise() >= a; });
      break;
    case RuleKind::abs_gap:
      detail::run_loop(s, stream, max_steps, fired,
                       [a](const PathState& p) { return p.abs_sup() - p.abs_x() >= a; });
      break;
    case RuleKind::gap:
      detail::run_loop(s, stream, max_steps, fired, [a](const PathState& p) { return p.gap() >= a; });
      break;
    case RuleKind::drop_drawdown:
      detail::run_loop(s, stream, max_steps, fired,
                       [a](const PathState& p) { return p.drop_sup - p.drop() >= a; });
      break;
    case RuleKind::diameter_reach:
      detail::run_loop(s, stream, max_steps, fired, [a](const PathState& p) { return p.diameter() >= a; });
      break;
    case RuleKind::first_exit:
      detail::run_loop(s, stream, max_steps, fired,
                       [a, b](const PathState& p) { return p.x <= a || p.x >= b; });
      break;
    case RuleKind::fixed_time:
      detail::run_loop(s, stream, max_steps, fired, [a](const PathState& p) { return p.steps >= a; });
      break;
  }
  StoppedPath out;
  out.final_state = s;
  out.fired = fired;
  out.stop_time = static_cast<double>(s.steps) * spec.time_per_step();
  out.terminal_x = static_cast<double>(s.x) * spec.h();
  return out;
}

template <class Stream>
StoppedPath run_until_stop(const StopRule& rule, const LatticeSpec& spec, Stream& stream,
                           std::int64_t max_steps) {
  return run_until_stop(bind(rule, spec), spec, stream, max_steps);
}

}  // namespace mdl
