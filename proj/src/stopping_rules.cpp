#include "mdl/stopping_rules.hpp"

#include <cmath>
#include <stdexcept>

namespace mdl {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::int64_t positive_cells(double v, const LatticeSpec& spec, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  return spec.cells(v);
}

}  // namespace

std::string rule_name(const StopRule& rule) {
  return std::visit(overloaded{
                        [](const rules::Drawdown&) { return std::string("drawdown"); },
                        [](const rules::Rise&) { return std::string("rise"); },
                        [](const rules::AbsGap&) { return std::string("abs_gap"); },
                        [](const rules::Gap&) { return std::string("gap"); },
                        [](const rules::DropDrawdown&) { return std::string("drop_drawdown"); },
                        [](const rules::DiameterReach&) { return std::string("diameter_reach"); },
                        [](const rules::FirstExit&) { return std::string("first_exit"); },
                        [](const rules::FixedTime&) { return std::string("fixed_time"); },
                    },
                    rule);
}

LatticeRule bind(const StopRule& rule, const LatticeSpec& spec) {
  return std::visit(
      overloaded{
          [&](const rules::Drawdown& r) { return LatticeRule{RuleKind::drawdown, positive_cells(r.d, spec, "d")}; },
          [&](const rules::Rise& r) { return LatticeRule{RuleKind::rise, positive_cells(r.d, spec, "d")}; },
          [&](const rules::AbsGap& r) { return LatticeRule{RuleKind::abs_gap, positive_cells(r.d, spec, "d")}; },
          [&](const rules::Gap& r) { return LatticeRule{RuleKind::gap, positive_cells(r.d, spec, "d")}; },
          [&](const rules::DropDrawdown& r) {
            return LatticeRule{RuleKind::drop_drawdown, positive_cells(r.d, spec, "d")};
          },
          [&](const rules::DiameterReach& r) {
            return LatticeRule{RuleKind::diameter_reach, positive_cells(r.diameter, spec, "diameter")};
          },
          [&](const rules::FirstExit& r) {
            if (!(r.lo < 0.0 && r.hi > 0.0)) {
              throw std::invalid_argument("first exit interval must satisfy lo < 0 < hi");
            }
            return LatticeRule{RuleKind::first_exit, -positive_cells(-r.lo, spec, "-lo"),
                               positive_cells(r.hi, spec, "hi")};
          },
          [&](const rules::FixedTime& r) {
            if (!(r.t > 0.0)) throw std::invalid_argument("fixed time must be positive");
            return LatticeRule{RuleKind::fixed_time, spec.steps_for(r.t)};
          },
      },
      rule);
}

bool should_stop(const StopRule& rule, const PathState& state, const LatticeSpec& spec) {
  return should_stop(bind(rule, spec), state);
}

std::int64_t default_max_steps(const LatticeRule& rule) {
  if (rule.kind == RuleKind::fixed_time) return rule.a;
  const std::int64_t scale = rule.kind == RuleKind::first_exit ? std::max(-rule.a, rule.b) : rule.a;
  return 400 * scale * scale;
}

}  // namespace mdl
