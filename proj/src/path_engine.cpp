#include "mdl/path_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdl {
namespace {

constexpr double kMultipleTol = 1e-9;

bool near_integer(double v) noexcept {
  return std::abs(v - std::round(v)) <= kMultipleTol * std::max(1.0, std::abs(v));
}

}  // namespace

LatticeSpec::LatticeSpec(double h) : h_(h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("lattice step h must be positive and finite, got " + std::to_string(h));
  }
}

bool LatticeSpec::is_multiple(double length) const noexcept {
  return std::isfinite(length) && near_integer(length / h_);
}

std::int64_t LatticeSpec::cells(double length) const {
  if (!is_multiple(length)) {
    throw std::invalid_argument("threshold " + std::to_string(length) +
                                " is not an integer multiple of h = " + std::to_string(h_));
  }
  return static_cast<std::int64_t>(std::llround(length / h_));
}

std::int64_t LatticeSpec::steps_for(double time) const {
  const double steps = time / time_per_step();
  if (!(time >= 0.0) || !near_integer(steps)) {
    throw std::invalid_argument("time " + std::to_string(time) +
                                " is not a nonnegative multiple of h^2 = " + std::to_string(time_per_step()));
  }
  return static_cast<std::int64_t>(std::llround(steps));
}

RealPathState to_real(const PathState& s, const LatticeSpec& spec) noexcept {
  const double h = spec.h();
  return {static_cast<double>(s.steps) * spec.time_per_step(),
          static_cast<double>(s.x) * h,
          static_cast<double>(s.run_max) * h,
          static_cast<double>(s.run_min) * h,
          static_cast<double>(s.diameter()) * h,
          static_cast<double>(s.gap()) * h,
          static_cast<double>(s.abs_sup()) * h,
          static_cast<double>(s.drop_sup) * h,
          static_cast<double>(s.rise_sup) * h};
}

}  // namespace mdl
