#pragma once

// Splitting of the logarithmic term  s^2 log s^2 / 2 = F2(s) - F1(s)  into a
// convex nonnegative part F1 and a C^1 part F2 that vanishes near zero.
// Every branch is written in closed form so that nothing near s = 0 or
// s = delta is computed as a difference of large logarithms.

#include <cmath>

#include "logpen/error.hpp"

namespace logpen {

struct SplitParams {
  double delta = 0.1;
  double p_diag = 4.0;  // growth exponent used only by the diagnostic bound
};

/// Largest delta for which F1 is convex: F1'' = -log s^2 - 3 on the inner
/// branch and -(log delta^2 + 3) on the outer one.
inline double delta_convexity_bound() { return std::exp(-1.5); }

inline void validate(const SplitParams& p) {
  if (!(p.delta > 0.0) || p.delta > delta_convexity_bound())
    throw ConfigError("delta must lie in (0, e^{-3/2}]");
  if (!(p.p_diag > 2.0) || !std::isfinite(p.p_diag))
    throw ConfigError("p_diag must be a finite exponent > 2");
}

/// s^2 log s^2 with the value 0 at s = 0.
inline double s2_log_s2(double s) {
  if (s == 0.0) return 0.0;
  return 2.0 * s * s * std::log(std::abs(s));
}

inline double f1(double s, const SplitParams& p) {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  const double d = p.delta;
  if (a < d) return -a * a * std::log(a);
  return -0.5 * a * a * (2.0 * std::log(d) + 3.0) + 2.0 * d * a - 0.5 * d * d;
}

inline double f1_prime(double s, const SplitParams& p) {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  const double d = p.delta;
  if (a < d) return -s * (2.0 * std::log(a) + 1.0);
  return -s * (2.0 * std::log(d) + 3.0) + std::copysign(2.0 * d, s);
}

inline double f2(double s, const SplitParams& p) {
  const double a = std::abs(s);
  const double d = p.delta;
  if (a <= d) return 0.0;
  // -3a^2/2 + 2da - d^2/2 factors as -(3a - d)(a - d)/2
  return a * a * std::log(a / d) - 0.5 * (3.0 * a - d) * (a - d);
}

inline double f2_prime(double s, const SplitParams& p) {
  const double a = std::abs(s);
  const double d = p.delta;
  if (a <= d) return 0.0;
  return std::copysign(2.0 * a * std::log(a / d) - 2.0 * (a - d), s);
}

}  // namespace logpen
