#pragma once

// del Pino-Felmer style penalization of the superlinear part F2': outside the
// well region the nonlinearity is replaced by the linear function l*s above
// the threshold a0 where F2'(a0)/a0 = l.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/logsplit.hpp"

namespace logpen {

/// Open interval (1-D) or open axis-aligned box (2-D), in unscaled coordinates.
struct Region {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  bool contains(const Point& x) const {
    for (int a = 0; a < dim; ++a)
      if (!(x[a] > lo[a] && x[a] < hi[a])) return false;
    return true;
  }

  /// Membership of x in the rescaled region {x : eps x in Region}.
  bool contains_scaled(const Point& x, double eps) const {
    return contains({eps * x[0], eps * x[1]});
  }

  bool operator==(const Region&) const = default;
};

inline void validate(const Region& r) {
  if (r.dim != 1 && r.dim != 2) throw ConfigError("region dimension must be 1 or 2");
  for (int a = 0; a < r.dim; ++a)
    if (!(r.lo[a] < r.hi[a]) || !std::isfinite(r.lo[a]) || !std::isfinite(r.hi[a]))
      throw ConfigError("region must be bounded and nonempty");
}

struct PenaltyParams {
  double l = 0.25;
  double a0 = 0.0;
  SplitParams split;
  Region lambda;
  double eps = 1.0;
};

/// l = (V0 + 1) / 4, which keeps V0 + 1 >= 2l with room to spare.
inline double choose_l(double V0, double fraction = 0.25) {
  if (!(V0 > -1.0)) {
    std::ostringstream msg;
    msg << "potential lower bound violated: inf V = " << V0 << " must exceed -1";
    throw HypothesisViolation(msg.str());
  }
  if (!(fraction > 0.0 && fraction <= 0.5))
    throw ConfigError("l fraction must lie in (0, 1/2]");
  return fraction * (V0 + 1.0);
}

/// Unique root of F2'(s)/s = l on (delta, inf).  F2'(s)/s is 0 at delta and
/// strictly increasing beyond it, so bisection after a doubling bracket
/// always converges.
inline double solve_a0(const SplitParams& split, double l) {
  if (!(l > 0.0)) throw ConfigError("l must be positive");
  const auto excess = [&](double s) { return f2_prime(s, split) / s - l; };
  double lo = split.delta;
  double hi = 2.0 * split.delta;
  while (excess(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw BracketFailure("a0 bracket search exceeded s = 1e6");
  }
  // Bisect to floating-point exhaustion.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
}

inline PenaltyParams make_penalty(const SplitParams& split, double V0, const Region& lambda,
                                  double eps, double l_fraction = 0.25) {
  validate(split);
  validate(lambda);
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  PenaltyParams p;
  p.split = split;
  p.l = choose_l(V0, l_fraction);
  p.a0 = solve_a0(split, p.l);
  p.lambda = lambda;
  p.eps = eps;
  return p;
}

inline double f2_tilde_prime(double s, const PenaltyParams& p) {
  if (s < 0.0) throw ConfigError("truncated nonlinearity is defined for s >= 0 only");
  return s <= p.a0 ? f2_prime(s, p.split) : p.l * s;
}

/// Cell-level variants take the Lambda membership directly.
inline double g2_prime_at(bool inside, double s, const PenaltyParams& p) {
  if (inside || s <= p.a0) return f2_prime(s, p.split);
  return p.l * s;
}

inline double g2_at(bool inside, double s, const PenaltyParams& p) {
  if (inside || s <= p.a0) return f2(s, p.split);
  return f2(p.a0, p.split) + 0.5 * p.l * (s - p.a0) * (s + p.a0);
}

/// G2'(x, s) with x in unscaled coordinates (callers pass eps * x).
inline double g2_prime(const Point& x, double s, const PenaltyParams& p) {
  if (s < 0.0) throw ConfigError("penalized nonlinearity is defined for s >= 0 only");
  return g2_prime_at(p.lambda.contains(x), s, p);
}

inline double g2(const Point& x, double s, const PenaltyParams& p) {
  if (s < 0.0) throw ConfigError("penalized nonlinearity is defined for s >= 0 only");
  return g2_at(p.lambda.contains(x), s, p);
}

}  // namespace logpen
