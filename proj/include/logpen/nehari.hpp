#pragma once

// Fiber map g_u(t) = I(t u) and the projection onto the Nehari set
// {u : I'(u) u = 0}.  For u with positive part meeting Lambda_eps, g_u' is
// positive below a unique t_u and negative above it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "logpen/energy.hpp"
#include "logpen/error.hpp"

namespace logpen {

/// True iff some cell centred in Lambda_eps carries a positive value.
inline bool in_cone(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  for (std::size_t k = 0; k < u.size(); ++k)
    if (p.in_lambda[k] && u[k] > 0.0) return true;
  return false;
}

/// Precomputed fiber of a fixed direction u.
class Fiber {
 public:
  Fiber(const Problem& p, std::span<const double> u) : p_(&p) {
    require_on_grid(p, u);
    norm_sq_ = norm_eps_sq(p, u);
    for (std::size_t k = 0; k < u.size(); ++k)
      if (u[k] > 0.0) positive_.push_back({u[k], p.in_lambda[k] != 0});
  }

  double norm_sq() const { return norm_sq_; }

  double value(double t) const {
    double s = 0.0;
    for (const auto& c : positive_) {
      const double w = t * c.value;
      s += f1(w, p_->split()) - g2_at(c.inside, w, p_->penalty);
    }
    return 0.5 * t * t * norm_sq_ + s * p_->grid.cell_volume();
  }

  /// d/dt I(t u) = I'(t u) u, in closed form.
  double slope(double t) const {
    double s = 0.0;
    for (const auto& c : positive_) {
      const double w = t * c.value;
      s += (f1_prime(w, p_->split()) - g2_prime_at(c.inside, w, p_->penalty)) * c.value;
    }
    return t * norm_sq_ + s * p_->grid.cell_volume();
  }

 private:
  struct Cell {
    double value;
    bool inside;
  };
  const Problem* p_;
  double norm_sq_ = 0.0;
  std::vector<Cell> positive_;
};

inline double fiber(const Problem& p, std::span<const double> u, double t) {
  if (!in_cone(p, u)) throw ConeViolation("fiber: positive part of u misses Lambda_eps");
  return Fiber(p, u).value(t);
}

inline double fiber_slope(const Problem& p, std::span<const double> u, double t) {
  if (!in_cone(p, u)) throw ConeViolation("fiber_slope: positive part of u misses Lambda_eps");
  return Fiber(p, u).slope(t);
}

struct FiberResult {
  double t_u = 0.0;
  double slope_residual = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  int evaluations = 0;
};

struct ProjectionOptions {
  double guess = 1.0;       // first probe of the bracket search
  double t_min = 1e-6;      // lower end of the admissible bracket
  double t_max = 1e150;     // bracket search gives up beyond this
  double rel_width = 1e-12;
};

/// Locates t_u by bracketing (doubling/halving from the guess, staying in
/// [t_min, t_max]) and bisection to relative width rel_width.
inline FiberResult project_nehari(const Problem& p, std::span<const double> u,
                                  const ProjectionOptions& opt = {}) {
  if (!in_cone(p, u)) throw ConeViolation("project_nehari: positive part of u misses Lambda_eps");
  const Fiber fib(p, u);
  FiberResult r;
  const auto slope = [&](double t) {
    ++r.evaluations;
    return fib.slope(t);
  };

  double lo, hi;
  double t = std::clamp(opt.guess, opt.t_min, opt.t_max);
  if (slope(t) > 0.0) {
    lo = t;
    for (;;) {
      hi = 2.0 * lo;
      if (hi > opt.t_max) {
        std::ostringstream msg;
        msg << "project_nehari: fiber slope still positive at t = " << lo;
        throw BracketFailure(msg.str());
      }
      if (slope(hi) <= 0.0) break;
      lo = hi;
    }
  } else {
    hi = t;
    for (;;) {
      lo = 0.5 * hi;
      if (lo < opt.t_min) {
        if (slope(opt.t_min) > 0.0) {
          lo = opt.t_min;
          break;
        }
        throw BracketFailure("project_nehari: fiber slope not positive at t_min");
      }
      if (slope(lo) > 0.0) break;
      hi = lo;
    }
  }
  while (hi - lo > opt.rel_width * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double s = slope(mid);
    if (s > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  r.bracket = {lo, hi};
  r.t_u = 0.5 * (lo + hi);
  r.slope_residual = std::abs(slope(r.t_u));
  return r;
}

}  // namespace logpen
