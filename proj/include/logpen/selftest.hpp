#pragma once

// Quick invariant suites run by `logpen selftest`.  Each check is small
// enough to finish in well under a second.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "logpen/energy.hpp"
#include "logpen/experiments.hpp"
#include "logpen/grid.hpp"
#include "logpen/logsplit.hpp"
#include "logpen/nehari.hpp"
#include "logpen/penalty.hpp"
#include "logpen/solver.hpp"

namespace logpen {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace selftest {

inline Problem small_problem(int dim, double eps, Region lam, PotentialSpec v) {
  const Grid g = dim == 1 ? build_grid(1, {-4, 0}, {4, 0}, 0.25) : build_grid(2, {-3, -3}, {3, 3}, 0.5);
  v.dim = dim;
  lam.dim = dim;
  return make_problem(g, v, make_penalty(SplitParams{}, v.V0, lam, eps));
}

inline CheckOutcome splitting() {
  const SplitParams sp;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> e(-8.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double s = std::pow(10.0, e(rng));
    const double exact = 0.5 * s2_log_s2(s);
    const double scale = std::max({std::abs(exact), std::abs(f1(s, sp)), std::abs(f2(s, sp))});
    worst = std::max(worst, std::abs(f2(s, sp) - f1(s, sp) - exact) / scale);
  }
  const double d = sp.delta, below = std::nextafter(d, 0.0);
  const double jump = std::max({std::abs(f1(below, sp) - f1(d, sp)), std::abs(f1_prime(below, sp) - f1_prime(d, sp)),
                                std::abs(f2(below, sp) - f2(d, sp)), std::abs(f2_prime(below, sp) - f2_prime(d, sp))});
  return {"splitting exactness and C1 matching", worst < 1e-12 && jump < 1e-12,
          "max rel err " + std::to_string(worst) + ", branch jump " + std::to_string(jump)};
}

inline CheckOutcome penalty_constants() {
  const SplitParams sp;
  const double l = choose_l(0.0);
  const double a0 = solve_a0(sp, l);
  const double resid = std::abs(f2_prime(a0, sp) / a0 - l);
  PenaltyParams pen = make_penalty(sp, 0.0, Region{1, {-1, 0}, {2, 0}}, 1.0);
  bool ine = true;
  for (int i = 0; i <= 400; ++i) {
    const double s = 0.025 * i;
    for (double x : {-3.0, 0.0, 3.0}) ine = ine && g2({x, 0}, s, pen) <= f2(s, sp) + 1e-15;
  }
  return {"penalty constants", resid < 1e-10 && a0 > sp.delta && ine,
          "a0 = " + std::to_string(a0) + ", residual " + std::to_string(resid)};
}

inline CheckOutcome gradient() {
  PotentialSpec v;
  v.kind = PotentialKind::capped_quadratic;
  v.cap = 2.0;
  const Problem p = small_problem(1, 0.7, Region{1, {-1, 0}, {1.5, 0}}, v);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(0.05, 1.5);
  std::vector<double> u(p.size());
  for (double& x : u) x = val(rng);
  const std::vector<double> g = grad_I(p, u);
  double err = 0.0, gmax = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double step = 1e-6;
    std::vector<double> a = u, b = u;
    a[k] += step;
    b[k] -= step;
    err = std::max(err, std::abs((energy_I(p, a) - energy_I(p, b)) / (2 * step) - g[k]));
    gmax = std::max(gmax, std::abs(g[k]));
  }
  return {"gradient vs central differences", err / gmax < 1e-5, "rel err " + std::to_string(err / gmax)};
}

inline CheckOutcome identity() {
  PotentialSpec v;
  const Problem p = small_problem(2, 1.0, Region{2, {-2, -2}, {2, 2}}, v);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(1e-3, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> u(p.size());
    for (double& x : u) x = val(rng);
    worst = std::max(worst, identity_gap_relative(p, u));
  }
  return {"energy identity", worst < 1e-10, "max rel gap " + std::to_string(worst)};
}

inline CheckOutcome fiber_sign() {
  PotentialSpec v;
  const Problem p = small_problem(1, 1.0, Region{1, {-2, 0}, {2, 0}}, v);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  bool ok = true;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> u(p.size());
    for (double& x : u) x = val(rng);
    const Fiber f(p, u);
    int changes = 0;
    double prev = f.slope(1e-4);
    for (int k = 1; k < 64; ++k) {
      const double s = f.slope(1e-4 * std::pow(1e16, k / 63.0));
      if ((s > 0) != (prev > 0)) ++changes;
      prev = s;
    }
    ok = ok && changes == 1;
  }
  return {"fiber slope has one sign change", ok, ""};
}

inline CheckOutcome gausson() {
  const Grid g = build_grid(1, {-8, 0}, {8, 0}, 0.05);
  PotentialSpec v;
  const Problem p = make_problem(g, v, make_penalty(SplitParams{}, 0.0, Region{1, {-9, 0}, {9, 0}}, 1.0));
  const Gausson ref = gausson_reference(g, 0.0);
  const SolveResult r = solve_ground_state(p, init_bump(g, {0.2, 0}, 1.3, 1.0), SolverConfig{});
  const double diff = std::abs(r.energy_I - ref.c0);
  return {"coarse Gausson solve", r.converged && diff < 2e-3, "|c - c0| = " + std::to_string(diff)};
}

}  // namespace selftest

inline std::vector<CheckOutcome> run_selftest() {
  std::vector<CheckOutcome> out;
  for (const auto& check : {selftest::splitting, selftest::penalty_constants, selftest::gradient,
                            selftest::identity, selftest::fiber_sign, selftest::gausson}) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace logpen
