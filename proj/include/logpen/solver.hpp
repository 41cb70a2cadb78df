#pragma once

// Ground states of the penalized problem by descent on the Nehari set.
//
// Each iterate is kept on the Nehari set, where I(u) = max_t I(t u), so the
// solver minimizes the smooth, 0-homogeneous map v -> I(t_v v).  Steps use a
// preconditioned Barzilai-Borwein length with Armijo backtracking on that
// map, followed by clamping to the positive part and re-projection.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "logpen/energy.hpp"
#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/nehari.hpp"

namespace logpen {

enum class Preconditioner { sobolev, mass };

struct SolverConfig {
  int max_iters = 20000;
  double residual_tol = 1e-8;  // on max |grad_I| / h^N
  double nehari_tol = 1e-8;    // on |t_u - 1|
  double initial_step = 1.0;
  double backtrack = 0.5;
  double step_min = 1e-6;  // clamp for the spectral step
  double step_max = 1e2;
  double armijo = 1e-4;
  // Energies are compared with this relative allowance for rounding;
  // without it the line search stalls once decreases fall below ~1e-16.
  double rounding_slack = 1e-12;
  Preconditioner preconditioner = Preconditioner::sobolev;
  int restarts = 1;
  std::uint64_t rng_seed = 1;
  double seed_spread = 2.0;  // random seed centres stay this close to the V minimizer
  double seed_width = 1.0;
  bool record_trace = false;
};

inline void validate(const SolverConfig& c) {
  if (!(c.residual_tol > 0.0)) throw ConfigError("residual_tol must be positive");
  if (!(c.nehari_tol > 0.0)) throw ConfigError("nehari_tol must be positive");
  if (c.restarts < 1) throw ConfigError("restarts must be >= 1");
  if (c.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(c.backtrack > 0.0 && c.backtrack < 1.0)) throw ConfigError("backtrack factor must lie in (0,1)");
  if (!(c.step_min > 0.0 && c.step_min <= c.step_max)) throw ConfigError("bad step clamp");
  if (!(c.initial_step > 0.0)) throw ConfigError("initial_step must be positive");
  if (!(c.seed_spread >= 0.0) || !(c.seed_width > 0.0)) throw ConfigError("bad seed parameters");
}

enum class SolveStatus { converged, max_iters, line_search_failed, cone_exit };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::line_search_failed: return "line_search_failed";
    case SolveStatus::cone_exit: return "cone_exit";
  }
  return "?";
}

struct SolveResult {
  ScalarField u;
  double energy_I = 0.0;
  double energy_J = 0.0;
  double residual = 0.0;
  double t_u_final = 0.0;
  bool positive = false;
  std::size_t argmax_cell = 0;
  Point argmax_x{0.0, 0.0};
  double sup_outside_lambda_eps = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iters;
  int iters = 0;
  int clamp_events = 0;
  std::vector<double> energy_trace;  // Nehari energies of accepted iterates
};

/// amplitude * exp(-|x - center|^2 / (2 width^2)) at cell centres.
inline ScalarField init_bump(const Grid& g, Point center, double width, double amplitude) {
  if (!(width > 0.0)) throw ConfigError("bump width must be positive");
  if (!(amplitude >= 0.0)) throw ConfigError("bump amplitude must be nonnegative");
  return sample(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return amplitude * std::exp(-r2 / (2.0 * width * width));
  });
}

namespace detail {

/// -Lap_h + diag(V(eps x) + 1), the quadratic part of the Hessian.
class SobolevPreconditioner {
 public:
  explicit SobolevPreconditioner(const Problem& p) {
    const Grid& g = p.grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.size() * (g.dim == 1 ? 3 : 5));
    if (g.dim == 1) {
      const double ih2 = 1.0 / (g.h[0] * g.h[0]);
      for (std::size_t i = 0; i < g.n[0]; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        trip.emplace_back(k, k, 2.0 * ih2 + p.v_eps[i] + 1.0);
        if (i > 0) trip.emplace_back(k, k - 1, -ih2);
        if (i + 1 < g.n[0]) trip.emplace_back(k, k + 1, -ih2);
      }
    } else {
      const double ih0 = 1.0 / (g.h[0] * g.h[0]), ih1 = 1.0 / (g.h[1] * g.h[1]);
      const std::size_t n0 = g.n[0], n1 = g.n[1];
      for (std::size_t i = 0; i < n0; ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
          const std::size_t c = i * n1 + j;
          const auto k = static_cast<Eigen::Index>(c);
          trip.emplace_back(k, k, 2.0 * ih0 + 2.0 * ih1 + p.v_eps[c] + 1.0);
          if (i > 0) trip.emplace_back(k, k - static_cast<Eigen::Index>(n1), -ih0);
          if (i + 1 < n0) trip.emplace_back(k, k + static_cast<Eigen::Index>(n1), -ih0);
          if (j > 0) trip.emplace_back(k, k - 1, -ih1);
          if (j + 1 < n1) trip.emplace_back(k, k + 1, -ih1);
        }
      }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    llt_.compute(matrix_);
    if (llt_.info() != Eigen::Success) throw ConfigError("preconditioner factorization failed");
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = llt_.solve(b);
    return {x.data(), x.data() + x.size()};
  }

  double quadratic(std::span<const double> s) const {
    Eigen::Map<const Eigen::VectorXd> v(s.data(), static_cast<Eigen::Index>(s.size()));
    return v.dot(matrix_ * v);
  }

 private:
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void fill_diagnostics(const Problem& p, SolveResult& r) {
  const auto& u = r.u.values;
  r.energy_I = energy_I(p, u);
  r.energy_J = energy_J(p, u);
  r.residual = penalized_residual(p, u);
  r.positive = *std::min_element(u.begin(), u.end()) >= 0.0;
  r.argmax_cell = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
  r.argmax_x = p.grid.position(r.argmax_cell);
  double sup = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!p.in_lambda[k]) sup = std::max(sup, u[k]);
  r.sup_outside_lambda_eps = sup;
}

}  // namespace detail

inline SolveResult solve_ground_state(const Problem& p, const ScalarField& seed,
                                      const SolverConfig& cfg) {
  validate(cfg);
  require_solver_resolution(p.grid);
  if (seed.grid != p.grid) throw ConfigError("seed field lives on a different grid");
  if (!in_cone(p, seed.values)) throw ConeViolation("seed has no positive part inside Lambda_eps");

  const double vol = p.grid.cell_volume();
  std::optional<detail::SobolevPreconditioner> precond;
  if (cfg.preconditioner == Preconditioner::sobolev) precond.emplace(p);

  SolveResult res;
  std::vector<double> u = seed.values;
  for (double& v : u) v = std::max(v, 0.0);
  {
    const FiberResult f = project_nehari(p, u);
    for (double& v : u) v *= f.t_u;
  }
  double phi = energy_I(p, u);
  std::vector<double> g = grad_I(p, u);
  double resid = residual_max(p.grid, g);
  if (cfg.record_trace) res.energy_trace.push_back(phi);

  double sigma = cfg.initial_step;
  std::vector<double> d(u.size()), w(u.size()), wplus(u.size()), y(u.size()), s(u.size());
  res.status = SolveStatus::max_iters;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (resid <= cfg.residual_tol) {
      res.status = SolveStatus::converged;
      break;
    }
    // Descent direction in the strong-form scaling.
    for (std::size_t k = 0; k < u.size(); ++k) y[k] = g[k] / vol;
    if (precond) {
      d = precond->solve(y);
    } else {
      d = y;
    }
    for (double& v : d) v = -v;
    const double gd = detail::dot(g, d);
    if (!(gd < 0.0)) {
      res.status = SolveStatus::line_search_failed;
      break;
    }

    bool accepted = false;
    bool cone_trouble = false;
    double t_new = 1.0, phi_new = 0.0;
    double trial = sigma;
    for (int bt = 0; bt < 60; ++bt, trial *= cfg.backtrack) {
      bool clamped = false;
      for (std::size_t k = 0; k < u.size(); ++k) {
        w[k] = u[k] + trial * d[k];
        wplus[k] = std::max(w[k], 0.0);
        clamped = clamped || w[k] < 0.0;
      }
      if (!in_cone(p, wplus)) {
        cone_trouble = true;
        continue;
      }
      FiberResult f;
      try {
        f = project_nehari(p, wplus);
      } catch (const BracketFailure&) {
        continue;
      }
      t_new = f.t_u;
      const Fiber fib(p, wplus);
      phi_new = fib.value(t_new);
      if (clamped) {
        // Clamping only removes the quadratic energy of the negative part.
        std::vector<double> tw(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) tw[k] = t_new * w[k];
        const double unclamped = energy_I(p, tw);
        if (phi_new > unclamped + cfg.rounding_slack * std::abs(unclamped))
          throw std::logic_error("clamping to the positive part increased the energy");
        ++res.clamp_events;
      }
      if (phi_new <= phi + cfg.armijo * trial * gd + cfg.rounding_slack * std::abs(phi)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status = cone_trouble ? SolveStatus::cone_exit : SolveStatus::line_search_failed;
      break;
    }

    for (std::size_t k = 0; k < u.size(); ++k) {
      const double next = t_new * wplus[k];
      s[k] = next - u[k];
      u[k] = next;
    }
    std::vector<double> g_new = grad_I(p, u);
    for (std::size_t k = 0; k < u.size(); ++k) y[k] = (g_new[k] - g[k]) / vol;
    const double sy = detail::dot(s, y);
    const double ss = precond ? precond->quadratic(s) : detail::dot(s, s);
    sigma = sy > 0.0 ? std::clamp(ss / sy, cfg.step_min, cfg.step_max) : cfg.step_max;
    g = std::move(g_new);
    phi = phi_new;
    resid = residual_max(p.grid, g);
    if (cfg.record_trace) res.energy_trace.push_back(phi);
  }
  if (res.status == SolveStatus::max_iters && resid <= cfg.residual_tol)
    res.status = SolveStatus::converged;

  res.iters = it;
  res.u = ScalarField(p.grid, u);
  res.t_u_final = project_nehari(p, u).t_u;
  detail::fill_diagnostics(p, res);
  res.converged = res.status == SolveStatus::converged && res.residual <= cfg.residual_tol &&
                  std::abs(res.t_u_final - 1.0) <= cfg.nehari_tol;
  if (res.status == SolveStatus::converged && !res.converged) res.status = SolveStatus::max_iters;
  return res;
}

/// Cell of least V(eps x) among cells centred in Lambda_eps.  Ties go to the
/// cell nearest the middle of the grid-clipped Lambda_eps, then lowest index,
/// so a flat potential seeds away from the box edge.
inline std::size_t well_minimizer_cell(const Problem& p) {
  const Grid& g = p.grid;
  const Region& lam = p.penalty.lambda;
  Point mid{0.0, 0.0};
  for (int a = 0; a < g.dim; ++a)
    mid[a] = 0.5 * (std::max(lam.lo[a] / p.eps(), g.lo[a]) + std::min(lam.hi[a] / p.eps(), g.hi[a]));
  const auto dist2 = [&](std::size_t k) {
    const Point x = g.position(k);
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += (x[a] - mid[a]) * (x[a] - mid[a]);
    return r2;
  };
  std::size_t best = p.size();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!p.in_lambda[k]) continue;
    if (best == p.size() || p.v_eps[k] < p.v_eps[best] ||
        (p.v_eps[k] == p.v_eps[best] && dist2(k) < dist2(best)))
      best = k;
  }
  if (best == p.size()) throw ConfigError("no grid cell is centred inside Lambda_eps");
  return best;
}

struct Seed {
  Point center{0.0, 0.0};
  double width = 1.0;
  double amplitude = 1.0;
};

/// Seed 0 is the Gausson-shaped bump at the V minimizer; the rest are drawn
/// from rng_seed with centres within seed_spread of it, inside Lambda_eps.
inline std::vector<Seed> restart_seeds(const Problem& p, const SolverConfig& cfg) {
  const Grid& g = p.grid;
  const Point c0 = g.position(well_minimizer_cell(p));
  const double amp = std::exp(0.5 * (g.dim + p.potential.V0));
  std::vector<Seed> seeds{{c0, cfg.seed_width, amp}};
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Region& lam = p.penalty.lambda;
  while (static_cast<int>(seeds.size()) < cfg.restarts) {
    Seed s;
    for (int a = 0; a < g.dim; ++a) {
      const double lo = std::max({c0[a] - cfg.seed_spread, lam.lo[a] / p.eps(), g.lo[a]});
      const double hi = std::min({c0[a] + cfg.seed_spread, lam.hi[a] / p.eps(), g.hi[a]});
      s.center[a] = lo + (hi - lo) * unit(rng);
    }
    s.width = cfg.seed_width * (0.6 + 0.8 * unit(rng));
    s.amplitude = amp * (0.5 + unit(rng));
    seeds.push_back(s);
  }
  return seeds;
}

struct MultiStartResult {
  SolveResult best;
  std::size_t best_index = 0;
  std::vector<double> energies;  // energy_I per restart (NaN when the seed was rejected)
  std::vector<bool> converged;
  double energy_spread = 0.0;  // max - min over converged restarts
};

/// Thrown when no restart converges; carries the least-energy attempt.
class AllRestartsFailed : public std::runtime_error {
 public:
  AllRestartsFailed(const std::string& what, MultiStartResult attempt)
      : std::runtime_error(what), attempt_(std::move(attempt)) {}
  const MultiStartResult& attempt() const { return attempt_; }

 private:
  MultiStartResult attempt_;
};

inline MultiStartResult multi_start(const Problem& p, const SolverConfig& cfg) {
  validate(cfg);
  const std::vector<Seed> seeds = restart_seeds(p, cfg);
  MultiStartResult out;
  std::optional<std::size_t> best_conv, best_any;
  std::vector<SolveResult> results;
  results.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const ScalarField seed = init_bump(p.grid, seeds[i].center, seeds[i].width, seeds[i].amplitude);
    SolveResult r;
    try {
      r = solve_ground_state(p, seed, cfg);
    } catch (const ConeViolation&) {
      out.energies.push_back(std::numeric_limits<double>::quiet_NaN());
      out.converged.push_back(false);
      results.emplace_back();
      continue;
    }
    out.energies.push_back(r.energy_I);
    out.converged.push_back(r.converged);
    if (r.converged && (!best_conv || r.energy_I < results[*best_conv].energy_I)) best_conv = i;
    if (!best_any || r.energy_I < results[*best_any].energy_I) best_any = i;
    results.push_back(std::move(r));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!out.converged[i]) continue;
    lo = std::min(lo, out.energies[i]);
    hi = std::max(hi, out.energies[i]);
  }
  out.energy_spread = best_conv ? hi - lo : 0.0;
  if (!best_conv) {
    if (best_any) {
      out.best_index = *best_any;
      out.best = std::move(results[*best_any]);
    }
    throw AllRestartsFailed("multi_start: no restart converged", std::move(out));
  }
  out.best_index = *best_conv;
  out.best = std::move(results[*best_conv]);
  return out;
}

}  // namespace logpen
