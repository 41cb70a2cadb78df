#pragma once

// Discrete energies on a grid.  With Q(u) the summation-by-parts form of the
// stencil and all integrals by midpoint quadrature:
//
//   ||u||_eps^2 = Q(u) + sum (V(eps x) + 1) u^2 h^N
//   J(u)        = ||u||^2 / 2 + sum (F1(u) - F2(u)) h^N
//   I(u)        = ||u||^2 / 2 + sum (F1(u+) - G2(eps x, u+)) h^N
//
// The discrete functionals are C^1, and grad_I is their exact gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <span>
#include <vector>

#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/logsplit.hpp"
#include "logpen/penalty.hpp"
#include "logpen/potential.hpp"

namespace logpen {

/// Everything the energies need, resolved per cell: V(eps x) and whether
/// eps x lies in Lambda.
struct Problem {
  Grid grid;
  PotentialSpec potential;
  PenaltyParams penalty;
  std::vector<double> v_eps;
  std::vector<std::uint8_t> in_lambda;

  double eps() const { return penalty.eps; }
  const SplitParams& split() const { return penalty.split; }
  std::size_t size() const { return grid.size(); }
};

inline Problem make_problem(const Grid& grid, const PotentialSpec& potential,
                            const PenaltyParams& penalty) {
  if (potential.dim != grid.dim || penalty.lambda.dim != grid.dim)
    throw ConfigError("grid, potential and region dimensions differ");
  Problem p{grid, potential, penalty, {}, {}};
  p.v_eps.resize(grid.size());
  p.in_lambda.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point x = grid.position(k);
    const Point ex{penalty.eps * x[0], penalty.eps * x[1]};
    p.v_eps[k] = potential(ex);
    if (!(p.v_eps[k] + 1.0 > 0.0)) {
      std::ostringstream msg;
      msg << "potential lower bound violated: V(eps x) + 1 = " << p.v_eps[k] + 1.0 << " at cell " << k;
      throw HypothesisViolation(msg.str());
    }
    p.in_lambda[k] = penalty.lambda.contains(ex) ? 1 : 0;
  }
  return p;
}

inline void require_on_grid(const Problem& p, std::span<const double> u) {
  if (u.size() != p.size()) throw ConfigError("field does not live on the problem grid");
}

inline double potential_form(const Problem& p, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += (p.v_eps[k] + 1.0) * u[k] * u[k];
  return s * p.grid.cell_volume();
}

inline double norm_eps_sq(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  return dirichlet_form(p.grid, u) + potential_form(p, u);
}

inline double mass(const Grid& g, std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return s * g.cell_volume();
}

/// Integral of u^2 log u^2, assembled as 2 (F2 - F1) per cell.
inline double log_term(const Grid& g, std::span<const double> u, const SplitParams& split) {
  double s = 0.0;
  for (double v : u) s += f2(v, split) - f1(v, split);
  return 2.0 * s * g.cell_volume();
}

inline double energy_J(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  double s = 0.0;
  for (double v : u) s += f1(v, p.split()) - f2(v, p.split());
  return 0.5 * norm_eps_sq(p, u) + s * p.grid.cell_volume();
}

/// J with the penalized G2 replaced by F2 evaluated on u+ (the comparison
/// functional that bounds I from below).
inline double energy_J_tilde(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  double s = 0.0;
  for (double v : u) {
    const double w = std::max(v, 0.0);
    s += f1(w, p.split()) - f2(w, p.split());
  }
  return 0.5 * norm_eps_sq(p, u) + s * p.grid.cell_volume();
}

inline double nonlinear_I(const Problem& p, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double w = std::max(u[k], 0.0);
    if (w == 0.0) continue;
    s += f1(w, p.split()) - g2_at(p.in_lambda[k] != 0, w, p.penalty);
  }
  return s * p.grid.cell_volume();
}

inline double energy_I(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  return 0.5 * norm_eps_sq(p, u) + nonlinear_I(p, u);
}

/// Exact gradient of energy_I: h^N (-Lap u + (V+1) u - G2'(eps x, u+) + F1'(u+)).
inline std::vector<double> grad_I(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  std::vector<double> g = laplacian_apply(p.grid, u);
  const double vol = p.grid.cell_volume();
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double w = std::max(u[k], 0.0);
    const double nl = w > 0.0 ? g2_prime_at(p.in_lambda[k] != 0, w, p.penalty) - f1_prime(w, p.split())
                              : 0.0;
    g[k] = vol * (-g[k] + (p.v_eps[k] + 1.0) * u[k] - nl);
  }
  return g;
}

/// Exact gradient of energy_J: h^N (-Lap u + (V+1) u - F2'(u) + F1'(u)).
inline std::vector<double> grad_J(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  std::vector<double> g = laplacian_apply(p.grid, u);
  const double vol = p.grid.cell_volume();
  for (std::size_t k = 0; k < u.size(); ++k)
    g[k] = vol * (-g[k] + (p.v_eps[k] + 1.0) * u[k] - f2_prime(u[k], p.split()) +
                  f1_prime(u[k], p.split()));
  return g;
}

/// Max over cells of |gradient| / h^N, i.e. the strong-form residual.
inline double residual_max(const Grid& g, std::span<const double> grad) {
  double r = 0.0;
  for (double v : grad) r = std::max(r, std::abs(v));
  return r / g.cell_volume();
}

/// Residual of the penalized equation at u.
inline double penalized_residual(const Problem& p, std::span<const double> u) {
  return residual_max(p.grid, grad_I(p, u));
}

/// Residual of the unpenalized equation  -Lap u + V u = u log u^2  at u+.
inline double unpenalized_residual(const Problem& p, std::span<const double> u) {
  std::vector<double> w(u.begin(), u.end());
  for (double& v : w) v = std::max(v, 0.0);
  return residual_max(p.grid, grad_J(p, w));
}

/// |J(u) - <J'(u), u>/2 - |u|_2^2 / 2| evaluated at u+.  The identity holds
/// for every field since F1 - F2 - s (F1' - F2')/2 = s^2/2 cell by cell.
inline double identity_gap(const Problem& p, std::span<const double> u) {
  require_on_grid(p, u);
  std::vector<double> w(u.begin(), u.end());
  for (double& v : w) v = std::max(v, 0.0);
  const std::vector<double> g = grad_J(p, w);
  double dot = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) dot += g[k] * w[k];
  return std::abs(energy_J(p, w) - 0.5 * dot - 0.5 * mass(p.grid, w));
}

/// identity_gap normalized by |u+|_2^2 / 2; zero for the zero field.
inline double identity_gap_relative(const Problem& p, std::span<const double> u) {
  std::vector<double> w(u.begin(), u.end());
  for (double& v : w) v = std::max(v, 0.0);
  const double half_mass = 0.5 * mass(p.grid, w);
  if (half_mass == 0.0) return 0.0;
  return identity_gap(p, u) / half_mass;
}

struct EnergyReport {
  double value_I = 0.0;
  double value_J = 0.0;
  double norm_eps_sq = 0.0;
  double mass = 0.0;
  double log_term = 0.0;
  double identity_gap = 0.0;
};

inline EnergyReport energy_report(const Problem& p, std::span<const double> u) {
  EnergyReport r;
  r.value_I = energy_I(p, u);
  r.value_J = energy_J(p, u);
  r.norm_eps_sq = norm_eps_sq(p, u);
  r.mass = mass(p.grid, u);
  r.log_term = log_term(p.grid, u, p.split());
  r.identity_gap = identity_gap(p, u);
  return r;
}

}  // namespace logpen
