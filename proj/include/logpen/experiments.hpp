#pragma once

// Eps sweeps with concentration tracking, the Gausson reference, the
// penalization equivalence check and the logarithmic-bound probe.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "logpen/energy.hpp"
#include "logpen/error.hpp"
#include "logpen/grid.hpp"
#include "logpen/nehari.hpp"
#include "logpen/penalty.hpp"
#include "logpen/problem_spec.hpp"
#include "logpen/solver.hpp"

namespace logpen {

/// Margin kept between the rescaled well and the box edge.
inline constexpr double kBoxMargin = 4.0;

struct SweepRow {
  double eps = 0.0;
  double c_eps = 0.0;
  Point eta{0.0, 0.0};  // eps * argmax u_eps, unscaled coordinates
  double V_eta = 0.0;
  double sup_outside = 0.0;
  double a0 = 0.0;
  bool equivalent = false;
  double residual = 0.0;
  int iters = 0;
  std::string box_used;
  // Not part of the CSV schema.
  int dim = 1;
  bool converged = false;
  std::optional<double> unpenalized_residual;
  std::optional<double> c0_same_grid;
  double energy_spread = 0.0;
};

/// Box containing the configured box and Lambda_eps with margin.
inline std::pair<Point, Point> sweep_box(const ProblemSpec& s, double eps) {
  Point lo = s.box_lo, hi = s.box_hi;
  for (int a = 0; a < s.dim; ++a) {
    lo[a] = std::min(lo[a], s.lambda.lo[a] / eps - kBoxMargin);
    hi[a] = std::max(hi[a], s.lambda.hi[a] / eps + kBoxMargin);
  }
  return {lo, hi};
}

inline Problem build_problem(const ProblemSpec& s, const Grid& g, double eps) {
  const PenaltyParams pen = make_penalty(s.split, s.potential.V0, s.lambda, eps, s.l_fraction);
  return make_problem(g, s.potential, pen);
}

/// The limit problem with constant potential V0 on grid g, with Lambda
/// covering the whole box so the penalization never acts.
inline Problem limit_problem(const ProblemSpec& s, const Grid& g) {
  PotentialSpec v;
  v.dim = s.dim;
  v.V0 = s.potential.V0;
  Region whole{s.dim, {0.0, 0.0}, {0.0, 0.0}};
  for (int a = 0; a < s.dim; ++a) {
    whole.lo[a] = g.lo[a] - 1.0;
    whole.hi[a] = g.hi[a] + 1.0;
  }
  const PenaltyParams pen = make_penalty(s.split, v.V0, whole, 1.0, s.l_fraction);
  return make_problem(g, v, pen);
}

struct Gausson {
  ScalarField field;
  double c0 = 0.0;
  double amplitude = 0.0;
};

/// u*(x) = e^{(N+V0)/2} e^{-|x|^2/2} solves -Lap u + V0 u = u log u^2, with
/// level c0 = |u*|_2^2 / 2 = e^{N+V0} pi^{N/2} / 2.
inline Gausson gausson_reference(const Grid& g, double V0) {
  if (!(V0 > -1.0)) throw HypothesisViolation("potential lower bound violated: V0 must exceed -1");
  Gausson r;
  const double n = g.dim;
  r.amplitude = std::exp(0.5 * (n + V0));
  r.c0 = 0.5 * std::exp(n + V0) * std::pow(std::numbers::pi, 0.5 * n);
  r.field = init_bump(g, {0.0, 0.0}, 1.0, r.amplitude);
  return r;
}

struct Equivalence {
  bool equivalent = false;
  double margin = 0.0;  // a0 - sup_outside
  std::optional<double> unpenalized_residual;
};

/// sup of u outside Lambda_eps strictly below a0 means G2' = F2' along u,
/// so the penalized solution also solves the original equation.
inline Equivalence equivalence_check(const Problem& p, std::span<const double> u) {
  double sup = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (!p.in_lambda[k]) sup = std::max(sup, u[k]);
  Equivalence e;
  e.equivalent = sup < p.penalty.a0;
  e.margin = p.penalty.a0 - sup;
  if (e.equivalent) e.unpenalized_residual = unpenalized_residual(p, u);
  return e;
}

inline Equivalence equivalence_check(const Problem& p, const SolveResult& r) {
  return equivalence_check(p, r.u.values);
}

struct SweepOptions {
  bool compute_limit_level = false;  // also solve the constant-V0 problem per row
  unsigned threads = 0;              // 0: LOGPEN_THREADS, else hardware concurrency
};

struct SweepRun {
  std::vector<SweepRow> rows;
  std::vector<ScalarField> fields;
};

inline unsigned sweep_threads(unsigned requested) {
  if (requested == 0) {
    if (const char* env = std::getenv("LOGPEN_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end != env) requested = static_cast<unsigned>(v);
    }
  }
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

inline SweepRow solve_row(const ProblemSpec& s, double eps, const SweepOptions& opt,
                          ScalarField& field_out) {
  const auto [lo, hi] = sweep_box(s, eps);
  const Grid g = build_grid(s.dim, lo, hi, s.h);
  const Problem p = build_problem(s, g, eps);
  SweepRow row;
  row.eps = eps;
  row.dim = s.dim;
  row.a0 = p.penalty.a0;
  row.box_used = describe_box(g);
  SolverConfig cfg = s.solver;
  cfg.rng_seed = s.rng_seed;
  MultiStartResult ms;
  try {
    ms = multi_start(p, cfg);
    row.converged = true;
  } catch (const AllRestartsFailed& e) {
    ms = e.attempt();
    row.converged = false;
  }
  const SolveResult& r = ms.best;
  if (r.u.size() == 0) {
    // every seed was rejected by the cone test
    row.c_eps = std::numeric_limits<double>::quiet_NaN();
    field_out = ScalarField(g);
    return row;
  }
  row.c_eps = r.energy_I;
  row.eta = {eps * r.argmax_x[0], eps * r.argmax_x[1]};
  row.V_eta = s.potential(row.eta);
  row.sup_outside = r.sup_outside_lambda_eps;
  const Equivalence eq = equivalence_check(p, r);
  row.equivalent = eq.equivalent;
  row.unpenalized_residual = eq.unpenalized_residual;
  row.residual = r.residual;
  row.iters = r.iters;
  row.energy_spread = ms.energy_spread;
  if (opt.compute_limit_level) {
    const Problem lim = limit_problem(s, g);
    SolverConfig lc = cfg;
    lc.restarts = 1;
    const SolveResult lr =
        solve_ground_state(lim, init_bump(g, r.argmax_x, 1.0, std::exp(0.5 * (s.dim + s.potential.V0))), lc);
    if (lr.converged) row.c0_same_grid = lr.energy_I;
  }
  field_out = r.u;
  return row;
}

/// Solves each eps independently (possibly concurrently); rows come back in
/// eps_list order and do not depend on the thread count.
inline SweepRun run_sweep(const ProblemSpec& s, const SweepOptions& opt = {}) {
  validate(s);
  const std::size_t m = s.eps_list.size();
  SweepRun run;
  run.rows.resize(m);
  run.fields.resize(m);
  const unsigned nthreads = std::min<unsigned>(sweep_threads(opt.threads), static_cast<unsigned>(m));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(m);
  const auto worker = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      try {
        run.rows[i] = solve_row(s, s.eps_list[i], opt, run.fields[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return run;
}

inline std::vector<SweepRow> epsilon_sweep(const ProblemSpec& s, const SweepOptions& opt = {}) {
  return run_sweep(s, opt).rows;
}

struct ConcentrationEntry {
  double eps = 0.0;
  Point eta{0.0, 0.0};
  double gap = 0.0;  // V(eta) - V0
};

struct ConcentrationSummary {
  std::vector<ConcentrationEntry> entries;
  bool nonincreasing = false;
  double final_gap = 0.0;
  bool final_below_threshold = false;
  bool passed = false;
  std::string message;
};

/// Gap V(eta_eps) - V0 over the converged rows: must be non-increasing (to
/// within `tol`) and end below `threshold`.  Maximizer ties resolve to the
/// lowest cell index.
inline ConcentrationSummary concentration_report(const std::vector<SweepRow>& rows, double V0,
                                                 double threshold = 0.05, double tol = 1e-6) {
  ConcentrationSummary c;
  for (const auto& r : rows)
    if (r.converged) c.entries.push_back({r.eps, r.eta, r.V_eta - V0});
  if (c.entries.size() < 2) throw InsufficientRows("concentration report needs >= 2 converged rows");
  c.nonincreasing = true;
  std::ostringstream msg;
  for (std::size_t i = 1; i < c.entries.size(); ++i) {
    if (c.entries[i].gap > c.entries[i - 1].gap + tol) {
      c.nonincreasing = false;
      msg << "gap rises from " << c.entries[i - 1].gap << " at eps=" << c.entries[i - 1].eps << " to "
          << c.entries[i].gap << " at eps=" << c.entries[i].eps << "; ";
    }
  }
  c.final_gap = c.entries.back().gap;
  c.final_below_threshold = c.final_gap < threshold;
  if (!c.final_below_threshold) msg << "final gap " << c.final_gap << " not below " << threshold << "; ";
  c.passed = c.nonincreasing && c.final_below_threshold;
  c.message = c.passed ? "ok" : msg.str();
  return c;
}

struct LevelConvergence {
  bool nonincreasing = false;
  bool bounded_below = false;
  bool passed = false;
  std::vector<double> distance;  // |c_eps - c0| per converged row
};

/// |c_eps - c0| non-increasing along the sweep (within `tol`) and
/// c_eps >= c0 - floor_tol on every converged row.  Uses the per-row c0 when
/// available, otherwise `c0`.
inline LevelConvergence level_convergence(const std::vector<SweepRow>& rows, double c0,
                                          double floor_tol = 5e-3, double tol = 1e-9) {
  LevelConvergence lc;
  lc.nonincreasing = true;
  lc.bounded_below = true;
  for (const auto& r : rows) {
    if (!r.converged) continue;
    const double ref = r.c0_same_grid.value_or(c0);
    const double dist = std::abs(r.c_eps - ref);
    if (!lc.distance.empty() && dist > lc.distance.back() + tol) lc.nonincreasing = false;
    lc.distance.push_back(dist);
    if (r.c_eps < ref - floor_tol) lc.bounded_below = false;
  }
  lc.passed = lc.distance.size() >= 2 && lc.nonincreasing && lc.bounded_below;
  return lc;
}

struct LogBoundSample {
  double log_norm = 0.0;  // log of the H^1 norm
  double log_term = 0.0;  // integral of u^2 log u^2
  double norm = 0.0;
};

struct LogBoundProbe {
  double A_hat = 0.0;
  double B_hat = 0.0;
  double slack = 0.0;
  int violations = 0;
  double linear_growth_C = 0.0;  // max of log_term / (1 + norm) over samples with norm >= 1
  std::vector<LogBoundSample> calibration;
  std::vector<LogBoundSample> held_out;
};

inline double h1_norm(const Grid& g, std::span<const double> u) {
  return std::sqrt(dirichlet_form(g, u) + mass(g, u));
}

/// Random smooth positive field: one to three Gaussian bumps, normalized to
/// unit H^1 norm and then scaled by 2^s with s uniform in [-3, 3].
inline std::vector<double> random_log_bound_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int bumps = 1 + static_cast<int>(unit(rng) * 3.0) % 3;
  std::vector<double> u(g.size(), 0.0);
  for (int b = 0; b < bumps; ++b) {
    Point c{0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
      const double half = 0.35 * (g.hi[a] - g.lo[a]);
      const double mid = 0.5 * (g.hi[a] + g.lo[a]);
      c[a] = mid - half + 2.0 * half * unit(rng);
    }
    const double width = 0.5 + 1.5 * unit(rng);
    const double amp = 0.2 + 0.8 * unit(rng);
    const ScalarField bump = init_bump(g, c, width, amp);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += bump[k];
  }
  const double scale = std::exp2(-3.0 + 6.0 * unit(rng)) / h1_norm(g, u);
  for (double& v : u) v *= scale;
  return u;
}

/// Fits A + B log|u| to the integral of u^2 log u^2 by least squares on a
/// calibration corpus, raises A by a positive slack (largest calibration
/// excess plus three residual standard deviations), and counts violations
/// on a disjoint held-out corpus of the same size.
inline LogBoundProbe log_bound_probe(int corpus_size, std::uint64_t rng_seed, const Grid& g,
                                     const SplitParams& split = {}) {
  if (corpus_size < 50) throw ConfigError("log-bound corpus needs at least 50 fields");
  std::mt19937_64 rng(rng_seed);
  LogBoundProbe out;
  const auto draw = [&](std::vector<LogBoundSample>& into) {
    while (static_cast<int>(into.size()) < corpus_size) {
      const std::vector<double> u = random_log_bound_field(g, rng);
      const double n = h1_norm(g, u);
      if (!(n > 0.0)) continue;  // the bound is stated for u != 0
      into.push_back({std::log(n), log_term(g, u, split), n});
    }
  };
  draw(out.calibration);
  draw(out.held_out);

  const double m = static_cast<double>(out.calibration.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : out.calibration) {
    sx += s.log_norm;
    sy += s.log_term;
    sxx += s.log_norm * s.log_norm;
    sxy += s.log_norm * s.log_term;
  }
  const double denom = m * sxx - sx * sx;
  const double B = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double A = (sy - B * sx) / m;
  double max_excess = 0.0, ss = 0.0;
  for (const auto& s : out.calibration) {
    const double r = s.log_term - (A + B * s.log_norm);
    max_excess = std::max(max_excess, r);
    ss += r * r;
  }
  out.slack = max_excess + 3.0 * std::sqrt(ss / m);
  out.A_hat = A + out.slack;
  out.B_hat = B;
  for (const auto& s : out.held_out)
    if (s.log_term > out.A_hat + out.B_hat * s.log_norm) ++out.violations;
  for (const auto* set : {&out.calibration, &out.held_out})
    for (const auto& s : *set)
      if (s.norm >= 1.0) out.linear_growth_C = std::max(out.linear_growth_C, s.log_term / (1.0 + s.norm));
  return out;
}

}  // namespace logpen
