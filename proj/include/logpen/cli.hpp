#pragma once

// `logpen` command dispatch.  Exit codes: 0 success, 1 a checked property
// failed, 2 configuration or I/O error.  Messages go to stderr only; data
// goes to files under --out.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include "logpen/energy.hpp"
#include "logpen/error.hpp"
#include "logpen/experiments.hpp"
#include "logpen/io.hpp"
#include "logpen/problem_spec.hpp"
#include "logpen/selftest.hpp"
#include "logpen/solver.hpp"

namespace logpen::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;
inline constexpr int kConfigError = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> h;
};

inline ProblemSpec load(const Options& o) {
  ProblemSpec s = parse_problem_spec([&] {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot read config '" + o.config + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }());
  if (o.seed) s.rng_seed = s.solver.rng_seed = *o.seed;
  if (o.h) s.h = *o.h;
  if (!o.out.empty()) s.output_dir = o.out;
  validate(s);
  return s;
}

inline std::filesystem::path out_dir(const ProblemSpec& s) { return s.output_dir; }

inline std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

inline int cmd_solve(const Options& o) {
  const ProblemSpec s = load(o);
  const double eps = s.eps_list.front();
  const auto [lo, hi] = sweep_box(s, eps);
  const Grid g = build_grid(s.dim, lo, hi, s.h);
  const Problem p = build_problem(s, g, eps);
  MultiStartResult ms;
  bool converged = true;
  try {
    ms = multi_start(p, s.solver);
  } catch (const AllRestartsFailed& e) {
    ms = e.attempt();
    converged = false;
  }
  const SolveResult& r = ms.best;
  if (r.u.size() == 0) {
    std::cerr << "solve: no seed lies in the cone\n";
    return kFailed;
  }
  const Equivalence eq = equivalence_check(p, r);
  write_field(r.u, out_dir(s) / "solution.txt");
  nlohmann::json j{{"eps", eps},
                   {"converged", converged},
                   {"status", to_string(r.status)},
                   {"energy_I", r.energy_I},
                   {"energy_J", r.energy_J},
                   {"residual", r.residual},
                   {"t_u_final", r.t_u_final},
                   {"iters", r.iters},
                   {"positive", r.positive},
                   {"argmax_cell", r.argmax_cell},
                   {"argmax_tie_break", "lowest cell index"},
                   {"sup_outside_lambda_eps", r.sup_outside_lambda_eps},
                   {"a0", p.penalty.a0},
                   {"l", p.penalty.l},
                   {"equivalent", eq.equivalent},
                   {"margin", eq.margin},
                   {"restart_energies", ms.energies},
                   {"energy_spread", ms.energy_spread},
                   {"grid", grid_json(g)}};
  if (eq.unpenalized_residual) j["unpenalized_residual"] = *eq.unpenalized_residual;
  write_json(j, out_dir(s) / "solve.json");
  std::cerr << "solve: eps=" << eps << " c_eps=" << r.energy_I << " residual=" << r.residual
            << " status=" << to_string(r.status) << '\n';
  return converged ? kOk : kFailed;
}

inline int cmd_sweep(const Options& o) {
  const ProblemSpec s = load(o);
  SweepOptions opt;
  opt.compute_limit_level = true;
  const SweepRun run = run_sweep(s, opt);
  write_csv(run.rows, out_dir(s) / "sweep.csv");
  for (std::size_t i = 0; i < run.fields.size(); ++i)
    write_field(run.fields[i], out_dir(s) / ("field_" + std::to_string(i) + ".txt"));

  nlohmann::json summary;
  summary["rows"] = nlohmann::json::array();
  for (const auto& r : run.rows) summary["rows"].push_back(row_json(r));
  summary["argmax_tie_break"] = "lowest cell index";
  bool ok = true;
  for (const auto& r : run.rows) {
    if (!r.converged) {
      ok = false;
      std::cerr << "sweep: eps=" << r.eps << " did not converge\n";
    }
  }
  std::optional<double> smallest_equivalent;
  for (const auto& r : run.rows)
    if (r.converged && r.equivalent) smallest_equivalent = r.eps;
  summary["smallest_equivalent_eps"] = smallest_equivalent ? nlohmann::json(*smallest_equivalent) : nlohmann::json();
  const SweepRow& last = run.rows.back();
  const bool last_equivalent = last.converged && last.equivalent;
  summary["smallest_eps_equivalent"] = last_equivalent;
  if (!last_equivalent) {
    ok = false;
    std::cerr << "sweep: smallest eps row is not equivalent (sup outside " << last.sup_outside << " >= a0 "
              << last.a0 << ")\n";
  }
  try {
    const ConcentrationSummary c = concentration_report(run.rows, s.potential.V0);
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : c.entries) entries.push_back({{"eps", e.eps}, {"gap", e.gap}});
    summary["concentration"] = {{"entries", entries},
                                {"nonincreasing", c.nonincreasing},
                                {"final_gap", c.final_gap},
                                {"passed", c.passed},
                                {"message", c.message}};
    if (!c.passed) {
      ok = false;
      std::cerr << "sweep: concentration check failed: " << c.message << '\n';
    }
    const LevelConvergence lc = level_convergence(run.rows, std::nan(""));
    summary["level_convergence"] = {{"distance", lc.distance},
                                    {"nonincreasing", lc.nonincreasing},
                                    {"bounded_below", lc.bounded_below},
                                    {"passed", lc.passed}};
  } catch (const InsufficientRows& e) {
    summary["concentration"] = {{"passed", false}, {"message", e.what()}};
    ok = false;
    std::cerr << "sweep: " << e.what() << '\n';
  }
  summary["passed"] = ok;
  write_json(summary, out_dir(s) / "summary.json");
  std::cerr << "sweep: " << run.rows.size() << " rows written, " << verdict(ok) << '\n';
  return ok ? kOk : kFailed;
}

inline int cmd_validate_gausson(const Options& o) {
  ProblemSpec s = load(o);
  if (s.potential.kind != PotentialKind::constant)
    throw ConfigError("validate-gausson needs a constant potential");
  const Grid g = build_grid(s.dim, s.box_lo, s.box_hi, s.h);
  const Problem p = limit_problem(s, g);
  const Gausson ref = gausson_reference(g, s.potential.V0);
  SolverConfig cfg = s.solver;
  cfg.restarts = 1;
  const SolveResult r = solve_ground_state(p, init_bump(g, {0.0, 0.0}, cfg.seed_width, ref.amplitude), cfg);
  double err = 0.0, nrm = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    err += (r.u[k] - ref.field[k]) * (r.u[k] - ref.field[k]);
    nrm += ref.field[k] * ref.field[k];
  }
  const double rel_l2 = std::sqrt(err / nrm);
  const double tol = s.dim == 1 ? 2e-3 : 1e-2;
  const double diff = std::abs(r.energy_I - ref.c0);
  const bool energy_ok = r.converged && diff <= tol;
  const bool field_ok = s.dim != 1 || rel_l2 < 1e-3;
  write_field(r.u, out_dir(s) / "gausson.txt");
  write_json({{"c_numeric", r.energy_I},
              {"c0_analytic", ref.c0},
              {"abs_diff", diff},
              {"tolerance", tol},
              {"relative_l2_error", rel_l2},
              {"residual", r.residual},
              {"converged", r.converged},
              {"iters", r.iters},
              {"passed", energy_ok && field_ok}},
             out_dir(s) / "gausson.json");
  std::cerr << "validate-gausson: c=" << r.energy_I << " c0=" << ref.c0 << " |diff|=" << diff
            << " relL2=" << rel_l2 << " " << verdict(energy_ok && field_ok) << '\n';
  return energy_ok && field_ok ? kOk : kFailed;
}

inline int cmd_identity_suite(const Options& o) {
  const ProblemSpec s = load(o);
  const double eps = s.eps_list.front();
  const auto [lo, hi] = sweep_box(s, eps);
  const Grid g = build_grid(s.dim, lo, hi, s.h);
  const Problem p = build_problem(s, g, eps);
  std::mt19937_64 rng(s.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_random = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> u(g.size());
    const double scale = std::exp2(-4.0 + 8.0 * unit(rng));
    for (double& v : u) v = scale * (1e-6 + unit(rng));
    worst_random = std::max(worst_random, identity_gap_relative(p, u));
  }
  SolverConfig cfg = s.solver;
  cfg.restarts = 1;
  double critical_gap = std::nan("");
  bool solved = false;
  try {
    const MultiStartResult ms = multi_start(p, cfg);
    critical_gap = identity_gap_relative(p, ms.best.u.values);
    solved = true;
  } catch (const AllRestartsFailed&) {
  }
  const bool ok = worst_random < 1e-10 && solved && critical_gap < 1e-6;
  write_json({{"random_fields", 100},
              {"max_relative_gap_random", worst_random},
              {"relative_gap_critical_point", critical_gap},
              {"critical_point_converged", solved},
              {"passed", ok}},
             out_dir(s) / "identity.json");
  std::cerr << "identity-suite: random " << worst_random << ", critical " << critical_gap << " "
            << verdict(ok) << '\n';
  return ok ? kOk : kFailed;
}

inline int cmd_log_bound(const Options& o) {
  const ProblemSpec s = load(o);
  const Grid g = build_grid(s.dim, s.box_lo, s.box_hi, s.h);
  const LogBoundProbe probe = log_bound_probe(100, s.rng_seed, g, s.split);
  write_json({{"A_hat", probe.A_hat},
              {"B_hat", probe.B_hat},
              {"slack", probe.slack},
              {"violations", probe.violations},
              {"held_out_size", probe.held_out.size()},
              {"linear_growth_C", probe.linear_growth_C},
              {"passed", probe.violations == 0}},
             out_dir(s) / "log_bound.json");
  std::cerr << "log-bound: A=" << probe.A_hat << " B=" << probe.B_hat << " violations=" << probe.violations
            << '\n';
  return probe.violations == 0 ? kOk : kFailed;
}

inline int cmd_selftest(const Options& o) {
  const std::vector<CheckOutcome> checks = run_selftest();
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : checks) {
    std::cerr << '[' << verdict(c.passed) << "] " << c.name << (c.detail.empty() ? "" : ": ") << c.detail
              << '\n';
    ok = ok && c.passed;
    j.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  if (!o.out.empty()) write_json(j, std::filesystem::path(o.out) / "selftest.json");
  return ok ? kOk : kFailed;
}

/// Entry point shared by the `logpen` executable and the tests.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Positive ground states of the logarithmic Schrodinger equation by penalization"};
  app.require_subcommand(1);
  // `--h` is the grid spacing, so help is long-form only
  app.set_help_flag("--help", "print help");
  Options opt;
  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "problem configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "override rng_seed");
    sub->add_option("--h", opt.h, "override grid spacing");
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> subs{
      {app.add_subcommand("solve", "ground state at the first eps"), cmd_solve},
      {app.add_subcommand("sweep", "eps sweep with concentration report"), cmd_sweep},
      {app.add_subcommand("validate-gausson", "compare with the explicit Gausson"), cmd_validate_gausson},
      {app.add_subcommand("identity-suite", "energy identity on random and critical fields"),
       cmd_identity_suite},
      {app.add_subcommand("log-bound", "fit and test the logarithmic bound"), cmd_log_bound},
      {app.add_subcommand("selftest", "module invariant suites"), cmd_selftest}};
  for (auto& [sub, fn] : subs) {
    sub->set_help_flag("--help", "print help");
    add_common(sub, sub->get_name() != "selftest");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cerr << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "logpen: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    for (auto& [sub, fn] : subs)
      if (sub->parsed()) return fn(opt);
  } catch (const HypothesisViolation& e) {
    std::cerr << "logpen: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "logpen: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "logpen: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "logpen: " << e.what() << '\n';
    return kFailed;
  }
  return kConfigError;
}

}  // namespace logpen::cli
