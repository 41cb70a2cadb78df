#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logpen/energy.hpp"
#include "logpen/experiments.hpp"
#include "test_support.hpp"

namespace logpen {
namespace {

using testing::capped_quadratic;
using testing::fd_gradient;
using testing::uniform_field;
using testing::unpenalized;

const double kSqrtPi = std::sqrt(std::numbers::pi);
const double kE = std::numbers::e;

Grid fine_line() { return build_grid(1, {-8, 0}, {8, 0}, 0.01); }

Problem well_problem(double eps) {
  const Grid g = build_grid(1, {-6, 0}, {6, 0}, 0.2);
  return make_problem(g, capped_quadratic(1, {0.5, 0}, 4.0),
                      make_penalty(SplitParams{}, 0.0, Region{1, {-1, 0}, {2, 0}}, eps));
}

TEST(Norm, ZeroAndGausson) {
  const Problem p = unpenalized(fine_line());
  EXPECT_EQ(norm_eps_sq(p, std::vector<double>(p.size(), 0.0)), 0.0);
  const Gausson ref = gausson_reference(p.grid, 0.0);
  EXPECT_NEAR(norm_eps_sq(p, ref.field.values), 1.5 * kE * kSqrtPi, 1e-3);
  EXPECT_NEAR(norm_eps_sq(p, ref.field.values), 7.2271, 1e-3);
}

TEST(EnergyJ, ZeroGaussonAndFiberDecrease) {
  const Problem p = unpenalized(fine_line());
  EXPECT_EQ(energy_J(p, std::vector<double>(p.size(), 0.0)), 0.0);
  const Gausson ref = gausson_reference(p.grid, 0.0);
  const double c0 = 0.5 * kE * kSqrtPi;
  EXPECT_NEAR(ref.c0, c0, 1e-12);
  EXPECT_NEAR(energy_J(p, ref.field.values), 2.40902, 2e-3);
  std::vector<double> triple = ref.field.values;
  for (double& v : triple) v *= 3.0;
  EXPECT_LT(energy_J(p, triple), energy_J(p, ref.field.values));
}

TEST(EnergyI, ZeroAndNonpositive) {
  const Problem p = well_problem(0.5);
  EXPECT_EQ(energy_I(p, std::vector<double>(p.size(), 0.0)), 0.0);
  std::mt19937_64 rng(4);
  const auto u = uniform_field(p.size(), -2.0, 0.0, rng);
  const double e = energy_I(p, u);
  EXPECT_DOUBLE_EQ(e, 0.5 * norm_eps_sq(p, u));
  EXPECT_GT(e, 0.0);
}

TEST(GradI, ZeroField) {
  const Problem p = well_problem(0.5);
  for (double v : grad_I(p, std::vector<double>(p.size(), 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(GradI, MatchesDifferenceQuotients) {
  std::mt19937_64 rng(8);
  for (double eps : {1.0, 0.5}) {
    const Problem p = well_problem(eps);
    for (int trial = 0; trial < 5; ++trial) {
      // mixed-sign fields exercise the u+ truncation
      const auto u = uniform_field(p.size(), -0.3, 1.8, rng);
      const auto g = grad_I(p, u);
      const auto fd = fd_gradient(p, u);
      double err = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        err = std::max(err, std::abs(g[k] - fd[k]));
        scale = std::max(scale, std::abs(g[k]));
      }
      EXPECT_LT(err / scale, 1e-5);
    }
  }
  const Grid g2 = build_grid(2, {-2, -2}, {2, 2}, 0.5);
  const Problem p2 = make_problem(g2, capped_quadratic(2, {0, 0}, 2.0),
                                  make_penalty(SplitParams{}, 0.0, Region{2, {-1, -1}, {1, 1}}, 1.0));
  const auto u = uniform_field(p2.size(), 0.0, 1.5, rng);
  const auto g = grad_I(p2, u), fd = fd_gradient(p2, u);
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(g[k], fd[k], 1e-5 * (1 + std::abs(g[k])));
}

TEST(Identity, ZeroGaussonAndRandom) {
  const Problem p = unpenalized(fine_line());
  EXPECT_EQ(identity_gap(p, std::vector<double>(p.size(), 0.0)), 0.0);
  const Gausson ref = gausson_reference(p.grid, 0.0);
  EXPECT_LT(identity_gap(p, ref.field.values) / mass(p.grid, ref.field.values), 1e-6);

  std::mt19937_64 rng(15);
  const Problem q = well_problem(0.5);
  for (int i = 0; i < 50; ++i) {
    const auto u = uniform_field(q.size(), 1e-6, std::exp2(-3 + i % 8), rng);
    EXPECT_LT(identity_gap_relative(q, u), 1e-10);
  }
}

TEST(EnergyProperties, IAboveJTilde) {
  std::mt19937_64 rng(21);
  for (double eps : {1.0, 0.5, 0.25}) {
    const Problem p = well_problem(eps);
    for (int i = 0; i < 30; ++i) {
      const auto u = uniform_field(p.size(), -1.0, 4.0, rng);
      EXPECT_GE(energy_I(p, u), energy_J_tilde(p, u) - 1e-12 * std::abs(energy_I(p, u)));
    }
  }
}

TEST(EnergyProperties, MountainPassGeometry) {
  const Problem p = well_problem(0.5);
  std::mt19937_64 rng(27);
  const double rho = 1e-2;
  double smallest = INFINITY;
  for (int i = 0; i < 200; ++i) {
    auto d = uniform_field(p.size(), -1.0, 1.0, rng);
    const double n = std::sqrt(norm_eps_sq(p, d));
    for (double& v : d) v *= rho / n;
    smallest = std::min(smallest, energy_I(p, d));
  }
  RecordProperty("alpha", std::to_string(smallest));
  EXPECT_GT(smallest, 0.0);

  // I(2^k u) eventually negative on a cone field
  auto u = uniform_field(p.size(), 0.0, 1.0, rng);
  int threshold = -1;
  for (int k = 0; k < 60; ++k) {
    std::vector<double> w = u;
    for (double& v : w) v *= std::exp2(k);
    if (energy_I(p, w) < 0.0) {
      threshold = k;
      break;
    }
  }
  RecordProperty("negative_from_k", std::to_string(threshold));
  ASSERT_GE(threshold, 0);
  for (int k = threshold; k < threshold + 10; ++k) {
    std::vector<double> w = u;
    for (double& v : w) v *= std::exp2(k);
    EXPECT_LT(energy_I(p, w), 0.0);
  }
}

TEST(EnergyProperties, LogTermReconstruction) {
  const Problem p = unpenalized(fine_line());
  const Gausson ref = gausson_reference(p.grid, 0.0);
  // int u^2 log u^2 for the Gausson is e sqrt(pi) / 2
  EXPECT_NEAR(log_term(p.grid, ref.field.values, p.split()), 0.5 * kE * kSqrtPi, 1e-4);
  const EnergyReport r = energy_report(p, ref.field.values);
  EXPECT_TRUE(std::isfinite(r.value_I) && std::isfinite(r.value_J) && std::isfinite(r.identity_gap));
  EXPECT_NEAR(r.value_I, r.value_J, 1e-12);
}

TEST(Problem, RejectsMismatch) {
  const Problem p = well_problem(1.0);
  EXPECT_THROW(energy_I(p, std::vector<double>(3, 0.0)), ConfigError);
  const Grid g2 = build_grid(2, {-1, -1}, {1, 1}, 0.25);
  EXPECT_THROW(make_problem(g2, testing::constant_potential(1), p.penalty), ConfigError);
}

}  // namespace
}  // namespace logpen
