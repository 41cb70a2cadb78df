#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logpen/logsplit.hpp"

namespace logpen {
namespace {

const SplitParams kSplit{0.1, 4.0};

TEST(F1, Values) {
  EXPECT_EQ(f1(0.0, kSplit), 0.0);
  // inner branch against the raw formula -s^2 log(s^2) / 2
  EXPECT_NEAR(f1(0.05, kSplit), -0.5 * 0.0025 * std::log(0.0025), 1e-15);
  EXPECT_NEAR(f1(0.05, kSplit), 0.0074893, 5e-8);
  // outer branch: -(log 0.01 + 3)/2 + 0.2 - 0.005
  EXPECT_NEAR(f1(1.0, kSplit), -0.5 * (std::log(0.01) + 3.0) + 0.2 - 0.005, 1e-14);
  EXPECT_NEAR(f1(1.0, kSplit), 0.997585, 1e-6);
}

TEST(F1Prime, Values) {
  EXPECT_EQ(f1_prime(0.0, kSplit), 0.0);
  EXPECT_NEAR(f1_prime(1e-300, kSplit), 0.0, 1e-295);
  EXPECT_NEAR(f1_prime(0.05, kSplit), 0.249573, 1e-6);
  // both branch formulas at s = delta
  const double inner = -0.1 * std::log(0.01) - 0.1;
  const double outer = -0.1 * (std::log(0.01) + 3.0) + 0.2;
  EXPECT_NEAR(inner, outer, 1e-15);
  EXPECT_NEAR(f1_prime(0.1, kSplit), 0.360517, 1e-6);
  EXPECT_NEAR(f1_prime(std::nextafter(0.1, 0.0), kSplit), inner, 1e-12);
}

TEST(F2, Values) {
  EXPECT_EQ(f2(0.05, kSplit), 0.0);
  EXPECT_EQ(f2(0.1, kSplit), 0.0);
  EXPECT_NEAR(f2(1.0, kSplit), 0.997585, 1e-6);
  EXPECT_NEAR(f2(1.0, kSplit), f1(1.0, kSplit), 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double s = d(rng);
    EXPECT_EQ(f2(-s, kSplit), f2(s, kSplit));
    EXPECT_EQ(f1(-s, kSplit), f1(s, kSplit));
    EXPECT_EQ(f2_prime(-s, kSplit), -f2_prime(s, kSplit));
    EXPECT_EQ(f1_prime(-s, kSplit), -f1_prime(s, kSplit));
  }
}

TEST(F2Prime, Values) {
  EXPECT_EQ(f2_prime(0.1, kSplit), 0.0);
  EXPECT_NEAR(f2_prime(1.0, kSplit), std::log(100.0) - 2.0 + 0.2, 1e-14);
  EXPECT_NEAR(f2_prime(1.0, kSplit), 2.80517, 1e-5);
  // cross-check: F2' = s log s^2 + s + F1'
  EXPECT_NEAR(f2_prime(1.0, kSplit), 0.0 + 1.0 + f1_prime(1.0, kSplit), 1e-14);
}

TEST(F2Prime, RatioNondecreasing) {
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double s = 1e-4 * std::pow(1e5, i / 400.0);
    const double r = f2_prime(s, kSplit) / s;
    EXPECT_GE(r, prev - 1e-15) << "s = " << s;
    prev = r;
  }
}

TEST(DerivativesMatchDifferenceQuotients, BothParts) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-3, 1);
  for (int i = 0; i < 300; ++i) {
    const double s = std::pow(10.0, d(rng));
    if (std::abs(s - kSplit.delta) < 1e-4) continue;
    const double step = 1e-7 * s;
    EXPECT_NEAR((f1(s + step, kSplit) - f1(s - step, kSplit)) / (2 * step), f1_prime(s, kSplit),
                1e-6 * (1 + std::abs(f1_prime(s, kSplit))));
    EXPECT_NEAR((f2(s + step, kSplit) - f2(s - step, kSplit)) / (2 * step), f2_prime(s, kSplit),
                1e-6 * (1 + std::abs(f2_prime(s, kSplit))));
  }
}

bool midpoint_convex(const SplitParams& sp) {
  for (int i = 0; i <= 400; ++i) {
    for (int j = i + 1; j <= 400; ++j) {
      const double a = -1.0 + i / 200.0, b = -1.0 + j / 200.0;
      if (f1(0.5 * (a + b), sp) > 0.5 * (f1(a, sp) + f1(b, sp)) + 1e-14) return false;
    }
  }
  return true;
}

TEST(ConvexityBound, Value) {
  EXPECT_NEAR(delta_convexity_bound(), 0.2231302, 1e-7);
  // inner-branch F1'' = -log s^2 - 3 vanishes at the bound
  const double b = delta_convexity_bound();
  EXPECT_NEAR(-std::log(b * b) - 3.0, 0.0, 1e-14);
}

TEST(ConvexityBound, MidpointSweep) {
  EXPECT_TRUE(midpoint_convex({0.1, 4.0}));
  EXPECT_FALSE(midpoint_convex({0.5, 4.0}));
  EXPECT_THROW(validate(SplitParams{0.5, 4.0}), ConfigError);
  EXPECT_THROW(validate(SplitParams{0.1, 2.0}), ConfigError);
  EXPECT_NO_THROW(validate(SplitParams{delta_convexity_bound(), 3.0}));
}

TEST(SplitProperties, ExactReconstruction) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> e(-8.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double s = std::pow(10.0, e(rng));
    const double exact = 0.5 * s * s * std::log(s * s);
    // relative to the magnitudes involved, since s^2 log s^2 crosses zero at s = 1
    const double scale = std::max({std::abs(exact), std::abs(f1(s, kSplit)), std::abs(f2(s, kSplit))});
    worst = std::max(worst, std::abs(f2(s, kSplit) - f1(s, kSplit) - exact) / scale);
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(SplitProperties, C1MatchingAtDelta) {
  for (double d : {0.1, 0.05, 0.2}) {
    const SplitParams sp{d, 4.0};
    for (double sign : {1.0, -1.0}) {
      const double in = sign * std::nextafter(d, 0.0), at = sign * d;
      EXPECT_NEAR(f1(in, sp), f1(at, sp), 1e-12);
      EXPECT_NEAR(f1_prime(in, sp), f1_prime(at, sp), 1e-12);
      EXPECT_NEAR(f2(in, sp), f2(at, sp), 1e-12);
      EXPECT_NEAR(f2_prime(in, sp), f2_prime(at, sp), 1e-12);
      const double out = sign * std::nextafter(d, 1.0);
      EXPECT_NEAR(f2(out, sp), 0.0, 1e-12);
      EXPECT_NEAR(f2_prime(out, sp), 0.0, 1e-12);
    }
  }
}

TEST(SplitProperties, SignAndPositivity) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-50, 50);
  for (int i = 0; i < 5000; ++i) {
    const double s = d(rng) * std::pow(10.0, -static_cast<int>(i % 6));
    EXPECT_GE(f1_prime(s, kSplit) * s, 0.0);
    EXPECT_GE(f1(s, kSplit), 0.0);
  }
}

TEST(SplitProperties, GrowthDiagnostic) {
  // |F2'(s)| <= C |s|^{p-1} with p = 4: report the empirical C on (0, 10]
  double c = 0.0;
  for (int i = 1; i <= 10000; ++i) {
    const double s = 10.0 * i / 10000.0;
    c = std::max(c, std::abs(f2_prime(s, kSplit)) / std::pow(s, kSplit.p_diag - 1.0));
  }
  RecordProperty("growth_constant", std::to_string(c));
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_GT(c, 0.0);
}

}  // namespace
}  // namespace logpen
