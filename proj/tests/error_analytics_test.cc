// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "privagg/error_analytics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gtest/gtest.h"
#include "privagg/binary_protocol.h"
#include "privagg/noise.h"
#include "test_util.h"

namespace privagg {
namespace {

using ::privagg::testing::MeanAccumulator;

// C(a, b) exactly for the small arguments used here.
double Choose(int64_t a, int64_t b) {
  if (b < 0 || b > a) return 0.0;
  long double result = 1.0L;
  for (int64_t j = 1; j <= b; ++j) result = result * (a - b + j) / j;
  return static_cast<double>(result);
}

// E|Z| through the cosine series of the periodic factor: with
// g(t) = (alpha-1)^{2m} / (alpha^2 - 2 alpha cos t + 1)^{m+1} and
// int_0^inf sin(t) cos(jt) / t dt = pi/4 (j = 1), pi/2 (j = 0), 0 (j >= 2),
// E|Z| = alpha m (a_0 + a_1) where a_j = (1/pi) int_0^{2pi} g cos(jt).
// The Fourier coefficients of a smooth periodic function are computed with
// the trapezoidal rule, which converges geometrically.
double AbsErrorByCosineSeries(double alpha, int64_t m) {
  const double am1 = alpha - 1.0;
  const double width = am1 / std::sqrt(alpha * (m + 1));
  const int64_t points = std::max<int64_t>(
      1 << 14, static_cast<int64_t>(400 * 2 * std::numbers::pi / width));
  double a0 = 0.0, a1 = 0.0;
  for (int64_t i = 0; i < points; ++i) {
    const double t = 2 * std::numbers::pi * i / points;
    const double s = std::sin(t / 2);
    const double g = std::exp(-2 * std::log(am1) -
                              (m + 1) * std::log1p(4 * alpha * s * s / (am1 * am1)));
    a0 += g;
    a1 += g * std::cos(t);
  }
  a0 *= 2.0 / points;
  a1 *= 2.0 / points;
  return alpha * m * (a0 + a1);
}

double Integral(double alpha, int64_t m, double tol = 1e-10) {
  auto result = ExpectedAbsErrorIntegral({alpha, m, tol});
  EXPECT_TRUE(result.ok()) << result.status();
  return result.ok() ? result->value : NAN;
}

TEST(BinomialSurvivalRatioTest, Examples) {
  EXPECT_NEAR(*BinomialSurvivalRatio(8, 3, 1), 7.0 / 8.0, 1e-15);
  for (int level = 0; level <= 5; ++level) {
    EXPECT_EQ(*BinomialSurvivalRatio(32, level, 0), 1.0);
  }
  EXPECT_EQ(*BinomialSurvivalRatio(8, 1, 5), 0.0);
  EXPECT_EQ(*BinomialSurvivalRatio(8, 0, 1), 0.0);
}

TEST(BinomialSurvivalRatioTest, MatchesFactorialRatio) {
  for (int64_t n : {4, 8, 16, 32, 64}) {
    for (int level = 0; level <= ExactLog2(n); ++level) {
      for (int64_t kappa = 0; kappa <= std::min<int64_t>(6, n); ++kappa) {
        const double expected =
            Choose(n - (n >> level), kappa) / Choose(n, kappa);
        auto ratio = BinomialSurvivalRatio(n, level, kappa);
        ASSERT_TRUE(ratio.ok());
        EXPECT_NEAR(*ratio, expected, 1e-14 * std::max(1.0, expected))
            << n << " " << level << " " << kappa;
        EXPECT_GE(*ratio, 0.0);
        EXPECT_LE(*ratio, 1.0);
      }
    }
  }
}

TEST(BinomialSurvivalRatioTest, RejectsBadArguments) {
  EXPECT_FALSE(BinomialSurvivalRatio(12, 1, 1).ok());
  EXPECT_FALSE(BinomialSurvivalRatio(8, 4, 1).ok());
  EXPECT_FALSE(BinomialSurvivalRatio(8, 1, 9).ok());
}

TEST(ExpectedNoiseCountExactTest, AllClippedTreeIsSurvivorCount) {
  auto ey = ExpectedNoiseCountExact({8, 1, 0.05});
  ASSERT_TRUE(ey.ok());
  EXPECT_NEAR(*ey, 7.0, 1e-12);
}

TEST(ExpectedNoiseCountExactTest, MatchesEnumeration) {
  for (int64_t n : {8, 16, 32}) {
    for (int64_t kappa : {1, 2, 3}) {
      auto exact = ExpectedNoiseCountExact({n, kappa, 0.05});
      auto brute = NoiseCountBruteforce(n, kappa, 0.05);
      ASSERT_TRUE(exact.ok());
      ASSERT_TRUE(brute.ok());
      EXPECT_LE(std::abs(*exact - *brute), 1e-12 * *brute)
          << "n=" << n << " kappa=" << kappa;
    }
  }
  // Also off the default delta, including one where the leaves are not
  // clipped to beta = 1.
  for (double delta : {1e-4, 0.3, 0.9}) {
    auto exact = ExpectedNoiseCountExact({16, 2, delta});
    auto brute = NoiseCountBruteforce(16, 2, delta);
    ASSERT_TRUE(exact.ok());
    ASSERT_TRUE(brute.ok());
    EXPECT_LE(std::abs(*exact - *brute), 1e-12 * *brute) << "delta=" << delta;
  }
}

TEST(ExpectedNoiseCountExactTest, CorollaryFractions) {
  EXPECT_GE(*ExpectedNoiseCountExact({1024, 10, 0.05}), 0.1 * 1024);
  EXPECT_GE(*ExpectedNoiseCountExact({4096, 64, 0.05}), 0.16 * 4096);
}

TEST(ExpectedNoiseCountExactTest, NeverExceedsSurvivors) {
  for (int depth = 1; depth <= 21; ++depth) {
    const int64_t n = int64_t{1} << depth;
    for (int64_t kappa : {int64_t{1}, int64_t{depth}, n / 64, int64_t{5}, n}) {
      if (kappa < 1 || kappa > n) continue;
      auto ey = ExpectedNoiseCountExact({n, kappa, 0.05});
      ASSERT_TRUE(ey.ok());
      EXPECT_LE(*ey, static_cast<double>(n - kappa) + 1e-9 * n);
      EXPECT_GE(*ey, 0.0);
    }
  }
}

TEST(ExpectedNoiseCountExactTest, RejectsZeroKappa) {
  EXPECT_FALSE(ExpectedNoiseCountExact({16, 0, 0.05}).ok());
  EXPECT_FALSE(ExpectedNoiseCountExact({16, 17, 0.05}).ok());
  EXPECT_FALSE(ExpectedNoiseCountExact({24, 1, 0.05}).ok());
}

TEST(ExpectedNoiseCountLowerBoundTest, BelowExactOnValidatedGrid) {
  for (int depth = 4; depth <= 21; ++depth) {
    const int64_t n = int64_t{1} << depth;
    for (KappaRule rule :
         {KappaRule::kLog2N, KappaRule::kNOver64, KappaRule::kConstant}) {
      const int64_t kappa = KappaFor(rule, n);
      if (kappa < 1) continue;
      auto bound = ExpectedNoiseCountLowerBound({n, kappa, 0.05});
      auto exact = ExpectedNoiseCountExact({n, kappa, 0.05});
      ASSERT_TRUE(bound.ok());
      ASSERT_TRUE(exact.ok());
      EXPECT_TRUE(bound->validated);
      EXPECT_LE(bound->value, *exact) << "n=" << n << " kappa=" << kappa;
    }
  }
}

TEST(ExpectedNoiseCountLowerBoundTest, SmallestTrees) {
  auto b16 = ExpectedNoiseCountLowerBound({16, 1, 0.05});
  ASSERT_TRUE(b16.ok());
  EXPECT_TRUE(std::isfinite(b16->value));
  EXPECT_LE(b16->value, *ExpectedNoiseCountExact({16, 1, 0.05}));

  auto b64 = ExpectedNoiseCountLowerBound({64, 1, 0.05});
  const double ey64 = *ExpectedNoiseCountExact({64, 1, 0.05});
  ASSERT_TRUE(b64.ok());
  EXPECT_LE(b64->value, ey64);
  EXPECT_LE(ey64, 63.0);
}

TEST(ExpectedNoiseCountLowerBoundTest, RegimeChecks) {
  EXPECT_FALSE(ExpectedNoiseCountLowerBound({8, 1, 0.05}).ok());
  EXPECT_FALSE(
      ExpectedNoiseCountLowerBound({int64_t{1} << 22, 1, 0.05}).ok());
  auto other_delta = ExpectedNoiseCountLowerBound({1024, 10, 0.01});
  ASSERT_TRUE(other_delta.ok());
  EXPECT_FALSE(other_delta->validated);
}

TEST(AbsErrorIntegralTest, SingleNoiseMatchesClosedForm) {
  for (double alpha : {1.05, 1.5, 3.0, 10.0}) {
    const double closed = 2 * alpha / (alpha * alpha - 1);
    EXPECT_NEAR(Integral(alpha, 1), closed, 1e-8 * closed) << alpha;
  }
  EXPECT_NEAR(Integral(3.0, 1), 0.75, 1e-9);
}

TEST(AbsErrorIntegralTest, NoNoisesNoError) {
  auto result = ExpectedAbsErrorIntegral({2.0, 0, 1e-10});
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result->value, 0.0);
}

TEST(AbsErrorIntegralTest, RejectsBadQueries) {
  EXPECT_FALSE(ExpectedAbsErrorIntegral({1.0, 3, 1e-10}).ok());
  EXPECT_FALSE(ExpectedAbsErrorIntegral({2.0, -1, 1e-10}).ok());
  EXPECT_FALSE(ExpectedAbsErrorIntegral({2.0, 1, 0.0}).ok());
}

TEST(AbsErrorIntegralTest, ReportsExhaustedPeriodBudget) {
  AbsErrorQuery query{3.0, 1, 1e-14};
  query.max_periods = 2;
  auto result = ExpectedAbsErrorIntegral(query);
  EXPECT_EQ(result.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_NE(result.status().message().find("partial sum"), std::string::npos);
}

TEST(AbsErrorIntegralTest, AgreesWithCosineSeries) {
  struct Case {
    double alpha;
    int64_t m;
  };
  for (const Case& c : std::vector<Case>{{3.0, 1},
                                         {1.5, 10},
                                         {1.05, 100},
                                         {std::exp(0.5 / 11), 500},
                                         {std::exp(0.5 / 13), 1243},
                                         {std::exp(0.5 / 22), 600000}}) {
    const double quad = Integral(c.alpha, c.m);
    const double series = AbsErrorByCosineSeries(c.alpha, c.m);
    EXPECT_NEAR(quad, series, 1e-8 * series)
        << "alpha=" << c.alpha << " m=" << c.m;
  }
}

TEST(AbsErrorIntegralTest, AgreesWithMonteCarlo) {
  constexpr int kTrials = 100000;
  const double alpha = std::exp(0.5 / 11);
  const int64_t m = 100;
  const GeomParams params = *GeomParams::Create(alpha);
  Rng rng(21);
  MeanAccumulator abs_sum;
  for (int t = 0; t < kTrials; ++t) {
    int64_t sum = 0;
    for (int64_t j = 0; j < m; ++j) sum += SampleGeom(params, rng);
    abs_sum.Add(std::abs(static_cast<double>(sum)));
  }
  EXPECT_NEAR(Integral(alpha, m), abs_sum.mean(), 3 * abs_sum.stderr_of_mean());
}

TEST(AbsErrorIntegralTest, LaterPeriodsContributeNonNegatively) {
  for (auto [alpha, m] : {std::pair<double, int64_t>{3.0, 1},
                          {1.5, 10},
                          {1.05, 100},
                          {std::exp(0.5 / 11), 500}}) {
    const double scale = Integral(alpha, m);
    for (int64_t k = 1; k <= 30; ++k) {
      EXPECT_GE(AbsErrorPeriodContribution(alpha, m, k), -1e-13 * scale)
          << "alpha=" << alpha << " m=" << m << " k=" << k;
    }
  }
}

TEST(AbsErrorIntegralTest, ErrorEstimateWithinTolerance) {
  auto result = ExpectedAbsErrorIntegral({1.05, 100, 1e-10});
  ASSERT_TRUE(result.ok());
  EXPECT_LE(result->error_estimate, 1e-10 * std::max(1.0, result->value));
  EXPECT_GE(result->periods, 5);
}

TEST(AbsErrorLowerBoundTest, ZeroNoisesIsVacuous) {
  auto bound = ExpectedAbsErrorLowerBound(1024, 0.5, 0.0);
  ASSERT_TRUE(bound.ok());
  EXPECT_EQ(bound->value, -0.1);
}

TEST(AbsErrorLowerBoundTest, BelowIntegralAtSmallestValidatedTree) {
  auto bound = ExpectedAbsErrorLowerBound(128, 0.5, 0.5);
  ASSERT_TRUE(bound.ok());
  EXPECT_TRUE(bound->validated);
  EXPECT_LE(bound->value, Integral(std::exp(0.5 / 8), 64));
  // c_{n,eps} = 2 xi c*_n lands just above 1.4.
  const double c = 2 * 0.96 * AbsErrorBoundCStar(128, 0.5, 0.5);
  EXPECT_GT(c, 1.4);
  EXPECT_LT(c, 1.5);
}

TEST(AbsErrorLowerBoundTest, LiteralConstant143OverstatesIntegral) {
  AbsErrorBoundConstants literal;
  literal.c_star = 1.43;
  auto bound = ExpectedAbsErrorLowerBound(128, 0.5, 0.5, literal);
  ASSERT_TRUE(bound.ok());
  EXPECT_GT(bound->value, Integral(std::exp(0.5 / 8), 64));
}

TEST(AbsErrorLowerBoundTest, BelowIntegralAcrossGrid) {
  for (int depth = 7; depth <= 16; ++depth) {
    const int64_t n = int64_t{1} << depth;
    for (KappaRule rule :
         {KappaRule::kLog2N, KappaRule::kNOver64, KappaRule::kConstant}) {
      const int64_t kappa = KappaFor(rule, n);
      if (kappa < 1) continue;
      auto point = ComputeSweepPoint(n, kappa, 0.5, 0.05);
      ASSERT_TRUE(point.ok());
      ASSERT_TRUE(point->abs_error_lower_bound.has_value());
      EXPECT_TRUE(point->abs_error_lower_bound->validated);
      EXPECT_LE(point->abs_error_lower_bound->value, point->abs_error)
          << "n=" << n << " kappa=" << kappa;
    }
  }
}

TEST(AbsErrorLowerBoundTest, FlagsUnvalidatedRegime) {
  EXPECT_FALSE(ExpectedAbsErrorLowerBound(64, 0.5, 0.5)->validated);
  EXPECT_FALSE(ExpectedAbsErrorLowerBound(1024, 1.0, 0.5)->validated);
  EXPECT_FALSE(ExpectedAbsErrorLowerBound(1000, 0.5, 0.5).ok());
  EXPECT_FALSE(ExpectedAbsErrorLowerBound(1024, 0.5, 1.5).ok());
}

TEST(SweepTest, CorollaryAbsoluteErrors) {
  auto small = ComputeSweepPoint(1024, 10, 0.5, 0.05);
  ASSERT_TRUE(small.ok());
  EXPECT_GE(small->abs_error, 0.15 * 1024);
  auto large = ComputeSweepPoint(4096, 64, 0.5, 0.05);
  ASSERT_TRUE(large.ok());
  EXPECT_GE(large->abs_error, 0.12 * 4096);
}

TEST(SweepTest, FailuresProportionalToNKeepErrorAboveFifthOfN) {
  auto points = FigureSweep({KappaRule::kNOver64, 5, 64, 4096});
  ASSERT_TRUE(points.ok());
  ASSERT_EQ(points->size(), 7u);
  for (const SweepPoint& p : *points) {
    EXPECT_GT(p.abs_error_per_user(), 0.2) << "n=" << p.n;
  }
}

TEST(SweepTest, LogFailuresErrorAtLeastFifteenPercent) {
  auto points = FigureSweep({KappaRule::kLog2N, 5, 16, 1024});
  ASSERT_TRUE(points.ok());
  for (const SweepPoint& p : *points) {
    EXPECT_GE(p.abs_error, 0.15 * p.n) << "n=" << p.n;
  }
}

TEST(SweepTest, NormalizedErrorDecreasesWithN) {
  for (KappaRule rule :
       {KappaRule::kLog2N, KappaRule::kNOver64, KappaRule::kConstant}) {
    const int64_t n_min = rule == KappaRule::kNOver64 ? 64 : 16;
    auto points = FigureSweep({rule, 5, n_min, 1 << 14});
    ASSERT_TRUE(points.ok());
    for (size_t i = 1; i < points->size(); ++i) {
      EXPECT_LT((*points)[i].abs_error_per_user(),
                (*points)[i - 1].abs_error_per_user())
          << "n=" << (*points)[i].n;
    }
  }
}

TEST(SweepTest, RejectsRangeOutsideSupportedTrees) {
  EXPECT_FALSE(FigureSweep({KappaRule::kLog2N, 5, 8, 1024}).ok());
  EXPECT_FALSE(FigureSweep({KappaRule::kLog2N, 5, 16, int64_t{1} << 22}).ok());
  EXPECT_FALSE(FigureSweep({KappaRule::kLog2N, 5, 100, 1024}).ok());
  // n / 64 rounds down to zero failures below 64 users.
  EXPECT_FALSE(FigureSweep({KappaRule::kNOver64, 5, 16, 1024}).ok());
}

}  // namespace
}  // namespace privagg
