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

// Closed-form error analysis of the Binary Protocol.
//
// Y is the number of noises that end up in the aggregate and Z their sum.
// EY has an exact finite expression in the binomial survival ratios
// C(n - n/2^i, kappa) / C(n, kappa); E|Z| for m i.i.d. Geom(alpha) noises is
//
//   E|Z| = int_0^inf 4 alpha m sin(t) (alpha-1)^(2m)
//                    / (t pi (alpha^2 - 2 alpha cos t + 1)^(m+1)) dt,
//
// evaluated here one 2*pi period at a time.

#ifndef PRIVAGG_ERROR_ANALYTICS_H_
#define PRIVAGG_ERROR_ANALYTICS_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"

namespace privagg {

// C(n - n/2^level, kappa) / C(n, kappa) as a running product; 0 when kappa
// exceeds n - n/2^level. level ranges over [0, log2 n].
absl::StatusOr<double> BinomialSurvivalRatio(int64_t n, int level,
                                             int64_t kappa);

struct NoiseCountQuery {
  int64_t n = 0;      // power of two
  int64_t kappa = 1;  // failed users, >= 1
  double delta = 0.05;
};

absl::StatusOr<double> ExpectedNoiseCountExact(const NoiseCountQuery& query);

// A bound together with whether its parameters are inside the regime where
// the constants behind it were established.
struct BoundResult {
  double value = 0.0;
  bool validated = false;
};

// n - kappa - n (e^{-8k/n} + ln((log2 n + 1)/delta)/8 (e^{-16k/n} - e^{-8k/n})).
// Established for 2^4 <= n <= 2^21 and delta = 0.05; other n are rejected,
// other delta are computed but flagged unvalidated.
absl::StatusOr<BoundResult> ExpectedNoiseCountLowerBound(
    const NoiseCountQuery& query);

struct AbsErrorQuery {
  double alpha = 2.0;
  int64_t m = 1;  // number of Geom(alpha) noises
  // Target error: quad_tol * max(1, E|Z|).
  double quad_tol = 1e-10;
  int64_t max_periods = 50000000;
};

struct AbsErrorResult {
  double value = 0.0;
  double error_estimate = 0.0;
  // Periods integrated explicitly; the rest is covered by `tail`.
  int64_t periods = 0;
  double tail = 0.0;
};

// The E|Z| integrand at t > 0 (its t -> 0 limit at t = 0), in log space.
double AbsErrorIntegrand(double alpha, int64_t m, double t);

// Integral of the integrand over [2 k pi, 2 (k+1) pi].
double AbsErrorPeriodContribution(double alpha, int64_t m, int64_t k);

// Fails with RESOURCE_EXHAUSTED, carrying the partial sum and error estimate
// in the message, when `max_periods` is reached before the stopping rule.
absl::StatusOr<AbsErrorResult> ExpectedAbsErrorIntegral(
    const AbsErrorQuery& query);

struct AbsErrorBoundConstants {
  double xi = 0.96;
  // Overrides c*_n. When unset, c*_n is evaluated from its definition,
  // (1 - eta^2/2)(1 - alpha (m+1) eta^2 / (3 (alpha-1)^2)) with
  // eta^2 = pi (alpha-1)^2 / (4 alpha m).
  std::optional<double> c_star;
  int64_t min_validated_n = 128;
  double validated_epsilon = 0.5;
};

// c_{n,eps} sqrt(gamma) log2(n) sqrt(n) / (eps sqrt(pi)) - 0.1 with
// c_{n,eps} = 2 xi c*_n, for m = gamma n noises at alpha = e^{eps/(log2 n + 1)}.
absl::StatusOr<BoundResult> ExpectedAbsErrorLowerBound(
    int64_t n, double epsilon, double gamma,
    const AbsErrorBoundConstants& constants = {});

// c*_n for the given parameters (see AbsErrorBoundConstants).
double AbsErrorBoundCStar(int64_t n, double epsilon, double gamma);

enum class KappaRule { kLog2N, kNOver64, kConstant };

int64_t KappaFor(KappaRule rule, int64_t n, int64_t constant_kappa = 5);

struct SweepSpec {
  KappaRule rule = KappaRule::kLog2N;
  int64_t constant_kappa = 5;
  int64_t n_min = 16;
  int64_t n_max = 1024;
  double epsilon = 0.5;
  double delta = 0.05;
  double quad_tol = 1e-10;
};

// One point of a sweep: exact EY, E|Z| at m = round(EY), and the bounds.
struct SweepPoint {
  int64_t n = 0;
  int64_t kappa = 0;
  double alpha = 0.0;
  double expected_noise_count = 0.0;
  int64_t noise_count_rounded = 0;
  double abs_error = 0.0;
  // max |E|Z|(m +- 1) - E|Z|(m)|: how much the rounding of EY matters.
  double abs_error_rounding_spread = 0.0;
  std::optional<BoundResult> noise_count_lower_bound;
  std::optional<BoundResult> abs_error_lower_bound;

  double abs_error_per_user() const {
    return abs_error / static_cast<double>(n);
  }
};

// Composed pipeline for one (n, kappa): exact EY -> rounded m -> E|Z|.
absl::StatusOr<SweepPoint> ComputeSweepPoint(int64_t n, int64_t kappa,
                                             double epsilon, double delta,
                                             double quad_tol = 1e-10);

// Powers of two from n_min to n_max inclusive.
absl::StatusOr<std::vector<SweepPoint>> FigureSweep(const SweepSpec& spec);

}  // namespace privagg

#endif  // PRIVAGG_ERROR_ANALYTICS_H_
