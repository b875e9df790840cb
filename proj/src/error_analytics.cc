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

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "boost/math/quadrature/gauss.hpp"
#include "boost/math/quadrature/gauss_kronrod.hpp"
#include "boost/math/special_functions/digamma.hpp"
#include "privagg/binary_protocol.h"

namespace privagg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool IsDelta005(double delta) { return std::abs(delta - 0.05) < 1e-12; }

// (alpha-1)^{2m} / (alpha^2 - 2 alpha cos s + 1)^{m+1}, rewritten with
// alpha^2 - 2 alpha cos s + 1 = (alpha-1)^2 + 4 alpha sin^2(s/2) so nothing
// underflows before the final exp.
double PeriodicKernel(double alpha, int64_t m, double s) {
  const double am1 = alpha - 1.0;
  const double half = std::sin(0.5 * s);
  const double excess = 4.0 * alpha * half * half / (am1 * am1);
  return std::exp(-2.0 * std::log(am1) -
                  static_cast<double>(m + 1) * std::log1p(excess));
}

// Scale on which the kernel decays away from a multiple of 2 pi.
double PeakWidth(double alpha, int64_t m) {
  return (alpha - 1.0) / std::sqrt(alpha * static_cast<double>(m + 1));
}

struct Piece {
  double value = 0.0;
  double error = 0.0;
};

// Composite Gauss-Kronrod (61-point Kronrod, embedded 30-point Gauss) rule
// over one period s in (0, 2 pi), holding the odd periodic numerator
// h(s) = scale * sin(s) * kernel(s) premultiplied by the weights. Every
// period then reduces to sum_i a_i / (2 pi k + s_i). Panels grow
// geometrically away from the spikes at both ends, and each panel is split
// into 2^refinement equal pieces.
class PeriodRule {
 public:
  PeriodRule(double alpha, int64_t m, int refinement) {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;
    using Gauss = boost::math::quadrature::gauss<double, 30>;
    const auto& x = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& wg = Gauss::weights();
    const double scale = 4.0 * alpha * static_cast<double>(m) / kPi;
    const double width = std::min(PeakWidth(alpha, m), kPi);
    const int pieces = 1 << refinement;

    auto add_node = [&](double s, double half, double kron_w, double gauss_w) {
      const double h = scale * std::sin(s) * PeriodicKernel(alpha, m, s);
      nodes_.push_back(s / kTwoPi);
      kronrod_.push_back(half * kron_w * h);
      gauss_.push_back(half * gauss_w * h);
    };
    auto add_panel = [&](double a, double b) {
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      // Even Gauss order: the centre and even indices are Kronrod-only.
      add_node(mid, half, wk[0], 0.0);
      for (size_t i = 1; i < x.size(); ++i) {
        const double gw = (i % 2 == 1) ? wg[i / 2] : 0.0;
        add_node(mid + half * x[i], half, wk[i], gw);
        add_node(mid - half * x[i], half, wk[i], gw);
      }
      panel_end_.push_back(nodes_.size());
    };
    double near = 0.0;
    double far = width;
    while (near < kPi) {
      for (int p = 0; p < pieces; ++p) {
        const double a = near + (far - near) * p / pieces;
        const double b = near + (far - near) * (p + 1) / pieces;
        add_panel(a, b);
        add_panel(kTwoPi - b, kTwoPi - a);
      }
      near = far;
      far = std::min(2.0 * far, kPi);
    }
    // Moments sum_i a_i u_i^j with u = s / 2 pi in [0, 1], for far periods.
    kronrod_moments_.assign(kMoments, 0.0);
    gauss_moments_.assign(kMoments, 0.0);
    for (size_t i = 0; i < nodes_.size(); ++i) {
      double power = 1.0;
      for (int j = 0; j < kMoments; ++j) {
        kronrod_moments_[j] += kronrod_[i] * power;
        gauss_moments_[j] += gauss_[i] * power;
        power *= nodes_[i];
      }
    }
  }

  // Kronrod and Gauss estimates of the period [2 k pi, 2 (k+1) pi].
  Piece Period(int64_t k) const {
    const double kd = static_cast<double>(k);
    double kron = 0.0, gauss = 0.0;
    if (k < kSeriesFrom) {
      for (size_t i = 0; i < nodes_.size(); ++i) {
        const double inv = 1.0 / (kTwoPi * (kd + nodes_[i]));
        kron += kronrod_[i] * inv;
        gauss += gauss_[i] * inv;
      }
    } else {
      // 1 / (k + u) = sum_j (-u)^j / k^{j+1}; |u / k| <= 1 / kSeriesFrom.
      const double inv_k = 1.0 / kd;
      for (int j = kMoments - 1; j >= 0; --j) {
        kron = kronrod_moments_[j] - kron * inv_k;
        gauss = gauss_moments_[j] - gauss * inv_k;
      }
      kron *= inv_k / kTwoPi;
      gauss *= inv_k / kTwoPi;
    }
    return {kron, std::abs(kron - gauss)};
  }

  // All periods k >= first in closed form: sum_{k>=K} 1/(k + u) - 1/k =
  // psi(K) - psi(K + u), and h has zero mean over a period, so the tail is
  // -(1/2pi) sum_i a_i (psi(K + u_i) - psi(K)).
  Piece Tail(int64_t first) const {
    const double kd = static_cast<double>(first);
    const double psi_k = boost::math::digamma(kd);
    double kron = 0.0, gauss = 0.0;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const double weight = boost::math::digamma(kd + nodes_[i]) - psi_k;
      kron -= kronrod_[i] * weight;
      gauss -= gauss_[i] * weight;
    }
    return {kron / kTwoPi, std::abs(kron - gauss) / kTwoPi};
  }

  // Sum over panels of |Kronrod - Gauss| for the first period; a per-panel
  // bound that cannot cancel across panels.
  double PanelErrorBound() const {
    double bound = 0.0;
    size_t begin = 0;
    for (size_t end : panel_end_) {
      double diff = 0.0;
      for (size_t i = begin; i < end; ++i) {
        diff += (kronrod_[i] - gauss_[i]) / (kTwoPi * nodes_[i]);
      }
      bound += std::abs(diff);
      begin = end;
    }
    return bound;
  }

 private:
  static constexpr int kMoments = 14;
  static constexpr int64_t kSeriesFrom = 32;

  std::vector<double> nodes_;  // s / 2 pi
  std::vector<double> kronrod_;
  std::vector<double> gauss_;
  std::vector<size_t> panel_end_;
  std::vector<double> kronrod_moments_;
  std::vector<double> gauss_moments_;
};

constexpr int kMaxRefinement = 5;

}  // namespace

absl::StatusOr<double> BinomialSurvivalRatio(int64_t n, int level,
                                             int64_t kappa) {
  const int depth = ExactLog2(n);
  if (depth < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("n must be a power of two, got ", n));
  }
  if (level < 0 || level > depth) {
    return absl::InvalidArgumentError(
        absl::StrCat("level ", level, " outside [0, ", depth, "]"));
  }
  if (kappa < 0 || kappa > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("kappa ", kappa, " outside [0, ", n, "]"));
  }
  const int64_t segment = n >> level;
  if (kappa > n - segment) return 0.0;
  // prod_{j<kappa} (n - segment - j) / (n - j), summed as logs of
  // 1 - segment / (n - j).
  double log_ratio = 0.0;
  for (int64_t j = 0; j < kappa; ++j) {
    log_ratio += std::log1p(-static_cast<double>(segment) /
                            static_cast<double>(n - j));
  }
  return std::exp(log_ratio);
}

absl::StatusOr<double> ExpectedNoiseCountExact(const NoiseCountQuery& query) {
  auto config = TreeConfig::Create(query.n, /*epsilon=*/1.0, query.delta);
  if (!config.ok()) return config.status();
  if (query.kappa < 1 || query.kappa > query.n) {
    return absl::InvalidArgumentError(
        absl::StrCat("kappa must lie in [1, n], got ", query.kappa));
  }
  const std::vector<double> betas = BetaSchedule(*config);
  const int depth = config->depth();
  const double n = static_cast<double>(query.n);

  // Leaves aggregated on their own: exactly n - kappa survivors times
  // beta_L; the familiar n - kappa is this term with beta_L = 1.
  double expected =
      static_cast<double>(query.n - query.kappa) * betas[depth];
  for (int level = 1; level < depth; ++level) {
    auto ratio = BinomialSurvivalRatio(query.n, level, query.kappa);
    if (!ratio.ok()) return ratio.status();
    expected += n * *ratio * (betas[level] - betas[level + 1]);
  }
  return expected;
}

absl::StatusOr<BoundResult> ExpectedNoiseCountLowerBound(
    const NoiseCountQuery& query) {
  const int depth = ExactLog2(query.n);
  if (depth < 4 || depth > 21) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise-count lower bound needs n a power of two in [2^4, 2^21], got ",
        query.n));
  }
  if (query.kappa < 1 || query.kappa > query.n) {
    return absl::InvalidArgumentError(
        absl::StrCat("kappa must lie in [1, n], got ", query.kappa));
  }
  if (!(query.delta > 0.0 && query.delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", query.delta));
  }
  const double n = static_cast<double>(query.n);
  const double kappa = static_cast<double>(query.kappa);
  const double beta_star = std::log((depth + 1) / query.delta);
  const double e8 = std::exp(-8.0 * kappa / n);
  const double e16 = std::exp(-16.0 * kappa / n);
  const double value = n - kappa - n * (e8 + beta_star / 8.0 * (e16 - e8));
  return BoundResult{value, IsDelta005(query.delta)};
}

double AbsErrorIntegrand(double alpha, int64_t m, double t) {
  const double sinc = t == 0.0 ? 1.0 : std::sin(t) / t;
  return 4.0 * alpha * static_cast<double>(m) / kPi * sinc *
         PeriodicKernel(alpha, m, t);
}

double AbsErrorPeriodContribution(double alpha, int64_t m, int64_t k) {
  if (m == 0) return 0.0;
  return PeriodRule(alpha, m, /*refinement=*/1).Period(k).value;
}

absl::StatusOr<AbsErrorResult> ExpectedAbsErrorIntegral(
    const AbsErrorQuery& query) {
  if (!(query.alpha > 1.0) || !std::isfinite(query.alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be > 1, got ", query.alpha));
  }
  if (query.m < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("noise count m must be >= 0, got ", query.m));
  }
  if (!(query.quad_tol > 0.0)) {
    return absl::InvalidArgumentError("quad_tol must be positive");
  }
  AbsErrorResult result;
  if (query.m == 0) return result;

  double total = 0.0;
  double error = 0.0;
  int64_t k = 0;
  bool stopped = false;
  for (int refinement = 0; refinement <= kMaxRefinement; ++refinement) {
    const PeriodRule rule(query.alpha, query.m, refinement);
    total = 0.0;
    error = rule.PanelErrorBound();
    stopped = false;
    for (k = 0; k < query.max_periods; ++k) {
      const Piece period = rule.Period(k);
      total += period.value;
      error += period.error;
      if (k >= 4 && std::abs(period.value) < query.quad_tol * std::abs(total)) {
        ++k;
        stopped = true;
        break;
      }
    }
    const Piece tail = rule.Tail(k);
    result.value = total + tail.value;
    result.error_estimate = error + tail.error;
    result.periods = k;
    result.tail = tail.value;
    if (result.error_estimate <=
        query.quad_tol * std::max(1.0, std::abs(result.value))) {
      break;
    }
  }
  if (!stopped) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "E|Z| quadrature did not meet its stopping rule within ",
        query.max_periods, " periods; partial sum ", total,
        ", tail-corrected estimate ", result.value, ", error estimate ",
        result.error_estimate));
  }
  return result;
}

double AbsErrorBoundCStar(int64_t n, double epsilon, double gamma) {
  const double depth = std::log2(static_cast<double>(n));
  const double alpha = std::exp(epsilon / (depth + 1.0));
  const double m = gamma * static_cast<double>(n);
  const double am1 = alpha - 1.0;
  const double eta_sq = kPi * am1 * am1 / (4.0 * alpha * m);
  return (1.0 - eta_sq / 2.0) *
         (1.0 - alpha * (m + 1.0) * eta_sq / (3.0 * am1 * am1));
}

absl::StatusOr<BoundResult> ExpectedAbsErrorLowerBound(
    int64_t n, double epsilon, double gamma,
    const AbsErrorBoundConstants& constants) {
  if (ExactLog2(n) < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("n must be a power of two >= 2, got ", n));
  }
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be > 0, got ", epsilon));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must lie in [0, 1], got ", gamma));
  }
  const bool validated =
      n >= constants.min_validated_n &&
      std::abs(epsilon - constants.validated_epsilon) < 1e-12;
  if (gamma == 0.0) return BoundResult{-0.1, validated};

  const double c_star =
      constants.c_star.value_or(AbsErrorBoundCStar(n, epsilon, gamma));
  const double c = 2.0 * constants.xi * c_star;
  const double nd = static_cast<double>(n);
  const double value = c * std::sqrt(gamma) * std::log2(nd) * std::sqrt(nd) /
                           (epsilon * std::sqrt(kPi)) -
                       0.1;
  return BoundResult{value, validated};
}

int64_t KappaFor(KappaRule rule, int64_t n, int64_t constant_kappa) {
  switch (rule) {
    case KappaRule::kLog2N:
      return static_cast<int64_t>(std::floor(std::log2(static_cast<double>(n))));
    case KappaRule::kNOver64:
      return n / 64;
    case KappaRule::kConstant:
      return constant_kappa;
  }
  return 0;
}

absl::StatusOr<SweepPoint> ComputeSweepPoint(int64_t n, int64_t kappa,
                                             double epsilon, double delta,
                                             double quad_tol) {
  auto config = TreeConfig::Create(n, epsilon, delta);
  if (!config.ok()) return config.status();
  auto ey = ExpectedNoiseCountExact({n, kappa, delta});
  if (!ey.ok()) return ey.status();

  SweepPoint point;
  point.n = n;
  point.kappa = kappa;
  point.alpha = config->alpha();
  point.expected_noise_count = *ey;
  point.noise_count_rounded = std::llround(*ey);

  auto abs_error_at = [&](int64_t m) -> absl::StatusOr<double> {
    auto r = ExpectedAbsErrorIntegral({point.alpha, m, quad_tol});
    if (!r.ok()) return r.status();
    return r->value;
  };
  auto abs_error = abs_error_at(point.noise_count_rounded);
  if (!abs_error.ok()) return abs_error.status();
  point.abs_error = *abs_error;
  for (int64_t neighbor : {point.noise_count_rounded - 1,
                           point.noise_count_rounded + 1}) {
    if (neighbor < 0) continue;
    auto other = abs_error_at(neighbor);
    if (!other.ok()) return other.status();
    point.abs_error_rounding_spread =
        std::max(point.abs_error_rounding_spread, std::abs(*other - *abs_error));
  }

  if (config->depth() >= 4) {
    auto bound = ExpectedNoiseCountLowerBound({n, kappa, delta});
    if (!bound.ok()) return bound.status();
    point.noise_count_lower_bound = *bound;
  }
  const double gamma = std::min(
      1.0, static_cast<double>(point.noise_count_rounded) / static_cast<double>(n));
  auto abs_bound = ExpectedAbsErrorLowerBound(n, epsilon, gamma);
  if (!abs_bound.ok()) return abs_bound.status();
  point.abs_error_lower_bound = *abs_bound;
  return point;
}

absl::StatusOr<std::vector<SweepPoint>> FigureSweep(const SweepSpec& spec) {
  const int lo = ExactLog2(spec.n_min);
  const int hi = ExactLog2(spec.n_max);
  if (lo < 4 || hi > 21 || lo > hi) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sweep range must be powers of two within [2^4, 2^21], got [",
        spec.n_min, ", ", spec.n_max, "]"));
  }
  std::vector<SweepPoint> points;
  for (int depth = lo; depth <= hi; ++depth) {
    const int64_t n = int64_t{1} << depth;
    const int64_t kappa = KappaFor(spec.rule, n, spec.constant_kappa);
    auto point =
        ComputeSweepPoint(n, kappa, spec.epsilon, spec.delta, spec.quad_tol);
    if (!point.ok()) return point.status();
    points.push_back(*point);
  }
  return points;
}

}  // namespace privagg
