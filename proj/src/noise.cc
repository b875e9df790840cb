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

#include "privagg/noise.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privagg {
namespace {

// Below this alpha the pmf is evaluated in log space.
constexpr double kLogSpaceAlpha = 1.01;

// log((alpha - 1) / (alpha + 1)), accurate near alpha = 1.
double LogZeroMass(double alpha) {
  return std::log(alpha - 1.0) - std::log1p(alpha);
}

}  // namespace

GeomParams::GeomParams(double alpha)
    : alpha_(alpha), log_alpha_(std::log1p(alpha - 1.0)) {}

absl::StatusOr<GeomParams> GeomParams::Create(double alpha) {
  if (!std::isfinite(alpha) || !(alpha > 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("geometric parameter alpha must be > 1, got ", alpha));
  }
  return GeomParams(alpha);
}

absl::StatusOr<GeomParams> GeomParams::ForPrivacy(double epsilon,
                                                  int64_t sensitivity) {
  if (!(epsilon > 0.0) || sensitivity < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("need epsilon > 0 and sensitivity >= 1, got epsilon=",
                     epsilon, " sensitivity=", sensitivity));
  }
  return Create(std::exp(epsilon / static_cast<double>(sensitivity)));
}

absl::StatusOr<DilutedParams> DilutedParams::Create(double alpha,
                                                    double beta) {
  auto geom = GeomParams::Create(alpha);
  if (!geom.ok()) return geom.status();
  if (!(beta > 0.0) || beta > 1.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("dilution beta must lie in (0, 1], got ", beta));
  }
  return DilutedParams(*geom, beta);
}

double GeomLogPmf(const GeomParams& params, int64_t k) {
  const double magnitude = static_cast<double>(k < 0 ? -k : k);
  return LogZeroMass(params.alpha()) - magnitude * params.log_alpha();
}

double GeomPmf(const GeomParams& params, int64_t k) {
  if (params.alpha() < kLogSpaceAlpha) return std::exp(GeomLogPmf(params, k));
  const double alpha = params.alpha();
  const double magnitude = static_cast<double>(k < 0 ? -k : k);
  return (alpha - 1.0) / (alpha + 1.0) * std::pow(alpha, -magnitude);
}

int64_t GeomPmfWindow(const GeomParams& params, double threshold) {
  // pmf(K) = zero_mass * alpha^-K <= threshold  <=>  K >= (log z - log t)/ln a
  const double k = (LogZeroMass(params.alpha()) - std::log(threshold)) /
                   params.log_alpha();
  return std::max<int64_t>(0, static_cast<int64_t>(std::ceil(k)));
}

int64_t SampleGeom(const GeomParams& params, Rng& rng) {
  const double alpha = params.alpha();
  const double zero_mass = (alpha - 1.0) / (alpha + 1.0);
  if (UniformDouble(rng) < zero_mass) return 0;
  // Given X != 0, |X| - 1 is geometric with Pr[|X| - 1 >= j] = alpha^-j,
  // inverted from a single (0, 1] uniform.
  const double tail = -std::log(UniformOpenClosed(rng)) / params.log_alpha();
  const int64_t magnitude = 1 + static_cast<int64_t>(std::floor(tail));
  return (rng() & 1u) ? magnitude : -magnitude;
}

NoiseDraw SampleDilutedDraw(const DilutedParams& params, Rng& rng) {
  if (!Bernoulli(rng, params.beta())) return {};
  return {true, SampleGeom(params.geom(), rng)};
}

absl::StatusOr<double> DpRatioCheck(double epsilon, int64_t sensitivity,
                                    int64_t u, int64_t v, int64_t k_lo,
                                    int64_t k_hi) {
  if (std::llabs(u - v) > sensitivity) {
    return absl::InvalidArgumentError(
        absl::StrCat("|u - v| = ", std::llabs(u - v),
                     " exceeds the sensitivity ", sensitivity));
  }
  if (k_lo > k_hi) {
    return absl::InvalidArgumentError("empty k range");
  }
  auto params = GeomParams::ForPrivacy(epsilon, sensitivity);
  if (!params.ok()) return params.status();
  // pmf(k - v) / pmf(k - u) = alpha^(|k - u| - |k - v|) with ln alpha =
  // epsilon / sensitivity. Scaling epsilon by the integer exponent ratio
  // (rather than subtracting two log-pmfs) keeps the ratio at a full shift
  // exactly exp(epsilon).
  double best = 0.0;
  const double sens = static_cast<double>(sensitivity);
  for (int64_t k = k_lo; k <= k_hi; ++k) {
    const int64_t d = std::llabs(k - u) - std::llabs(k - v);
    best = std::max(best, std::exp(epsilon * (static_cast<double>(d) / sens)));
  }
  return best;
}

int64_t CompoundNoiseBound(const DilutedParams& params, int64_t count,
                           double tail_probability) {
  if (count <= 0) return 0;
  const double alpha = params.alpha();
  const double beta = params.beta();
  const double log_alpha = params.geom().log_alpha();
  const double log_tail = std::log(2.0 / tail_probability);
  const double c = 1.0 - 1.0 / alpha;

  // Pr[S > B] <= exp(count * log M(l) - l * (B + 1)) for l in (0, ln alpha),
  // with M the moment generating function of one diluted draw.
  auto required = [&](double l) {
    const double geom_mgf =
        c * c / ((1.0 - std::exp(l) / alpha) * (1.0 - std::exp(-l) / alpha));
    const double log_mgf = std::log1p(beta * (geom_mgf - 1.0));
    return (static_cast<double>(count) * log_mgf + log_tail) / l - 1.0;
  };

  // The objective is unimodal in l; golden-section search on (0, ln alpha).
  double lo = 1e-9 * log_alpha;
  double hi = log_alpha * (1.0 - 1e-9);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = required(x1);
  double f2 = required(x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = required(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = required(x2);
    }
  }
  const double bound = std::min(f1, f2);
  if (!(bound > 0.0)) return 0;
  return static_cast<int64_t>(std::ceil(bound));
}

}  // namespace privagg
