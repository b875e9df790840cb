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

// Discrete noise used by both aggregation protocols: the symmetric
// (two-sided) geometric distribution Geom(alpha) with
//
//   Pr[X = k] = (alpha - 1) / (alpha + 1) * alpha^(-|k|),
//
// and its beta-diluted variant, which is 0 with probability 1 - beta and a
// Geom(alpha) draw otherwise.

#ifndef PRIVAGG_NOISE_H_
#define PRIVAGG_NOISE_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "privagg/random.h"

namespace privagg {

class GeomParams {
 public:
  // alpha must be finite and > 1.
  static absl::StatusOr<GeomParams> Create(double alpha);

  // Geom(exp(epsilon / sensitivity)), the parameter that makes a shift of at
  // most `sensitivity` epsilon-indistinguishable.
  static absl::StatusOr<GeomParams> ForPrivacy(double epsilon,
                                               int64_t sensitivity);

  double alpha() const { return alpha_; }
  // ln(alpha), computed with log1p so it stays accurate as alpha -> 1.
  double log_alpha() const { return log_alpha_; }

 private:
  explicit GeomParams(double alpha);

  double alpha_;
  double log_alpha_;
};

class DilutedParams {
 public:
  // Requires alpha > 1 and 0 < beta <= 1.
  static absl::StatusOr<DilutedParams> Create(double alpha, double beta);

  const GeomParams& geom() const { return geom_; }
  double alpha() const { return geom_.alpha(); }
  double beta() const { return beta_; }

 private:
  DilutedParams(GeomParams geom, double beta) : geom_(geom), beta_(beta) {}

  GeomParams geom_;
  double beta_;
};

double GeomPmf(const GeomParams& params, int64_t k);
double GeomLogPmf(const GeomParams& params, int64_t k);

// Smallest K such that GeomPmf(k) <= threshold for every |k| > K.
int64_t GeomPmfWindow(const GeomParams& params, double threshold);

int64_t SampleGeom(const GeomParams& params, Rng& rng);

// One diluted draw. `added` records whether the dilution coin came up (a
// Geom draw happened, possibly of value 0); protocols count these.
struct NoiseDraw {
  bool added = false;
  int64_t value = 0;
};

NoiseDraw SampleDilutedDraw(const DilutedParams& params, Rng& rng);

inline int64_t SampleDiluted(const DilutedParams& params, Rng& rng) {
  return SampleDilutedDraw(params, rng).value;
}

// Largest shift-ratio  max_{k in [k_lo, k_hi]} Pr[v + r = k] / Pr[u + r = k]
// for r ~ Geom(exp(epsilon / sensitivity)). Rejects |u - v| > sensitivity,
// where the guarantee does not apply.
absl::StatusOr<double> DpRatioCheck(double epsilon, int64_t sensitivity,
                                    int64_t u, int64_t v, int64_t k_lo,
                                    int64_t k_hi);

// Chernoff bound B with Pr[|r_1 + ... + r_count| > B] <= tail_probability for
// i.i.d. r_j ~ Geom^beta(alpha). Always >= the true quantile.
int64_t CompoundNoiseBound(const DilutedParams& params, int64_t count,
                           double tail_probability);

}  // namespace privagg

#endif  // PRIVAGG_NOISE_H_
