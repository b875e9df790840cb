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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "absl/strings/str_format.h"
#include "privagg/binary_protocol.h"
#include "privagg/error_analytics.h"
#include "privagg/graph.h"
#include "privagg/group.h"
#include "privagg/noise.h"
#include "privagg/paalec.h"
#include "privagg/random.h"
#include "test_util.h"

namespace privagg {
namespace {

using ::privagg::testing::MeanAccumulator;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// 1. Exact EY against full enumeration of failure patterns.
Outcome NoiseCountOracle() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int64_t n : {8, 16, 32}) {
    for (int64_t kappa : {1, 2, 3}) {
      auto exact = ExpectedNoiseCountExact({n, kappa, 0.05});
      auto brute = NoiseCountBruteforce(n, kappa, 0.05);
      if (!exact.ok() || !brute.ok()) return {false, "computation failed"};
      worst = std::max(worst, std::abs(*exact - *brute) / *brute);
    }
  }
  const double elapsed = Seconds(start);
  return {worst <= 1e-12 && elapsed < 60,
          absl::StrFormat("max relative error %.3g over 9 cases (limit 1e-12), "
                          "%.2f s (limit 60 s)",
                          worst, elapsed)};
}

// 2. EY lower fractions at delta = 0.05.
Outcome NoiseCountCorollary() {
  auto small = ExpectedNoiseCountExact({1024, 10, 0.05});
  auto large = ExpectedNoiseCountExact({4096, 64, 0.05});
  if (!small.ok() || !large.ok()) return {false, "computation failed"};
  return {*small >= 0.1 * 1024 && *large >= 0.16 * 4096,
          absl::StrFormat("EY(1024,10)=%.4f >= %.1f; EY(4096,64)=%.4f >= %.2f",
                          *small, 0.1 * 1024, *large, 0.16 * 4096)};
}

// Monte Carlo E|sum of m Geom(alpha)| with `trials` draws on parallel
// streams, reduced in stream order.
MeanAccumulator MonteCarloAbsSum(double alpha, int64_t m, int64_t trials,
                                 uint64_t seed) {
  const GeomParams geom = *GeomParams::Create(alpha);
  const int64_t workers =
      std::max<int64_t>(1, std::min<int64_t>(8, std::thread::hardware_concurrency()));
  std::vector<double> draws(trials);
  std::vector<std::thread> threads;
  for (int64_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int64_t t = w; t < trials; t += workers) {
        Rng rng = DeriveStream(seed, static_cast<uint64_t>(t));
        int64_t sum = 0;
        for (int64_t j = 0; j < m; ++j) sum += SampleGeom(geom, rng);
        draws[t] = std::abs(static_cast<double>(sum));
      }
    });
  }
  for (std::thread& t : threads) t.join();
  MeanAccumulator mean;
  for (double d : draws) mean.Add(d);
  return mean;
}

// 3. E|Z| quadrature against Monte Carlo and the m = 1 closed form.
Outcome AbsErrorIntegral() {
  const auto start = std::chrono::steady_clock::now();
  struct Case {
    double alpha;
    int64_t m;
  };
  const std::vector<Case> cases = {
      {3.0, 1}, {1.5, 10}, {1.05, 100}, {std::exp(0.5 / 11), 500}};
  bool pass = true;
  std::string detail;
  uint64_t seed = 3000;
  for (const Case& c : cases) {
    AbsErrorQuery query;
    query.alpha = c.alpha;
    query.m = c.m;
    auto integral = ExpectedAbsErrorIntegral(query);
    if (!integral.ok()) return {false, std::string(integral.status().message())};
    const MeanAccumulator mc = MonteCarloAbsSum(c.alpha, c.m, 1000000, seed++);
    const double z = std::abs(integral->value - mc.mean()) / mc.stderr_of_mean();
    pass &= z <= 3.0;
    absl::StrAppendFormat(&detail, "(%.4g,%d): %.6f vs MC %.6f, %.2f SE; ",
                          c.alpha, c.m, integral->value, mc.mean(), z);
    if (c.m == 1) {
      const double closed = 2 * c.alpha / (c.alpha * c.alpha - 1);
      const double gap = std::abs(integral->value - closed);
      pass &= gap <= 1e-6;
      absl::StrAppendFormat(&detail, "closed-form gap %.2g; ", gap);
    }
  }
  const double elapsed = Seconds(start);
  pass &= elapsed < 300;
  absl::StrAppendFormat(&detail, "%.1f s (limit 300 s)", elapsed);
  return {pass, detail};
}

// 4. Composed EY -> E|Z| pipeline at epsilon = 0.5, delta = 0.05.
Outcome AbsErrorCorollary() {
  auto small = ComputeSweepPoint(1024, 10, 0.5, 0.05);
  auto large = ComputeSweepPoint(4096, 64, 0.5, 0.05);
  if (!small.ok() || !large.ok()) return {false, "computation failed"};
  return {small->abs_error >= 0.15 * 1024 && large->abs_error >= 0.12 * 4096,
          absl::StrFormat(
              "E|Z|(1024,10)=%.4f >= %.1f; E|Z|(4096,64)=%.4f >= %.2f",
              small->abs_error, 0.15 * 1024, large->abs_error, 0.12 * 4096)};
}

// 5. kappa = floor(n / 64) sweep keeps E|Z| / n above 0.2.
Outcome FigureTwoRegime() {
  SweepSpec spec;
  spec.rule = KappaRule::kNOver64;
  spec.n_min = 64;
  spec.n_max = 4096;
  auto points = FigureSweep(spec);
  if (!points.ok()) return {false, std::string(points.status().message())};
  double lowest = 1e300;
  for (const SweepPoint& p : *points) {
    lowest = std::min(lowest, p.abs_error_per_user());
  }
  return {points->size() == 7 && lowest > 0.2,
          absl::StrFormat("min E|Z|/n = %.4f over %d grid points (must be > 0.2)",
                          lowest, points->size())};
}

// 6. Geometric-mechanism likelihood ratios over the window where pmf > 1e-18.
Outcome DpRatio() {
  bool pass = true;
  double worst_gap = 0.0;
  double worst_excess = -1e300;
  for (double epsilon : {0.1, 0.5, 1.0}) {
    for (int64_t sensitivity : {1, 4}) {
      const GeomParams geom = *GeomParams::ForPrivacy(epsilon, sensitivity);
      const int64_t window = GeomPmfWindow(geom, 1e-18);
      double max_ratio = 0.0;
      for (int64_t shift = -sensitivity; shift <= sensitivity; ++shift) {
        auto ratio =
            DpRatioCheck(epsilon, sensitivity, 0, shift, -window, window);
        if (!ratio.ok()) return {false, std::string(ratio.status().message())};
        max_ratio = std::max(max_ratio, *ratio);
      }
      // Independent oracle: pmf(k - s) / pmf(k) = alpha^(|k| - |k - s|)
      // evaluated directly from the pmf in long double.
      long double oracle = 0.0L;
      const long double alpha = geom.alpha();
      for (int64_t k = -window; k <= window; ++k) {
        const long double denom = std::pow(alpha, -std::abs(k));
        const long double numer = std::pow(alpha, -std::abs(k - sensitivity));
        oracle = std::max(oracle, numer / denom);
      }
      const double bound = std::exp(epsilon);
      pass &= max_ratio <= bound;
      pass &= std::abs(static_cast<double>(oracle) - max_ratio) <= 1e-12;
      worst_excess = std::max(worst_excess, max_ratio - bound);
      worst_gap = std::max(worst_gap, std::abs(bound - max_ratio));
    }
  }
  pass &= worst_gap <= 1e-9;
  return {pass,
          absl::StrFormat("6 (epsilon, sensitivity) cases: max ratio - e^eps "
                          "= %.3g (must be <= 0), |gap| <= %.3g (limit 1e-9)",
                          worst_excess, worst_gap)};
}

const GroupParams& TestGroup64() {
  static const GroupParams* group = [] {
    Rng rng(64);
    return new GroupParams(*GroupSetup(64, rng));
  }();
  return *group;
}

struct InstanceSpec {
  int64_t n;
  int graph;  // 0 complete, 1 ER(0.3), 2 star
  int64_t k;
  int64_t value_bound;
};

std::vector<InstanceSpec> Grid() {
  std::vector<InstanceSpec> grid;
  for (int64_t n : {4, 16, 64, 256}) {
    for (int graph = 0; graph < 3; ++graph) {
      for (int64_t k : {1, 4}) {
        for (int64_t bound : {1, 16}) grid.push_back({n, graph, k, bound});
      }
    }
  }
  return grid;
}

// Runs one seeded PAALEC instance and compares the decoded sum with the
// plaintext shadow. `drop_half` removes a uniform half of users up front.
bool ExactInstance(const InstanceSpec& spec, uint64_t seed, bool drop_half,
                   std::string* why) {
  const GroupParams& group = TestGroup64();
  Rng rng = DeriveStream(seed, 0);
  auto config = PaalecConfig::Create(spec.n, spec.k, spec.value_bound);
  if (!config.ok()) {
    *why = std::string(config.status().message());
    return false;
  }
  const Graph graph = spec.graph == 0   ? CompleteGraph(spec.n)
                      : spec.graph == 1 ? *ErGenerate(spec.n, 0.3, rng)
                                        : StarGraph(spec.n);
  auto keys = GenerateAggregatorKeys(group, spec.k, rng);
  if (!keys.ok()) {
    *why = std::string(keys.status().message());
    return false;
  }
  const std::vector<Ciphertext> published = Setup(group, *keys, rng);
  std::vector<int64_t> values(spec.n);
  for (int64_t& v : values) {
    v = static_cast<int64_t>(
        UniformBelow(rng, static_cast<uint64_t>(spec.value_bound + 1)));
  }
  RoundOptions options;
  if (drop_half) options.failed_before_round = SampleSubset(spec.n, spec.n / 2, rng);
  auto round = RunRound(group, *config, graph, *keys, published, values, seed,
                        options);
  if (!round.ok()) {
    *why = std::string(round.status().message());
    return false;
  }
  // Shadow recomputed here from the inputs and the recorded noise.
  int64_t expected = 0;
  for (const NodeState& node : round->nodes) {
    expected += values[node.id] + node.noise;
  }
  const size_t participants =
      drop_half ? static_cast<size_t>(spec.n - spec.n / 2)
                : static_cast<size_t>(spec.n);
  if (round->participants.size() != participants) {
    *why = "wrong participant count";
    return false;
  }
  if (!round->decoded.ok()) {
    *why = std::string(round->decoded.status().message());
    return false;
  }
  if (*round->decoded != expected) {
    *why = absl::StrFormat("decoded %d, expected %d", *round->decoded, expected);
    return false;
  }
  return true;
}

// 7. Exact recovery over the configuration grid plus crypto round trips.
Outcome PaalecExactness() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<InstanceSpec> grid = Grid();
  int exact = 0;
  std::string why;
  for (int i = 0; i < 200; ++i) {
    std::string reason;
    if (ExactInstance(grid[i % grid.size()], 7000 + i, false, &reason)) {
      ++exact;
    } else if (why.empty()) {
      why = absl::StrFormat(" first failure (instance %d): %s", i, reason);
    }
  }
  const GroupParams& group = TestGroup64();
  Rng rng(7777);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const KeyPair outer = GenerateKeyPair(group, rng);
    const KeyPair inner = GenerateKeyPair(group, rng);
    const BigInt message = group.GPow(RandomExponent(group, rng));
    // Layered encryption of one, re-randomized, filled, then peeled.
    Ciphertext ct =
        AddLayer(group, EncOne(group, outer.sk, rng), inner.sk, rng);
    ct = Fill(group, Reencrypt(group, ct, rng), message);
    const BigInt plain =
        DecryptElement(group, PartialDecrypt(group, ct, inner.sk), outer.sk);
    if (plain == message) ++round_trips;
  }
  const double elapsed = Seconds(start);
  return {exact == 200 && round_trips == 1000 && elapsed < 300,
          absl::StrFormat("%d/200 instances exact over %d grid cells; %d/1000 "
                          "crypto round trips; %.1f s (limit 300 s)%s",
                          exact, grid.size(), round_trips, elapsed, why)};
}

// 8. Half of the users absent before the round.
Outcome FailureRobustness() {
  const std::vector<InstanceSpec> grid = Grid();
  int exact = 0;
  std::string why;
  for (int i = 0; i < 100; ++i) {
    std::string reason;
    if (ExactInstance(grid[(i * 7) % grid.size()], 8000 + i, true, &reason)) {
      ++exact;
    } else if (why.empty()) {
      why = absl::StrFormat(" first failure (instance %d): %s", i, reason);
    }
  }
  return {exact == 100,
          absl::StrFormat("%d/100 instances exact with 50%% dropped%s", exact,
                          why)};
}

// 9. Induced subgraph on half the vertices at p = 8 ln(n) / n.
Outcome GraphConnectivity() {
  bool pass = true;
  std::string detail;
  constexpr int64_t kTrials = 10000;
  for (int64_t n : {64, 128, 256}) {
    const double p = 8 * std::log(static_cast<double>(n)) / n;
    auto result = ConnectivityExperiment(n, p, n / 2, kTrials, 9000 + n);
    if (!result.ok()) return {false, std::string(result.status().message())};
    const double q = 1.0 / n;
    const double bound = q + 3 * std::sqrt(q * (1 - q) / kTrials);
    pass &= result->frequency() <= bound;
    absl::StrAppendFormat(&detail, "n=%d: %d/%d disconnected (bound %.5f); ",
                          n, result->disconnected, kTrials, bound);
  }
  return {pass, detail};
}

// 10. (1 - beta)^(n/2) <= delta at beta = 2 ln(1/delta) / n.
Outcome PrivacyBudget() {
  bool pass = true;
  double worst = 0.0;
  for (double delta : {0.05, 1e-3, 1e-6}) {
    for (int64_t n : {int64_t{1} << 8, int64_t{1} << 10, int64_t{1} << 14}) {
      const double beta = 2 * std::log(1 / delta) / n;
      const PrivacyBudgetReport report = PrivacyBudgetCheck(n, beta, delta);
      const double achieved = std::pow(1 - beta, n / 2.0);
      pass &= report.passes && achieved <= delta;
      worst = std::max(worst, achieved / delta);
    }
  }
  return {pass, absl::StrFormat("9 (n, delta) cases: max (1-beta)^(n/2)/delta "
                                "= %.4f (must be <= 1)",
                                worst)};
}

}  // namespace
}  // namespace privagg

int main() {
  using privagg::Outcome;
  const std::vector<std::function<Outcome()>> criteria = {
      privagg::NoiseCountOracle,  privagg::NoiseCountCorollary,
      privagg::AbsErrorIntegral,  privagg::AbsErrorCorollary,
      privagg::FigureTwoRegime,   privagg::DpRatio,
      privagg::PaalecExactness,   privagg::FailureRobustness,
      privagg::GraphConnectivity, privagg::PrivacyBudget};
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const Outcome outcome = criteria[i]();
    if (!outcome.pass) ++failures;
    std::printf("criterion %zu: %s - %s\n", i + 1,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
