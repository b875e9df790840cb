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

#include "privagg/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <thread>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "privagg/binary_protocol.h"
#include "privagg/error_analytics.h"
#include "privagg/graph.h"
#include "privagg/group.h"
#include "privagg/noise.h"
#include "privagg/paalec.h"
#include "privagg/random.h"

namespace privagg {
namespace {

// Stream reserved for per-run setup (groups, keys, graphs); trials use
// streams 0, 1, ...
constexpr uint64_t kSetupStream = std::numeric_limits<uint64_t>::max();

std::string Num(double x) { return absl::StrFormat("%.15g", x); }
std::string Bool(bool b) { return b ? "true" : "false"; }

absl::string_view AsAbsl(std::string_view s) {
  return absl::string_view(s.data(), s.size());
}

// Welford mean and standard error, fed in trial order.
class Mean {
 public:
  void Add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double stderr_of_mean() const {
    if (count_ < 2) return 0.0;
    return std::sqrt(m2_ / static_cast<double>(count_ - 1) /
                     static_cast<double>(count_));
  }

 private:
  int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Runs f(0) .. f(count - 1) on up to `threads` threads. Each call writes only
// its own result slot, so callers reduce afterwards in index order.
void ParallelFor(int64_t count, int64_t threads,
                 const std::function<void(int64_t)>& f) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int64_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int64_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (int64_t i = next++; i < count; i = next++) f(i);
    });
  }
  for (std::thread& t : workers) t.join();
}

absl::Status FirstError(const std::vector<absl::Status>& statuses) {
  for (const absl::Status& s : statuses) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

// Resolved configuration of one experiment with typed accessors.
class Options {
 public:
  static absl::StatusOr<Options> Resolve(std::string_view experiment,
                                         const std::vector<OptionSpec>& specs,
                                         const ConfigMap& config) {
    Options options;
    for (const OptionSpec& spec : specs) {
      options.values_[spec.name] = spec.default_value;
    }
    for (const auto& [key, value] : config) {
      auto it = options.values_.find(key);
      if (it == options.values_.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown option '", key, "' for ", std::string(experiment)));
      }
      it->second = value;
    }
    return options;
  }

  std::string String(const std::string& key) const { return values_.at(key); }

  absl::StatusOr<int64_t> Int(const std::string& key) const {
    int64_t v;
    if (!absl::SimpleAtoi(values_.at(key), &v)) return Malformed(key);
    return v;
  }
  absl::StatusOr<uint64_t> Uint(const std::string& key) const {
    uint64_t v;
    if (!absl::SimpleAtoi(values_.at(key), &v)) return Malformed(key);
    return v;
  }
  absl::StatusOr<double> Double(const std::string& key) const {
    double v;
    if (!absl::SimpleAtod(values_.at(key), &v) || !std::isfinite(v)) {
      return Malformed(key);
    }
    return v;
  }
  absl::StatusOr<bool> Flag(const std::string& key) const {
    bool v;
    if (!absl::SimpleAtob(values_.at(key), &v)) return Malformed(key);
    return v;
  }
  absl::StatusOr<std::vector<int64_t>> IntList(const std::string& key) const {
    std::vector<int64_t> out;
    for (absl::string_view part : Parts(key)) {
      int64_t v;
      if (!absl::SimpleAtoi(part, &v)) return Malformed(key);
      out.push_back(v);
    }
    return out;
  }
  absl::StatusOr<std::vector<double>> DoubleList(const std::string& key) const {
    std::vector<double> out;
    for (absl::string_view part : Parts(key)) {
      double v;
      if (!absl::SimpleAtod(part, &v) || !std::isfinite(v)) {
        return Malformed(key);
      }
      out.push_back(v);
    }
    return out;
  }
  bool Empty(const std::string& key) const { return values_.at(key).empty(); }

 private:
  std::vector<absl::string_view> Parts(const std::string& key) const {
    return absl::StrSplit(values_.at(key), ',', absl::SkipWhitespace());
  }
  absl::Status Malformed(const std::string& key) const {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed value '", values_.at(key), "' for ", key));
  }

  std::map<std::string, std::string> values_;
};

#define PRIVAGG_ASSIGN(lhs, expr)               \
  auto lhs##_or = (expr);                       \
  if (!lhs##_or.ok()) return lhs##_or.status(); \
  auto lhs = *std::move(lhs##_or)

OptionSpec Opt(std::string name, std::string default_value, std::string help) {
  return {std::move(name), std::move(default_value), std::move(help), false};
}
OptionSpec FlagOpt(std::string name, std::string help) {
  return {std::move(name), "false", std::move(help), true};
}

const OptionSpec kSeed = Opt("seed", "1", "master seed; trial t uses stream t");
const OptionSpec kThreads =
    Opt("threads", "1", "worker threads (output does not depend on it)");
const OptionSpec kEpsilon = Opt("epsilon", "0.5", "privacy parameter");
const OptionSpec kDelta = Opt("delta", "0.05", "privacy failure probability");
const OptionSpec kQuadTol =
    Opt("quad-tol", "1e-10", "E|Z| quadrature tolerance, relative to max(1, E|Z|)");

const std::map<std::string, std::vector<OptionSpec>>& Registry() {
  static const auto* registry = new std::map<std::string,
                                             std::vector<OptionSpec>>{
      {"bp-exact",
       {Opt("n", "1024", "users (powers of two, comma separated)"),
        Opt("kappa", "10", "failed users (comma separated)"), kDelta,
        Opt("bruteforce-limit", "1000000",
            "enumerate failure patterns when there are at most this many"),
        kSeed}},
      {"bp-sim",
       {Opt("n", "1024", "users (power of two)"),
        Opt("kappa", "10", "failed users"), kEpsilon, kDelta,
        Opt("value-bound", "1", "user values are uniform in [0, value-bound]"),
        Opt("trials", "1000", "Monte Carlo rounds"), kQuadTol, kSeed, kThreads}},
      {"abs-error",
       {Opt("alpha", "3", "geometric parameters (comma separated)"),
        Opt("m", "1", "noise counts (comma separated; paired with alpha)"),
        Opt("trials", "100000", "Monte Carlo draws of the sum (0 disables)"),
        kQuadTol, kSeed, kThreads}},
      {"fig1",
       {Opt("n-min", "16", "smallest n (power of two)"),
        Opt("n-max", "1024", "largest n"), kEpsilon, kDelta, kQuadTol,
        Opt("trials", "200", "simulated rounds per n (0 disables)"), kSeed,
        kThreads}},
      {"fig2",
       {Opt("n-min", "64", "smallest n (power of two)"),
        Opt("n-max", "4096", "largest n"), kEpsilon, kDelta, kQuadTol,
        Opt("trials", "200", "simulated rounds per n (0 disables)"), kSeed,
        kThreads}},
      {"fig3",
       {Opt("n-min", "16", "smallest n (power of two)"),
        Opt("n-max", "1024", "largest n"), Opt("kappa", "5", "failed users"),
        kEpsilon, kDelta, kQuadTol,
        Opt("trials", "200", "simulated rounds per n (0 disables)"), kSeed,
        kThreads}},
      {"paalec-run",
       {Opt("n", "16", "users"), Opt("k", "1", "local aggregators"),
        Opt("graph", "complete", "complete, star, path or er"),
        Opt("p", "0.3", "edge probability for er"),
        Opt("value-bound", "",
            "largest user value (default: largest given value, else 1)"),
        Opt("values", "", "comma separated values (default: uniform random)"),
        FlagOpt("no-noise", "disable the noise (exact sum)"), kEpsilon, kDelta,
        Opt("beta", "", "noise probability (default 2 ln(1/delta) / n)"),
        Opt("fail-before", "", "users absent for the round (comma separated)"),
        Opt("fail-after-masks", "",
            "users that go silent after exchanging masks"),
        Opt("group-bits", "64", "group size: 32, 64, 256 or 2048"),
        FlagOpt("trace", "keep the round transcript"), kSeed}},
      {"paalec-mc",
       {Opt("n", "64", "users"), Opt("k", "4", "local aggregators"),
        Opt("graph", "er", "complete, star, path or er"),
        Opt("p", "0.3", "edge probability for er"),
        Opt("value-bound", "16", "largest user value"), kEpsilon, kDelta,
        Opt("fail-fraction", "0", "fraction of users absent per round"),
        Opt("group-bits", "64", "group size: 32, 64, 256 or 2048"),
        Opt("trials", "200", "rounds"), kSeed, kThreads}},
      {"graph-conn",
       {Opt("n", "128", "users (comma separated)"),
        Opt("p", "", "edge probability (default 8 ln(n) / n)"),
        Opt("m", "", "surviving users (default n / 2)"),
        Opt("trials", "10000", "random graphs per n"), kSeed}},
      {"noise-check",
       {Opt("epsilon", "0.1,0.5,1", "privacy parameters (comma separated)"),
        Opt("sensitivity", "1,4", "sensitivities (comma separated)"),
        Opt("pmf-threshold", "1e-18", "ratio window: pmf above this"),
        Opt("trials", "100000", "Monte Carlo draws per row"), kSeed,
        kThreads}},
  };
  return *registry;
}

absl::StatusOr<Graph> MakeGraph(const std::string& kind, int64_t n, double p,
                                Rng& rng) {
  if (kind == "complete") return CompleteGraph(n);
  if (kind == "star") return StarGraph(n);
  if (kind == "path") return PathGraph(n);
  if (kind == "er") return ErGenerate(n, p, rng);
  return absl::InvalidArgumentError(absl::StrCat("unknown graph '", kind, "'"));
}

ExperimentRow BaseRow(const std::string& id, uint64_t seed) {
  ExperimentRow row;
  row.experiment_id = id;
  row.seed = seed;
  return row;
}

absl::StatusOr<ExperimentTable> BpExact(const Options& o) {
  PRIVAGG_ASSIGN(ns, o.IntList("n"));
  PRIVAGG_ASSIGN(kappas, o.IntList("kappa"));
  PRIVAGG_ASSIGN(delta, o.Double("delta"));
  PRIVAGG_ASSIGN(limit, o.Int("bruteforce-limit"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  ExperimentTable table{"bp-exact",
                        {"ey_over_n", "bruteforce_rel_error", "lower_bound",
                         "lower_bound_validated"},
                        {},
                        ""};
  for (int64_t n : ns) {
    for (int64_t kappa : kappas) {
      PRIVAGG_ASSIGN(ey, ExpectedNoiseCountExact({n, kappa, delta}));
      ExperimentRow row = BaseRow(table.experiment_id, seed);
      row.n = n;
      row.kappa = kappa;
      row.delta = delta;
      row.analytic_value = ey;
      std::string rel_error;
      auto brute = NoiseCountBruteforce(n, kappa, delta, limit);
      if (brute.ok()) {
        row.simulated_mean = *brute;
        row.simulated_stderr = 0.0;
        rel_error = Num(std::abs(ey - *brute) / std::max(*brute, 1e-300));
      } else if (brute.status().code() != absl::StatusCode::kResourceExhausted) {
        return brute.status();
      }
      std::string bound, validated;
      auto lower = ExpectedNoiseCountLowerBound({n, kappa, delta});
      if (lower.ok()) {
        bound = Num(lower->value);
        validated = Bool(lower->validated);
      }
      row.extras = {Num(ey / static_cast<double>(n)), rel_error, bound,
                    validated};
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

struct BpTrial {
  double noise_count = 0.0;
  double abs_noise = 0.0;
  absl::Status status;
};

// Simulated Binary Protocol rounds with kappa uniformly random failures;
// trial t of sweep point `point` uses stream (point << 32) + t.
absl::StatusOr<std::vector<BpTrial>> SimulateBp(const TreeConfig& config,
                                                int64_t kappa,
                                                int64_t value_bound,
                                                int64_t trials, uint64_t seed,
                                                uint64_t point,
                                                int64_t threads) {
  std::vector<BpTrial> results(trials);
  ParallelFor(trials, threads, [&](int64_t t) {
    Rng rng = DeriveStream(seed, (point << 32) + static_cast<uint64_t>(t));
    BpTrial& out = results[t];
    auto failures = SampleFailures(config.n(), kappa, rng);
    if (!failures.ok()) {
      out.status = failures.status();
      return;
    }
    std::vector<int64_t> values(config.n());
    for (int64_t& v : values) {
      v = static_cast<int64_t>(
          UniformBelow(rng, static_cast<uint64_t>(value_bound + 1)));
    }
    auto round = SimulateRound(config, values, *failures, rng, value_bound);
    if (!round.ok()) {
      out.status = round.status();
      return;
    }
    if (round->noisy_sum - round->true_sum != round->noise_sum) {
      out.status = absl::InternalError("noisy sum does not decompose");
      return;
    }
    out.noise_count = static_cast<double>(round->noise_count);
    out.abs_noise = std::abs(static_cast<double>(round->noise_sum));
  });
  std::vector<absl::Status> statuses;
  for (const BpTrial& r : results) statuses.push_back(r.status);
  if (absl::Status s = FirstError(statuses); !s.ok()) return s;
  return results;
}

absl::StatusOr<ExperimentTable> BpSim(const Options& o) {
  PRIVAGG_ASSIGN(n, o.Int("n"));
  PRIVAGG_ASSIGN(kappa, o.Int("kappa"));
  PRIVAGG_ASSIGN(epsilon, o.Double("epsilon"));
  PRIVAGG_ASSIGN(delta, o.Double("delta"));
  PRIVAGG_ASSIGN(value_bound, o.Int("value-bound"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(quad_tol, o.Double("quad-tol"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  PRIVAGG_ASSIGN(threads, o.Int("threads"));
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (value_bound < 1) {
    return absl::InvalidArgumentError("value-bound must be >= 1");
  }
  PRIVAGG_ASSIGN(config, TreeConfig::Create(n, epsilon, delta));
  PRIVAGG_ASSIGN(point, ComputeSweepPoint(n, kappa, epsilon, delta, quad_tol));
  PRIVAGG_ASSIGN(results,
                 SimulateBp(config, kappa, value_bound, trials, seed, 0,
                            threads));
  Mean count, abs_noise;
  for (const BpTrial& r : results) {
    count.Add(r.noise_count);
    abs_noise.Add(r.abs_noise);
  }
  ExperimentTable table{"bp-sim",
                        {"value_bound", "abs_error_analytic", "abs_error_mc",
                         "abs_error_mc_stderr"},
                        {},
                        ""};
  ExperimentRow row = BaseRow(table.experiment_id, seed);
  row.n = n;
  row.kappa = kappa;
  row.epsilon = epsilon;
  row.delta = delta;
  row.analytic_value = point.expected_noise_count;
  row.simulated_mean = count.mean();
  row.simulated_stderr = count.stderr_of_mean();
  row.trials = trials;
  row.extras = {absl::StrCat(value_bound), Num(point.abs_error),
                Num(abs_noise.mean()), Num(abs_noise.stderr_of_mean())};
  table.rows.push_back(std::move(row));
  return table;
}

absl::StatusOr<ExperimentTable> AbsError(const Options& o) {
  PRIVAGG_ASSIGN(alphas, o.DoubleList("alpha"));
  PRIVAGG_ASSIGN(ms, o.IntList("m"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(quad_tol, o.Double("quad-tol"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  PRIVAGG_ASSIGN(threads, o.Int("threads"));
  if (alphas.empty() || ms.empty() ||
      (alphas.size() != ms.size() && alphas.size() != 1 && ms.size() != 1)) {
    return absl::InvalidArgumentError(
        "alpha and m need equal lengths, or one of them a single value");
  }
  if (trials < 0) return absl::InvalidArgumentError("trials must be >= 0");
  const size_t rows = std::max(alphas.size(), ms.size());
  ExperimentTable table{
      "abs-error",
      {"alpha", "m", "closed_form", "error_estimate", "periods"},
      {},
      ""};
  for (size_t i = 0; i < rows; ++i) {
    const double alpha = alphas[alphas.size() == 1 ? 0 : i];
    const int64_t m = ms[ms.size() == 1 ? 0 : i];
    AbsErrorQuery query;
    query.alpha = alpha;
    query.m = m;
    query.quad_tol = quad_tol;
    PRIVAGG_ASSIGN(integral, ExpectedAbsErrorIntegral(query));
    ExperimentRow row = BaseRow(table.experiment_id, seed);
    row.n = m;
    row.analytic_value = integral.value;
    row.trials = std::max<int64_t>(trials, 1);
    if (trials > 0) {
      PRIVAGG_ASSIGN(geom, GeomParams::Create(alpha));
      std::vector<double> draws(trials);
      ParallelFor(trials, threads, [&](int64_t t) {
        Rng rng = DeriveStream(seed, (uint64_t{i} << 32) + t);
        int64_t sum = 0;
        for (int64_t j = 0; j < m; ++j) sum += SampleGeom(geom, rng);
        draws[t] = std::abs(static_cast<double>(sum));
      });
      Mean mean;
      for (double d : draws) mean.Add(d);
      row.simulated_mean = mean.mean();
      row.simulated_stderr = mean.stderr_of_mean();
    }
    row.extras = {Num(alpha), absl::StrCat(m),
                  m == 1 ? Num(2 * alpha / (alpha * alpha - 1)) : "",
                  Num(integral.error_estimate),
                  absl::StrCat(integral.periods)};
    table.rows.push_back(std::move(row));
  }
  return table;
}

absl::StatusOr<ExperimentTable> Figure(const std::string& id, KappaRule rule,
                                       const Options& o) {
  SweepSpec spec;
  spec.rule = rule;
  PRIVAGG_ASSIGN(n_min, o.Int("n-min"));
  PRIVAGG_ASSIGN(n_max, o.Int("n-max"));
  PRIVAGG_ASSIGN(epsilon, o.Double("epsilon"));
  PRIVAGG_ASSIGN(delta, o.Double("delta"));
  PRIVAGG_ASSIGN(quad_tol, o.Double("quad-tol"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  PRIVAGG_ASSIGN(threads, o.Int("threads"));
  if (trials < 0) return absl::InvalidArgumentError("trials must be >= 0");
  spec.n_min = n_min;
  spec.n_max = n_max;
  spec.epsilon = epsilon;
  spec.delta = delta;
  spec.quad_tol = quad_tol;
  if (rule == KappaRule::kConstant) {
    PRIVAGG_ASSIGN(kappa, o.Int("kappa"));
    spec.constant_kappa = kappa;
  }
  PRIVAGG_ASSIGN(points, FigureSweep(spec));

  ExperimentTable table{id,
                        {"expected_noise_count", "noise_count_rounded",
                         "abs_error", "abs_error_rounding_spread",
                         "abs_error_lower_bound", "abs_error_bound_validated",
                         "noise_count_lower_bound",
                         "noise_count_bound_validated"},
                        {},
                        ""};
  for (size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    ExperimentRow row = BaseRow(id, seed);
    row.n = p.n;
    row.kappa = p.kappa;
    row.epsilon = epsilon;
    row.delta = delta;
    row.analytic_value = p.abs_error_per_user();
    row.trials = std::max<int64_t>(trials, 1);
    if (trials > 0) {
      PRIVAGG_ASSIGN(config, TreeConfig::Create(p.n, epsilon, delta));
      PRIVAGG_ASSIGN(results,
                     SimulateBp(config, p.kappa, 1, trials, seed, i, threads));
      Mean per_user;
      for (const BpTrial& r : results) {
        per_user.Add(r.abs_noise / static_cast<double>(p.n));
      }
      row.simulated_mean = per_user.mean();
      row.simulated_stderr = per_user.stderr_of_mean();
    }
    auto bound_cells = [](const std::optional<BoundResult>& b) {
      return b ? std::pair{Num(b->value), Bool(b->validated)}
               : std::pair{std::string(), std::string()};
    };
    const auto [abs_bound, abs_validated] = bound_cells(p.abs_error_lower_bound);
    const auto [count_bound, count_validated] =
        bound_cells(p.noise_count_lower_bound);
    row.extras = {Num(p.expected_noise_count),
                  absl::StrCat(p.noise_count_rounded),
                  Num(p.abs_error),
                  Num(p.abs_error_rounding_spread),
                  abs_bound,
                  abs_validated,
                  count_bound,
                  count_validated};
    table.rows.push_back(std::move(row));
  }
  return table;
}

absl::StatusOr<ExperimentTable> PaalecRun(const Options& o) {
  PRIVAGG_ASSIGN(n, o.Int("n"));
  PRIVAGG_ASSIGN(k, o.Int("k"));
  PRIVAGG_ASSIGN(p, o.Double("p"));
  PRIVAGG_ASSIGN(no_noise, o.Flag("no-noise"));
  PRIVAGG_ASSIGN(epsilon, o.Double("epsilon"));
  PRIVAGG_ASSIGN(delta, o.Double("delta"));
  PRIVAGG_ASSIGN(fail_before, o.IntList("fail-before"));
  PRIVAGG_ASSIGN(fail_after, o.IntList("fail-after-masks"));
  PRIVAGG_ASSIGN(bits, o.Int("group-bits"));
  PRIVAGG_ASSIGN(trace, o.Flag("trace"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  std::optional<double> beta;
  if (!o.Empty("beta")) {
    PRIVAGG_ASSIGN(b, o.Double("beta"));
    beta = b;
  }
  std::vector<int64_t> values;
  if (!o.Empty("values")) {
    PRIVAGG_ASSIGN(given, o.IntList("values"));
    values = std::move(given);
  }
  int64_t value_bound = 1;
  if (!o.Empty("value-bound")) {
    PRIVAGG_ASSIGN(bound, o.Int("value-bound"));
    value_bound = bound;
  } else if (!values.empty()) {
    value_bound = std::max<int64_t>(
        1, *std::max_element(values.begin(), values.end()));
  }
  PRIVAGG_ASSIGN(config, PaalecConfig::Create(n, k, value_bound, epsilon,
                                              delta, beta));

  Rng setup = DeriveStream(seed, kSetupStream);
  PRIVAGG_ASSIGN(group, GroupSetup(static_cast<int>(bits), setup));
  PRIVAGG_ASSIGN(keys, GenerateAggregatorKeys(group, k, setup));
  const std::vector<Ciphertext> published = Setup(group, keys, setup);
  PRIVAGG_ASSIGN(graph, MakeGraph(o.String("graph"), n, p, setup));
  if (values.empty()) {
    values.resize(n);
    for (int64_t& v : values) {
      v = static_cast<int64_t>(
          UniformBelow(setup, static_cast<uint64_t>(value_bound + 1)));
    }
  }

  RoundOptions options;
  options.failed_before_round = fail_before;
  options.failed_after_masks = fail_after;
  options.record_trace = trace;
  if (no_noise) options.forced_noise = std::vector<int64_t>(n, 0);
  PRIVAGG_ASSIGN(round, RunRound(group, config, graph, keys, published, values,
                                 seed, options));

  ExperimentTable table{"paalec-run",
                        {"k", "graph", "decoded_ok", "participants",
                         "value_sum", "noise_sum", "noise_count", "window_lo",
                         "window_hi", "beta"},
                        {},
                        ""};
  ExperimentRow row = BaseRow(table.experiment_id, seed);
  row.n = n;
  row.kappa = n - static_cast<int64_t>(round.participants.size());
  row.epsilon = epsilon;
  row.delta = delta;
  row.analytic_value = static_cast<double>(round.shadow_sum());
  if (round.decoded.ok()) {
    row.simulated_mean = static_cast<double>(*round.decoded);
    row.simulated_stderr = 0.0;
  }
  row.extras = {absl::StrCat(k),
                o.String("graph"),
                Bool(round.decoded.ok() &&
                     *round.decoded == round.shadow_sum()),
                absl::StrCat(round.participants.size()),
                absl::StrCat(round.value_sum),
                absl::StrCat(round.noise_sum),
                absl::StrCat(round.noise_count),
                absl::StrCat(round.window_lo),
                absl::StrCat(round.window_hi),
                Num(config.beta())};
  table.rows.push_back(std::move(row));
  if (trace) table.trace = FormatTrace(round.trace);
  return table;
}

absl::StatusOr<ExperimentTable> PaalecMc(const Options& o) {
  PRIVAGG_ASSIGN(n, o.Int("n"));
  PRIVAGG_ASSIGN(k, o.Int("k"));
  PRIVAGG_ASSIGN(p, o.Double("p"));
  PRIVAGG_ASSIGN(value_bound, o.Int("value-bound"));
  PRIVAGG_ASSIGN(epsilon, o.Double("epsilon"));
  PRIVAGG_ASSIGN(delta, o.Double("delta"));
  PRIVAGG_ASSIGN(fail_fraction, o.Double("fail-fraction"));
  PRIVAGG_ASSIGN(bits, o.Int("group-bits"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  PRIVAGG_ASSIGN(threads, o.Int("threads"));
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (!(fail_fraction >= 0.0 && fail_fraction < 1.0)) {
    return absl::InvalidArgumentError("fail-fraction must lie in [0, 1)");
  }
  PRIVAGG_ASSIGN(config,
                 PaalecConfig::Create(n, k, value_bound, epsilon, delta));
  const std::string graph_kind = o.String("graph");
  Rng setup = DeriveStream(seed, kSetupStream);
  PRIVAGG_ASSIGN(group, GroupSetup(static_cast<int>(bits), setup));
  {
    Rng probe(0);
    if (absl::Status s = MakeGraph(graph_kind, 1, p, probe).status(); !s.ok()) {
      return s;
    }
  }
  const int64_t failed = static_cast<int64_t>(std::llround(fail_fraction * n));

  struct Trial {
    bool exact = false;
    bool decoded = false;
    double abs_noise = 0.0;
    double noise_count = 0.0;
    absl::Status status;
  };
  std::vector<Trial> results(trials);
  ParallelFor(trials, threads, [&](int64_t t) {
    Trial& out = results[t];
    Rng rng = DeriveStream(seed, static_cast<uint64_t>(t));
    auto graph = MakeGraph(graph_kind, n, p, rng);
    auto keys = GenerateAggregatorKeys(group, k, rng);
    if (!graph.ok() || !keys.ok()) {
      out.status = graph.ok() ? keys.status() : graph.status();
      return;
    }
    const std::vector<Ciphertext> published = Setup(group, *keys, rng);
    std::vector<int64_t> values(n);
    for (int64_t& v : values) {
      v = static_cast<int64_t>(
          UniformBelow(rng, static_cast<uint64_t>(value_bound + 1)));
    }
    RoundOptions options;
    options.failed_before_round = SampleSubset(n, failed, rng);
    auto round = RunRound(group, config, *graph, *keys, published, values,
                          rng(), options);
    if (!round.ok()) {
      out.status = round.status();
      return;
    }
    out.decoded = round->decoded.ok();
    out.exact = out.decoded && *round->decoded == round->shadow_sum();
    out.abs_noise = std::abs(static_cast<double>(round->noise_sum));
    out.noise_count = static_cast<double>(round->noise_count);
  });
  std::vector<absl::Status> statuses;
  for (const Trial& r : results) statuses.push_back(r.status);
  if (absl::Status s = FirstError(statuses); !s.ok()) return s;

  Mean exact, abs_noise, noise_count;
  int64_t decode_failures = 0;
  for (const Trial& r : results) {
    exact.Add(r.exact ? 1.0 : 0.0);
    abs_noise.Add(r.abs_noise);
    noise_count.Add(r.noise_count);
    if (!r.decoded) ++decode_failures;
  }
  ExperimentTable table{"paalec-mc",
                        {"k", "graph", "value_bound", "beta", "failed_users",
                         "decode_failures", "mean_abs_noise",
                         "mean_abs_noise_stderr", "mean_noise_count"},
                        {},
                        ""};
  ExperimentRow row = BaseRow(table.experiment_id, seed);
  row.n = n;
  row.kappa = failed;
  row.epsilon = epsilon;
  row.delta = delta;
  // Fraction of rounds decoded to exactly the plaintext shadow sum.
  row.analytic_value = 1.0;
  row.simulated_mean = exact.mean();
  row.simulated_stderr = exact.stderr_of_mean();
  row.trials = trials;
  row.extras = {absl::StrCat(k),
                graph_kind,
                absl::StrCat(value_bound),
                Num(config.beta()),
                absl::StrCat(failed),
                absl::StrCat(decode_failures),
                Num(abs_noise.mean()),
                Num(abs_noise.stderr_of_mean()),
                Num(noise_count.mean())};
  table.rows.push_back(std::move(row));
  return table;
}

absl::StatusOr<ExperimentTable> GraphConn(const Options& o) {
  PRIVAGG_ASSIGN(ns, o.IntList("n"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  ExperimentTable table{"graph-conn",
                        {"p", "m", "disconnected", "bound_3sigma",
                         "within_bound"},
                        {},
                        ""};
  for (int64_t n : ns) {
    if (n < 2) return absl::InvalidArgumentError("n must be >= 2");
    double p = ConnectivityThreshold(n);
    if (!o.Empty("p")) {
      PRIVAGG_ASSIGN(given, o.Double("p"));
      p = given;
    }
    int64_t m = n / 2;
    if (!o.Empty("m")) {
      PRIVAGG_ASSIGN(given, o.Int("m"));
      m = given;
    }
    PRIVAGG_ASSIGN(result, ConnectivityExperiment(n, p, m, trials, seed));
    const double bound = 1.0 / static_cast<double>(n);
    const double frequency = result.frequency();
    const double bound_3sigma =
        bound + 3 * std::sqrt(bound * (1 - bound) / static_cast<double>(trials));
    ExperimentRow row = BaseRow(table.experiment_id, seed);
    row.n = n;
    row.kappa = n - m;
    row.analytic_value = bound;
    row.simulated_mean = frequency;
    row.simulated_stderr =
        std::sqrt(frequency * (1 - frequency) / static_cast<double>(trials));
    row.trials = trials;
    row.extras = {Num(p), absl::StrCat(m), absl::StrCat(result.disconnected),
                  Num(bound_3sigma), Bool(frequency <= bound_3sigma)};
    table.rows.push_back(std::move(row));
  }
  return table;
}

absl::StatusOr<ExperimentTable> NoiseCheck(const Options& o) {
  PRIVAGG_ASSIGN(epsilons, o.DoubleList("epsilon"));
  PRIVAGG_ASSIGN(sensitivities, o.IntList("sensitivity"));
  PRIVAGG_ASSIGN(threshold, o.Double("pmf-threshold"));
  PRIVAGG_ASSIGN(trials, o.Int("trials"));
  PRIVAGG_ASSIGN(seed, o.Uint("seed"));
  PRIVAGG_ASSIGN(threads, o.Int("threads"));
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    return absl::InvalidArgumentError("pmf-threshold must lie in (0, 1)");
  }
  ExperimentTable table{"noise-check",
                        {"sensitivity", "alpha", "window", "dp_ratio_max",
                         "dp_ratio_bound", "dp_ratio_ok"},
                        {},
                        ""};
  uint64_t point = 0;
  for (double epsilon : epsilons) {
    for (int64_t sensitivity : sensitivities) {
      PRIVAGG_ASSIGN(geom, GeomParams::ForPrivacy(epsilon, sensitivity));
      const int64_t window = GeomPmfWindow(geom, threshold);
      PRIVAGG_ASSIGN(ratio, DpRatioCheck(epsilon, sensitivity, 0, sensitivity,
                                         -window, window));
      std::vector<double> draws(trials);
      ParallelFor(trials, threads, [&](int64_t t) {
        Rng rng = DeriveStream(seed, (point << 32) + t);
        draws[t] = std::abs(static_cast<double>(SampleGeom(geom, rng)));
      });
      Mean mean;
      for (double d : draws) mean.Add(d);
      const double alpha = geom.alpha();
      ExperimentRow row = BaseRow(table.experiment_id, seed);
      row.epsilon = epsilon;
      row.analytic_value = 2 * alpha / (alpha * alpha - 1);
      row.simulated_mean = mean.mean();
      row.simulated_stderr = mean.stderr_of_mean();
      row.trials = trials;
      row.extras = {absl::StrCat(sensitivity),
                    Num(alpha),
                    absl::StrCat(window),
                    Num(ratio),
                    Num(std::exp(epsilon)),
                    Bool(ratio <= std::exp(epsilon) * (1 + 1e-12))};
      table.rows.push_back(std::move(row));
      ++point;
    }
  }
  return table;
}

#undef PRIVAGG_ASSIGN

std::string Cell(const std::optional<double>& x) {
  return x ? Num(*x) : std::string();
}

}  // namespace

absl::StatusOr<ConfigMap> ParseConfig(std::string_view text) {
  ConfigMap config;
  int line_number = 0;
  for (absl::string_view raw : absl::StrSplit(AsAbsl(text), '\n')) {
    ++line_number;
    const absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_number, ": expected key = value"));
    }
    std::string key(absl::StripAsciiWhitespace(line.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_number, ": empty key"));
    }
    std::string value(absl::StripAsciiWhitespace(line.substr(eq + 1)));
    if (!config.emplace(key, std::move(value)).second) {
      return absl::InvalidArgumentError(absl::StrCat(
          "config line ", line_number, ": duplicate key '", key, "'"));
    }
  }
  return config;
}

const std::vector<std::string>& ExperimentNames() {
  static const auto* names = [] {
    auto* v = new std::vector<std::string>;
    for (const auto& [name, specs] : Registry()) v->push_back(name);
    return v;
  }();
  return *names;
}

absl::StatusOr<std::vector<OptionSpec>> ExperimentOptions(
    std::string_view experiment) {
  auto it = Registry().find(std::string(experiment));
  if (it == Registry().end()) {
    return absl::NotFoundError(
        absl::StrCat("unknown experiment '", std::string(experiment), "'"));
  }
  return it->second;
}

std::string FormatCsv(const ExperimentTable& table) {
  std::string out = absl::StrCat("# schema_version=", kCsvSchemaVersion,
                                 ",experiment=", table.experiment_id, "\n");
  std::vector<std::string> header = {
      "experiment_id", "n",      "kappa",          "epsilon",
      "delta",         "analytic_value", "simulated_mean", "simulated_stderr",
      "trials",        "seed"};
  header.insert(header.end(), table.extra_columns.begin(),
                table.extra_columns.end());
  absl::StrAppend(&out, absl::StrJoin(header, ","), "\n");
  for (const ExperimentRow& row : table.rows) {
    std::vector<std::string> cells = {row.experiment_id,
                                      absl::StrCat(row.n),
                                      absl::StrCat(row.kappa),
                                      Cell(row.epsilon),
                                      Cell(row.delta),
                                      Cell(row.analytic_value),
                                      Cell(row.simulated_mean),
                                      Cell(row.simulated_stderr),
                                      absl::StrCat(row.trials),
                                      absl::StrCat(row.seed)};
    cells.insert(cells.end(), row.extras.begin(), row.extras.end());
    absl::StrAppend(&out, absl::StrJoin(cells, ","), "\n");
  }
  return out;
}

absl::StatusOr<ExperimentTable> RunExperiment(std::string_view experiment,
                                              const ConfigMap& config) {
  auto specs = ExperimentOptions(experiment);
  if (!specs.ok()) return absl::InvalidArgumentError(specs.status().message());
  auto options = Options::Resolve(experiment, *specs, config);
  if (!options.ok()) return options.status();
  const std::string name(experiment);
  if (name == "bp-exact") return BpExact(*options);
  if (name == "bp-sim") return BpSim(*options);
  if (name == "abs-error") return AbsError(*options);
  if (name == "fig1") return Figure(name, KappaRule::kLog2N, *options);
  if (name == "fig2") return Figure(name, KappaRule::kNOver64, *options);
  if (name == "fig3") return Figure(name, KappaRule::kConstant, *options);
  if (name == "paalec-run") return PaalecRun(*options);
  if (name == "paalec-mc") return PaalecMc(*options);
  if (name == "graph-conn") return GraphConn(*options);
  return NoiseCheck(*options);
}

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kResourceExhausted:
      return 3;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kFailedPrecondition:
      return 2;
    default:
      return 1;
  }
}

}  // namespace privagg
