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

#include "privagg/binary_protocol.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privagg {

int ExactLog2(int64_t n) {
  if (n < 1 || (n & (n - 1)) != 0) return -1;
  int log = 0;
  while ((int64_t{1} << log) < n) ++log;
  return log;
}

absl::StatusOr<TreeConfig> TreeConfig::Create(int64_t n, double epsilon,
                                              double delta) {
  const int depth = ExactLog2(n);
  if (depth < 1 || n > kMaxTreeUsers) {
    return absl::InvalidArgumentError(absl::StrCat(
        "user count must be a power of two in [2, 2^21], got ", n));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be > 0, got ", epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return TreeConfig(n, depth, epsilon, delta);
}

double TreeConfig::alpha() const { return std::exp(epsilon_ / (depth_ + 1)); }

std::vector<double> BetaSchedule(const TreeConfig& config) {
  const double log_inv_delta0 = std::log(1.0 / config.delta0());
  std::vector<double> betas(config.depth() + 1);
  for (int level = 0; level <= config.depth(); ++level) {
    betas[level] = std::min(
        log_inv_delta0 / static_cast<double>(config.block_size(level)), 1.0);
  }
  return betas;
}

FailurePattern::FailurePattern(int64_t n, std::vector<int64_t> failed)
    : n_(n), failed_(std::move(failed)), is_failed_(n, false) {
  for (int64_t leaf : failed_) is_failed_[leaf] = true;
}

absl::StatusOr<FailurePattern> FailurePattern::Create(
    int64_t n, std::vector<int64_t> failed) {
  if (n < 1) return absl::InvalidArgumentError("n must be positive");
  std::sort(failed.begin(), failed.end());
  for (size_t i = 0; i < failed.size(); ++i) {
    if (failed[i] < 0 || failed[i] >= n) {
      return absl::InvalidArgumentError(
          absl::StrCat("failed leaf ", failed[i], " outside [0, ", n, ")"));
    }
    if (i > 0 && failed[i] == failed[i - 1]) {
      return absl::InvalidArgumentError(
          absl::StrCat("failed leaf ", failed[i], " listed twice"));
    }
  }
  return FailurePattern(n, std::move(failed));
}

absl::StatusOr<FailurePattern> SampleFailures(int64_t n, int64_t kappa,
                                              Rng& rng) {
  if (kappa < 0 || kappa > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot fail ", kappa, " of ", n, " users"));
  }
  // Partial Fisher-Yates: the first kappa slots end up a uniform subset.
  std::vector<int64_t> leaves(n);
  std::iota(leaves.begin(), leaves.end(), 0);
  for (int64_t i = 0; i < kappa; ++i) {
    const int64_t j =
        i + static_cast<int64_t>(UniformBelow(rng, static_cast<uint64_t>(n - i)));
    std::swap(leaves[i], leaves[j]);
  }
  leaves.resize(kappa);
  return FailurePattern::Create(n, std::move(leaves));
}

namespace {

void CollectClean(const std::vector<int64_t>& failed_prefix, int64_t n,
                  TreeNode node, std::vector<TreeNode>& out) {
  const int64_t size = n >> node.level;
  const int64_t first = node.index * size;
  const int64_t failed = failed_prefix[first + size] - failed_prefix[first];
  if (failed == 0) {
    out.push_back(node);
    return;
  }
  if (size == 1) return;
  CollectClean(failed_prefix, n, {node.level + 1, 2 * node.index}, out);
  CollectClean(failed_prefix, n, {node.level + 1, 2 * node.index + 1}, out);
}

}  // namespace

absl::StatusOr<Cover> ComputeCover(const FailurePattern& failures) {
  const int64_t n = failures.n();
  if (ExactLog2(n) < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("user count must be a power of two, got ", n));
  }
  std::vector<int64_t> prefix(n + 1, 0);
  for (int64_t leaf = 0; leaf < n; ++leaf) {
    prefix[leaf + 1] = prefix[leaf] + (failures.IsFailed(leaf) ? 1 : 0);
  }
  Cover cover{n, {}};
  CollectClean(prefix, n, {0, 0}, cover.nodes);
  return cover;
}

absl::StatusOr<TreeRoundResult> SimulateRound(const TreeConfig& config,
                                          std::span<const int64_t> values,
                                          const FailurePattern& failures,
                                          Rng& rng, int64_t value_bound,
                                          const NoiseSampler& sampler) {
  if (static_cast<int64_t>(values.size()) != config.n() ||
      failures.n() != config.n()) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", config.n(), " values and leaves, got ",
                     values.size(), " values and ", failures.n(), " leaves"));
  }
  for (int64_t leaf = 0; leaf < config.n(); ++leaf) {
    if (failures.IsFailed(leaf)) continue;
    if (values[leaf] < 0 || values[leaf] > value_bound) {
      return absl::InvalidArgumentError(
          absl::StrCat("value ", values[leaf], " of user ", leaf,
                       " outside [0, ", value_bound, "]"));
    }
  }
  auto cover = ComputeCover(failures);
  if (!cover.ok()) return cover.status();

  const std::vector<double> betas = BetaSchedule(config);
  std::vector<DilutedParams> level_noise;
  level_noise.reserve(betas.size());
  for (double beta : betas) {
    auto params = DilutedParams::Create(config.alpha(), beta);
    if (!params.ok()) return params.status();
    level_noise.push_back(*params);
  }

  TreeRoundResult result;
  for (const TreeNode& node : cover->nodes) {
    const DilutedParams& noise = level_noise[node.level];
    const int64_t first = cover->FirstLeaf(node);
    for (int64_t leaf = first; leaf < first + cover->Size(node); ++leaf) {
      const NoiseDraw draw =
          sampler ? sampler(noise, rng) : SampleDilutedDraw(noise, rng);
      result.true_sum += values[leaf];
      result.noise_sum += draw.value;
      if (draw.added) ++result.noise_count;
    }
  }
  result.noisy_sum = result.true_sum + result.noise_sum;
  return result;
}

absl::StatusOr<double> NoiseCountBruteforce(int64_t n, int64_t kappa,
                                            double delta,
                                            int64_t max_patterns) {
  auto config = TreeConfig::Create(n, /*epsilon=*/1.0, delta);
  if (!config.ok()) return config.status();
  if (kappa < 0 || kappa > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot fail ", kappa, " of ", n, " users"));
  }
  // C(n, kappa) computed incrementally; every partial product is an integer.
  double patterns = 1.0;
  for (int64_t j = 0; j < kappa; ++j) {
    patterns = patterns * static_cast<double>(n - j) / static_cast<double>(j + 1);
    if (patterns > static_cast<double>(max_patterns)) {
      return absl::ResourceExhaustedError(
          absl::StrCat("C(", n, ", ", kappa, ") exceeds the enumeration limit ",
                       max_patterns));
    }
  }

  const std::vector<double> betas = BetaSchedule(*config);
  std::vector<int64_t> chosen(kappa);
  std::iota(chosen.begin(), chosen.end(), 0);
  double total = 0.0;
  int64_t count = 0;
  while (true) {
    auto failures = FailurePattern::Create(n, chosen);
    if (!failures.ok()) return failures.status();
    auto cover = ComputeCover(*failures);
    if (!cover.ok()) return cover.status();
    double expected = 0.0;
    for (const TreeNode& node : cover->nodes) {
      expected += static_cast<double>(cover->Size(node)) * betas[node.level];
    }
    total += expected;
    ++count;

    // Next combination in lexicographic order.
    int64_t i = kappa - 1;
    while (i >= 0 && chosen[i] == n - kappa + i) --i;
    if (i < 0) break;
    ++chosen[i];
    for (int64_t j = i + 1; j < kappa; ++j) chosen[j] = chosen[j - 1] + 1;
  }
  return total / static_cast<double>(count);
}

}  // namespace privagg
