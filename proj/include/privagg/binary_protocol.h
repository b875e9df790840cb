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

// Plaintext simulator of the fault-tolerant Binary Protocol.
//
// The n users (n a power of two) are the leaves of a complete binary tree.
// Level 0 is the root, level L = log2(n) holds the leaves, and a node on
// level i spans |B_i| = n / 2^i consecutive leaves. After failures, the
// aggregator sums the maximal failure-free ("clean") nodes, and every user
// aggregated at level i adds Geom^{beta_i}(alpha) noise with
//
//   beta_i = min(ln(1 / delta_0) / |B_i|, 1),  delta_0 = delta / (L + 1),
//   alpha  = exp(epsilon / (L + 1)).
//
// The per-block key cancellation is not modelled; it does not affect how
// much noise ends up in the sum.

#ifndef PRIVAGG_BINARY_PROTOCOL_H_
#define PRIVAGG_BINARY_PROTOCOL_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "privagg/noise.h"
#include "privagg/random.h"

namespace privagg {

inline constexpr int64_t kMaxTreeUsers = int64_t{1} << 21;

class TreeConfig {
 public:
  // n must be a power of two in [2, 2^21]; epsilon > 0; delta in (0, 1).
  static absl::StatusOr<TreeConfig> Create(int64_t n, double epsilon,
                                           double delta);

  int64_t n() const { return n_; }
  int depth() const { return depth_; }
  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  double delta0() const { return delta_ / (depth_ + 1); }
  double alpha() const;
  // Leaves under one node of `level`.
  int64_t block_size(int level) const { return n_ >> level; }

 private:
  TreeConfig(int64_t n, int depth, double epsilon, double delta)
      : n_(n), depth_(depth), epsilon_(epsilon), delta_(delta) {}

  int64_t n_;
  int depth_;
  double epsilon_;
  double delta_;
};

// Returns log2(n) if n is a power of two >= 1, -1 otherwise.
int ExactLog2(int64_t n);

// beta_i for i = 0 (root) .. depth (leaves); non-decreasing in i.
std::vector<double> BetaSchedule(const TreeConfig& config);

class FailurePattern {
 public:
  static absl::StatusOr<FailurePattern> Create(int64_t n,
                                               std::vector<int64_t> failed);

  int64_t n() const { return n_; }
  int64_t kappa() const { return static_cast<int64_t>(failed_.size()); }
  // Sorted ascending.
  const std::vector<int64_t>& failed() const { return failed_; }
  bool IsFailed(int64_t leaf) const { return is_failed_[leaf]; }

 private:
  FailurePattern(int64_t n, std::vector<int64_t> failed);

  int64_t n_;
  std::vector<int64_t> failed_;
  std::vector<bool> is_failed_;
};

// Uniformly random kappa-subset of [0, n).
absl::StatusOr<FailurePattern> SampleFailures(int64_t n, int64_t kappa,
                                              Rng& rng);

struct TreeNode {
  int level = 0;
  int64_t index = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// The aggregating nodes: clean nodes whose parent is not clean (or the root,
// if nothing failed). Ordered left to right by leaf segment.
struct Cover {
  int64_t n = 0;
  std::vector<TreeNode> nodes;

  int64_t FirstLeaf(const TreeNode& node) const {
    return node.index * (n >> node.level);
  }
  int64_t Size(const TreeNode& node) const { return n >> node.level; }
};

absl::StatusOr<Cover> ComputeCover(const FailurePattern& failures);

struct TreeRoundResult {
  int64_t noisy_sum = 0;
  int64_t true_sum = 0;
  int64_t noise_count = 0;
  int64_t noise_sum = 0;
};

// Draws one user's noise at a level. Tests substitute deterministic samplers.
using NoiseSampler = std::function<NoiseDraw(const DilutedParams&, Rng&)>;

// One aggregation round. `values` holds one entry per leaf (entries of
// failed leaves are ignored); each surviving value must lie in
// [0, value_bound].
absl::StatusOr<TreeRoundResult> SimulateRound(const TreeConfig& config,
                                          std::span<const int64_t> values,
                                          const FailurePattern& failures,
                                          Rng& rng, int64_t value_bound = 1,
                                          const NoiseSampler& sampler = {});

// Exact E[noise_count] by enumerating every kappa-subset of failed leaves.
// Refuses instances with more than `max_patterns` subsets.
absl::StatusOr<double> NoiseCountBruteforce(int64_t n, int64_t kappa,
                                            double delta,
                                            int64_t max_patterns = 1000000);

}  // namespace privagg

#endif  // PRIVAGG_BINARY_PROTOCOL_H_
