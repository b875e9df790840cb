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

// Aggregation with local communication and layered encryption.
//
// Users sit on a communication graph. Every user v picks a random exponent
// x^v_w for each neighbor w and hands it over privately, then forms
//
//   c_v = sum_w x^w_v - sum_w x^v_w + r_v + xi_v   (mod q)
//
// from its value xi_v in [0, Delta] and diluted geometric noise r_v. The masks
// cancel in the total. Each user is assigned to one of k local aggregators;
// it re-randomizes that aggregator's published encryption of one under
// sk + sk_i, fills it with g^{c_v}, and sends it. A local aggregator strips its
// layer sk_i and multiplies; the aggregator decrypts the product of the k
// results with sk and recovers sum_v c_v = sum xi + sum r by a bounded
// discrete log.

#ifndef PRIVAGG_PAALEC_H_
#define PRIVAGG_PAALEC_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "privagg/graph.h"
#include "privagg/group.h"
#include "privagg/random.h"

namespace privagg {

// min(1, 2 ln(1/delta) / n): enough dilution that, with half of the users
// honest, some honest user adds noise except with probability delta.
double RecommendedBeta(int64_t n, double delta);

class PaalecConfig {
 public:
  // Requires 1 <= k <= n, value_bound >= 1, epsilon > 0, 0 < delta < 1 and
  // beta in [0, 1] (default RecommendedBeta). An empty assignment means
  // round robin, v -> v mod k.
  static absl::StatusOr<PaalecConfig> Create(
      int64_t n, int64_t k, int64_t value_bound = 1, double epsilon = 0.5,
      double delta = 0.05, std::optional<double> beta = std::nullopt,
      std::vector<int64_t> assignment = {});

  int64_t n() const { return n_; }
  int64_t k() const { return k_; }
  int64_t value_bound() const { return value_bound_; }
  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  double beta() const { return beta_; }
  // exp(epsilon / value_bound).
  double alpha() const;
  int64_t AggregatorOf(int64_t v) const { return assignment_[v]; }
  const std::vector<int64_t>& assignment() const { return assignment_; }

 private:
  PaalecConfig() = default;

  int64_t n_ = 0;
  int64_t k_ = 0;
  int64_t value_bound_ = 1;
  double epsilon_ = 0.5;
  double delta_ = 0.05;
  double beta_ = 0.0;
  std::vector<int64_t> assignment_;
};

struct PrivacyBudgetReport {
  double beta = 0.0;
  double target_delta = 0.0;
  // (1 - beta)^{n/2}: probability that none of n/2 honest users adds noise.
  double achieved_delta = 1.0;
  bool passes = false;
  // beta >= 2 ln(1/delta) / n.
  bool meets_recommended_beta = false;
};

PrivacyBudgetReport PrivacyBudgetCheck(int64_t n, double beta, double delta);
inline PrivacyBudgetReport PrivacyBudgetCheck(const PaalecConfig& config) {
  return PrivacyBudgetCheck(config.n(), config.beta(), config.delta());
}

struct AggregatorKeys {
  BigInt sk;                     // the aggregator's key
  std::vector<BigInt> local_sk;  // one per local aggregator
};

// k + 1 pairwise distinct keys; fails if the group has too few exponents.
absl::StatusOr<AggregatorKeys> GenerateAggregatorKeys(const GroupParams& group,
                                                      int64_t k, Rng& rng);

// Enc_{sk + sk_i}(1) for every local aggregator i: the aggregator publishes
// Enc_sk(1) once and each local aggregator adds its layer.
std::vector<Ciphertext> Setup(const GroupParams& group,
                              const AggregatorKeys& keys, Rng& rng);

// x^v_w per ordered edge (v, w), exponents in [0, q).
class MaskTable {
 public:
  void Set(int64_t from, int64_t to, BigInt mask) {
    incoming_[{to, from}] = mask;
    masks_[{from, to}] = std::move(mask);
  }
  // nullptr when no mask was exchanged along (from, to).
  const BigInt* Find(int64_t from, int64_t to) const;
  size_t size() const { return masks_.size(); }
  const std::map<Edge, BigInt>& entries() const { return masks_; }

  // sum_w x^w_v - sum_w x^v_w (mod q) over the masks present.
  BigInt NetMask(const GroupParams& group, int64_t v) const;

 private:
  std::map<Edge, BigInt> masks_;     // keyed (from, to)
  std::map<Edge, BigInt> incoming_;  // the same masks keyed (to, from)
};

// Masks in both directions of every edge whose endpoints are both active
// (all vertices when `active` is empty).
MaskTable ExchangeMasks(const GroupParams& group, const Graph& graph,
                        Rng& rng, const std::vector<bool>& active = {});

// c_v = NetMask(v) + noise + value (mod q).
BigInt ContributionExponent(const GroupParams& group, const MaskTable& masks,
                            int64_t v, int64_t value, int64_t noise);

// Fill(Reencrypt(published), g^{contribution}). The published encryption of
// one is re-randomized before filling; re-randomizing afterwards would raise
// the message to the randomizer too.
Ciphertext NodeCiphertext(const GroupParams& group, const Ciphertext& published,
                          const BigInt& contribution, Rng& rng);

// Strips layer sk_i from every ciphertext and multiplies; (1, 1) if empty.
Ciphertext LocalAggregate(const GroupParams& group,
                          std::span<const Ciphertext> cts, const BigInt& sk_i);

// Decrypts the product of the local results with sk and recovers the sum in
// [lo, hi]. NotFound (naming the window) if the sum lies outside it.
absl::StatusOr<int64_t> FinalAggregate(const GroupParams& group,
                                       std::span<const Ciphertext> local,
                                       const BigInt& sk, int64_t lo,
                                       int64_t hi,
                                       const DlogOptions& dlog = {});

// Decoding window [-B, participants * value_bound + B], where the sum of
// the participants' noise exceeds B in magnitude with probability at most
// tail_probability.
std::pair<int64_t, int64_t> DecodingWindow(const PaalecConfig& config,
                                           int64_t participants,
                                           double tail_probability);

// One line of a round transcript: phase,actor,type,payload.
struct TraceRecord {
  std::string phase;
  std::string actor;
  std::string type;
  std::string payload;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

std::string FormatTrace(std::span<const TraceRecord> records);
absl::StatusOr<std::vector<TraceRecord>> ParseTrace(std::string_view text);

struct RoundOptions {
  // Users absent for the whole round: no masks, no ciphertext.
  std::vector<int64_t> failed_before_round;
  // Fault injection: users that exchange masks and then go silent. Their
  // masks no longer cancel, so the decoded sum is wrong or not found.
  std::vector<int64_t> failed_after_masks;
  // Per-user noise replacing the diluted geometric draws.
  std::optional<std::vector<int64_t>> forced_noise;
  // Mask stream seed; defaults to one derived from the round seed. Changing
  // it must not change the decoded sum.
  std::optional<uint64_t> mask_seed;
  double tail_probability = 1e-9;
  DlogOptions dlog;
  bool record_trace = false;
};

struct NodeState {
  int64_t id = 0;
  int64_t value = 0;
  int64_t noise = 0;
  bool noise_added = false;
  BigInt contribution;  // c_v in [0, q)
};

struct RoundResult {
  std::vector<int64_t> participants;  // sorted; users that sent ciphertexts
  std::vector<NodeState> nodes;       // one per participant, same order
  MaskTable masks;
  std::vector<Ciphertext> local_results;  // one per local aggregator
  int64_t window_lo = 0;
  int64_t window_hi = 0;
  // Plaintext shadow: sums over participants.
  int64_t value_sum = 0;
  int64_t noise_sum = 0;
  int64_t noise_count = 0;
  int64_t shadow_sum() const { return value_sum + noise_sum; }
  // What the aggregator decoded, or why it could not.
  absl::StatusOr<int64_t> decoded = absl::UnknownError("not run");
  std::vector<TraceRecord> trace;
};

// One full round. `values` has one entry per user in [0, value_bound]
// (entries of failed users are ignored). Errors only for invalid inputs;
// decoding failures are reported in RoundResult::decoded.
absl::StatusOr<RoundResult> RunRound(const GroupParams& group,
                                     const PaalecConfig& config,
                                     const Graph& graph,
                                     const AggregatorKeys& keys,
                                     std::span<const Ciphertext> published,
                                     std::span<const int64_t> values,
                                     uint64_t seed,
                                     const RoundOptions& options = {});

struct AdversaryModel {
  std::vector<int64_t> compromised;  // users
  bool aggregator_compromised = false;
  std::vector<bool> local_compromised;
};

// What a coalition learns about one connected component S of the graph
// induced by the honest participants: every c_v reaches the aggregator, and
// the coalition knows the masks on edges into compromised users, so it can
// form sum_{v in S} c_v minus those masks.
struct ComponentLeakage {
  std::vector<int64_t> members;
  BigInt adversary_quantity;  // mod q
  BigInt component_sum;       // sum over S of value + noise, mod q
  bool matches = false;
};

std::vector<ComponentLeakage> HonestComponentLeakage(
    const GroupParams& group, const Graph& graph,
    const AdversaryModel& adversary, const RoundResult& round);

struct NoiseMagnitudeResult {
  double beta = 0.0;
  double mean_abs = 0.0;  // Monte Carlo E|sum of n diluted noises|
  double stderr = 0.0;
  double mean_noise_count = 0.0;
  // 2 sqrt(ln(1/delta)), the headline figure it is reported against.
  double reference = 0.0;
};

// Diluted geometric noise of n users at RecommendedBeta(n, delta) and
// alpha = exp(epsilon / value_bound); trial t uses DeriveStream(seed, t).
absl::StatusOr<NoiseMagnitudeResult> NoiseMagnitudeExperiment(
    int64_t n, double epsilon, int64_t value_bound, double delta,
    int64_t trials, uint64_t seed);

}  // namespace privagg

#endif  // PRIVAGG_PAALEC_H_
