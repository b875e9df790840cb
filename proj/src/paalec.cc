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

#include "privagg/paalec.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <tuple>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "privagg/noise.h"

namespace privagg {
namespace {

constexpr int64_t kMaxUsers = int64_t{1} << 20;

std::string Node(int64_t v) { return absl::StrCat("node:", v); }
std::string LocalAggregator(int64_t i) { return absl::StrCat("lagg:", i); }

std::string HexInt(int64_t v) { return ToHex(BigIntFromInt64(v)); }
std::string HexCiphertext(const Ciphertext& ct) {
  return absl::StrCat(ToHex(ct.a), ":", ToHex(ct.b));
}
std::string HexBytes(std::string_view text) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : text) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 15]);
  }
  return out;
}

bool IsPayloadChar(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
         (c >= 'A' && c <= 'F') || c == ':' || c == '-';
}

absl::Status CheckUserIds(std::span<const int64_t> ids, int64_t n,
                          std::string_view what) {
  for (int64_t v : ids) {
    if (v < 0 || v >= n) {
      return absl::InvalidArgumentError(absl::StrCat(
          std::string(what), " user ", v, " outside [0, ", n, ")"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

double RecommendedBeta(int64_t n, double delta) {
  return std::min(1.0, 2.0 * std::log(1.0 / delta) / static_cast<double>(n));
}

absl::StatusOr<PaalecConfig> PaalecConfig::Create(
    int64_t n, int64_t k, int64_t value_bound, double epsilon, double delta,
    std::optional<double> beta, std::vector<int64_t> assignment) {
  if (n < 1 || n > kMaxUsers) {
    return absl::InvalidArgumentError(
        absl::StrCat("user count must lie in [1, ", kMaxUsers, "], got ", n));
  }
  if (k < 1 || k > n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "local aggregator count must lie in [1, n = ", n, "], got ", k));
  }
  if (value_bound < 1 || value_bound > (int64_t{1} << 24)) {
    return absl::InvalidArgumentError(
        absl::StrCat("value bound must lie in [1, 2^24], got ", value_bound));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be > 0, got ", epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  const double b = beta.value_or(RecommendedBeta(n, delta));
  if (!(b >= 0.0 && b <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must lie in [0, 1], got ", b));
  }
  if (assignment.empty()) {
    assignment.resize(n);
    for (int64_t v = 0; v < n; ++v) assignment[v] = v % k;
  }
  if (static_cast<int64_t>(assignment.size()) != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "assignment has ", assignment.size(), " entries for ", n, " users"));
  }
  for (int64_t v = 0; v < n; ++v) {
    if (assignment[v] < 0 || assignment[v] >= k) {
      return absl::InvalidArgumentError(absl::StrCat(
          "user ", v, " assigned to ", assignment[v], ", not in [0, ", k, ")"));
    }
  }
  PaalecConfig config;
  config.n_ = n;
  config.k_ = k;
  config.value_bound_ = value_bound;
  config.epsilon_ = epsilon;
  config.delta_ = delta;
  config.beta_ = b;
  config.assignment_ = std::move(assignment);
  return config;
}

double PaalecConfig::alpha() const {
  return std::exp(epsilon_ / static_cast<double>(value_bound_));
}

PrivacyBudgetReport PrivacyBudgetCheck(int64_t n, double beta, double delta) {
  PrivacyBudgetReport report;
  report.beta = beta;
  report.target_delta = delta;
  const double honest = static_cast<double>(n) / 2.0;
  report.achieved_delta =
      beta >= 1.0 ? 0.0 : std::exp(honest * std::log1p(-beta));
  report.passes = report.achieved_delta <= delta;
  report.meets_recommended_beta =
      beta >= 2.0 * std::log(1.0 / delta) / static_cast<double>(n);
  return report;
}

absl::StatusOr<AggregatorKeys> GenerateAggregatorKeys(const GroupParams& group,
                                                      int64_t k, Rng& rng) {
  if (k < 0 || BigIntFromInt64(k + 1) > group.q() - 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cannot draw ", k + 1, " distinct keys from a group of order ",
        group.q().get_str()));
  }
  std::set<BigInt> used;
  auto fresh = [&] {
    for (;;) {
      BigInt key = RandomExponent(group, rng);
      if (used.insert(key).second) return key;
    }
  };
  AggregatorKeys keys;
  keys.sk = fresh();
  for (int64_t i = 0; i < k; ++i) keys.local_sk.push_back(fresh());
  return keys;
}

std::vector<Ciphertext> Setup(const GroupParams& group,
                              const AggregatorKeys& keys, Rng& rng) {
  const Ciphertext broadcast = EncOne(group, keys.sk, rng);
  std::vector<Ciphertext> published;
  published.reserve(keys.local_sk.size());
  for (const BigInt& sk_i : keys.local_sk) {
    published.push_back(AddLayer(group, broadcast, sk_i, rng));
  }
  return published;
}

const BigInt* MaskTable::Find(int64_t from, int64_t to) const {
  auto it = masks_.find({from, to});
  return it == masks_.end() ? nullptr : &it->second;
}

BigInt MaskTable::NetMask(const GroupParams& group, int64_t v) const {
  BigInt net = 0;
  const Edge first{v, INT64_MIN};
  const Edge last{v, INT64_MAX};
  for (auto it = incoming_.lower_bound(first);
       it != incoming_.end() && it->first <= last; ++it) {
    net += it->second;
  }
  for (auto it = masks_.lower_bound(first);
       it != masks_.end() && it->first <= last; ++it) {
    net -= it->second;
  }
  return group.ReduceExponent(net);
}

MaskTable ExchangeMasks(const GroupParams& group, const Graph& graph,
                        Rng& rng, const std::vector<bool>& active) {
  auto is_active = [&](int64_t v) { return active.empty() || active[v]; };
  MaskTable masks;
  for (int64_t v = 0; v < graph.n(); ++v) {
    if (!is_active(v)) continue;
    for (int64_t w : graph.Neighbors(v)) {
      if (is_active(w)) masks.Set(v, w, UniformBigBelow(group.q(), rng));
    }
  }
  return masks;
}

BigInt ContributionExponent(const GroupParams& group, const MaskTable& masks,
                            int64_t v, int64_t value, int64_t noise) {
  return group.ReduceExponent(masks.NetMask(group, v) +
                              BigIntFromInt64(noise) + BigIntFromInt64(value));
}

Ciphertext NodeCiphertext(const GroupParams& group, const Ciphertext& published,
                          const BigInt& contribution, Rng& rng) {
  return Fill(group, Reencrypt(group, published, rng),
              group.GPow(contribution));
}

Ciphertext LocalAggregate(const GroupParams& group,
                          std::span<const Ciphertext> cts, const BigInt& sk_i) {
  std::vector<Ciphertext> stripped;
  stripped.reserve(cts.size());
  for (const Ciphertext& ct : cts) {
    stripped.push_back(PartialDecrypt(group, ct, sk_i));
  }
  return Combine(group, stripped);
}

absl::StatusOr<int64_t> FinalAggregate(const GroupParams& group,
                                       std::span<const Ciphertext> local,
                                       const BigInt& sk, int64_t lo,
                                       int64_t hi, const DlogOptions& dlog) {
  const BigInt y = DecryptElement(group, Combine(group, local), sk);
  auto sum = BoundedDlog(group, y, lo, hi, dlog);
  if (sum.status().code() == absl::StatusCode::kNotFound) {
    return absl::NotFoundError(absl::StrCat(
        "decrypted aggregate is not g^x for any x in the decoding window [",
        lo, ", ", hi, "]"));
  }
  return sum;
}

std::pair<int64_t, int64_t> DecodingWindow(const PaalecConfig& config,
                                           int64_t participants,
                                           double tail_probability) {
  int64_t bound = 0;
  if (config.beta() > 0.0 && participants > 0) {
    auto params = DilutedParams::Create(config.alpha(), config.beta());
    bound = CompoundNoiseBound(*params, participants, tail_probability);
  }
  return {-bound, participants * config.value_bound() + bound};
}

std::string FormatTrace(std::span<const TraceRecord> records) {
  std::string out = "# phase,actor,type,payload\n";
  for (const TraceRecord& r : records) {
    absl::StrAppend(&out, r.phase, ",", r.actor, ",", r.type, ",", r.payload,
                    "\n");
  }
  return out;
}

absl::StatusOr<std::vector<TraceRecord>> ParseTrace(std::string_view text) {
  static const std::set<std::string> kPhases = {
      "setup", "mask", "shadow", "contribute", "local", "final"};
  std::vector<TraceRecord> records;
  int line_number = 0;
  for (absl::string_view line :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields = absl::StrSplit(line, ',');
    if (fields.size() != 4) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trace line ", line_number, ": expected 4 fields, got ",
          fields.size()));
    }
    if (!kPhases.count(fields[0])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trace line ", line_number, ": unknown phase '", fields[0], "'"));
    }
    if (fields[1].empty() || fields[2].empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trace line ", line_number, ": empty actor or type"));
    }
    if (fields[3].empty() ||
        !std::all_of(fields[3].begin(), fields[3].end(), IsPayloadChar)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trace line ", line_number, ": payload is not hex"));
    }
    records.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return records;
}

absl::StatusOr<RoundResult> RunRound(const GroupParams& group,
                                     const PaalecConfig& config,
                                     const Graph& graph,
                                     const AggregatorKeys& keys,
                                     std::span<const Ciphertext> published,
                                     std::span<const int64_t> values,
                                     uint64_t seed,
                                     const RoundOptions& options) {
  const int64_t n = config.n();
  if (graph.n() != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "graph has ", graph.n(), " vertices for ", n, " users"));
  }
  if (static_cast<int64_t>(values.size()) != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("got ", values.size(), " values for ", n, " users"));
  }
  if (static_cast<int64_t>(published.size()) != config.k() ||
      static_cast<int64_t>(keys.local_sk.size()) != config.k()) {
    return absl::InvalidArgumentError(
        "need one published ciphertext and one key per local aggregator");
  }
  if (options.forced_noise &&
      static_cast<int64_t>(options.forced_noise->size()) != n) {
    return absl::InvalidArgumentError("forced noise needs one entry per user");
  }
  if (auto s = CheckUserIds(options.failed_before_round, n, "failed");
      !s.ok()) {
    return s;
  }
  if (auto s = CheckUserIds(options.failed_after_masks, n, "mid-round failed");
      !s.ok()) {
    return s;
  }

  std::vector<bool> active(n, true);
  for (int64_t v : options.failed_before_round) active[v] = false;
  std::vector<bool> sends(active);
  for (int64_t v : options.failed_after_masks) {
    if (!active[v]) {
      return absl::InvalidArgumentError(absl::StrCat(
          "user ", v, " cannot fail both before and during the round"));
    }
    sends[v] = false;
  }
  for (int64_t v = 0; v < n; ++v) {
    if (sends[v] && (values[v] < 0 || values[v] > config.value_bound())) {
      return absl::InvalidArgumentError(
          absl::StrCat("value of user ", v, " is ", values[v],
                       ", outside [0, ", config.value_bound(), "]"));
    }
  }

  Rng mask_rng = DeriveStream(options.mask_seed.value_or(seed), 0);
  Rng noise_rng = DeriveStream(seed, 1);
  Rng crypto_rng = DeriveStream(seed, 2);
  std::optional<DilutedParams> noise_law;
  if (config.beta() > 0.0) {
    noise_law = *DilutedParams::Create(config.alpha(), config.beta());
  }

  RoundResult result;
  auto record = [&](std::string phase, std::string actor, std::string type,
                    std::string payload) {
    if (options.record_trace) {
      result.trace.push_back({std::move(phase), std::move(actor),
                              std::move(type), std::move(payload)});
    }
  };
  for (int64_t i = 0; i < config.k(); ++i) {
    record("setup", LocalAggregator(i), "published",
           HexCiphertext(published[i]));
  }

  result.masks = ExchangeMasks(group, graph, mask_rng, active);
  for (const auto& [edge, mask] : result.masks.entries()) {
    record("mask", Node(edge.first), absl::StrCat("to:", edge.second),
           ToHex(mask));
  }

  std::vector<std::vector<Ciphertext>> cells(config.k());
  int64_t forced_magnitude = 0;
  for (int64_t v = 0; v < n; ++v) {
    if (!active[v]) continue;
    NodeState node;
    node.id = v;
    node.value = values[v];
    if (options.forced_noise) {
      node.noise = (*options.forced_noise)[v];
      node.noise_added = node.noise != 0;
    } else if (noise_law) {
      const NoiseDraw draw = SampleDilutedDraw(*noise_law, noise_rng);
      node.noise = draw.value;
      node.noise_added = draw.added;
    }
    node.contribution =
        ContributionExponent(group, result.masks, v, node.value, node.noise);
    if (!sends[v]) continue;  // masks exchanged, ciphertext never sent

    const int64_t cell = config.AggregatorOf(v);
    cells[cell].push_back(NodeCiphertext(group, published[cell],
                                         node.contribution, crypto_rng));
    record("shadow", Node(v), "value", HexInt(node.value));
    record("shadow", Node(v), "noise", HexInt(node.noise));
    record("shadow", Node(v), "contribution", ToHex(node.contribution));
    record("contribute", Node(v), absl::StrCat("to:", LocalAggregator(cell)),
           HexCiphertext(cells[cell].back()));

    result.participants.push_back(v);
    result.value_sum += node.value;
    result.noise_sum += node.noise;
    result.noise_count += node.noise_added ? 1 : 0;
    forced_magnitude += std::abs(node.noise);
    result.nodes.push_back(std::move(node));
  }

  for (int64_t i = 0; i < config.k(); ++i) {
    result.local_results.push_back(
        LocalAggregate(group, cells[i], keys.local_sk[i]));
    record("local", LocalAggregator(i), "aggregate",
           HexCiphertext(result.local_results.back()));
  }

  const int64_t participants = static_cast<int64_t>(result.participants.size());
  std::tie(result.window_lo, result.window_hi) =
      DecodingWindow(config, participants, options.tail_probability);
  if (options.forced_noise) {
    // Forced noise need not follow the configured law; widen to cover it.
    result.window_lo = std::min(result.window_lo, -forced_magnitude);
    result.window_hi =
        std::max(result.window_hi,
                 participants * config.value_bound() + forced_magnitude);
  }
  record("final", "agg", "window",
         absl::StrCat(HexInt(result.window_lo), ":", HexInt(result.window_hi)));
  result.decoded = FinalAggregate(group, result.local_results, keys.sk,
                                  result.window_lo, result.window_hi,
                                  options.dlog);
  if (result.decoded.ok()) {
    record("final", "agg", "sum", HexInt(*result.decoded));
  } else {
    record("final", "agg", "error",
           HexBytes(std::string(result.decoded.status().message())));
  }
  return result;
}

std::vector<ComponentLeakage> HonestComponentLeakage(
    const GroupParams& group, const Graph& graph,
    const AdversaryModel& adversary, const RoundResult& round) {
  const std::set<int64_t> compromised(adversary.compromised.begin(),
                                      adversary.compromised.end());
  std::vector<int64_t> honest;
  std::vector<const NodeState*> state_of(graph.n(), nullptr);
  for (const NodeState& node : round.nodes) {
    state_of[node.id] = &node;
    if (!compromised.count(node.id)) honest.push_back(node.id);
  }
  auto induced = InducedSubgraph(graph, honest);
  if (!induced.ok()) return {};
  const std::vector<int64_t> labels = ComponentLabels(induced->graph);

  std::map<int64_t, ComponentLeakage> by_label;
  for (size_t i = 0; i < honest.size(); ++i) {
    const int64_t v = honest[i];
    const NodeState& node = *state_of[v];
    ComponentLeakage& leak = by_label[labels[i]];
    leak.members.push_back(v);
    leak.adversary_quantity += node.contribution;
    leak.component_sum +=
        BigIntFromInt64(node.value) + BigIntFromInt64(node.noise);
    // The coalition knows both masks on every edge to a compromised user.
    for (int64_t w : graph.Neighbors(v)) {
      if (!compromised.count(w)) continue;
      if (const BigInt* in = round.masks.Find(w, v)) {
        leak.adversary_quantity -= *in;
      }
      if (const BigInt* out = round.masks.Find(v, w)) {
        leak.adversary_quantity += *out;
      }
    }
  }
  std::vector<ComponentLeakage> components;
  for (auto& [label, leak] : by_label) {
    leak.adversary_quantity = group.ReduceExponent(leak.adversary_quantity);
    leak.component_sum = group.ReduceExponent(leak.component_sum);
    leak.matches = leak.adversary_quantity == leak.component_sum;
    components.push_back(std::move(leak));
  }
  return components;
}

absl::StatusOr<NoiseMagnitudeResult> NoiseMagnitudeExperiment(
    int64_t n, double epsilon, int64_t value_bound, double delta,
    int64_t trials, uint64_t seed) {
  auto config = PaalecConfig::Create(n, 1, value_bound, epsilon, delta);
  if (!config.ok()) return config.status();
  if (trials < 2) return absl::InvalidArgumentError("trials must be >= 2");
  NoiseMagnitudeResult result;
  result.beta = config->beta();
  result.reference = 2.0 * std::sqrt(std::log(1.0 / delta));
  auto law = DilutedParams::Create(config->alpha(), config->beta());
  if (!law.ok()) return law.status();
  // Welford accumulation in trial order.
  double mean = 0.0, m2 = 0.0, count_mean = 0.0;
  for (int64_t t = 0; t < trials; ++t) {
    Rng rng = DeriveStream(seed, static_cast<uint64_t>(t));
    int64_t sum = 0, count = 0;
    for (int64_t v = 0; v < n; ++v) {
      const NoiseDraw draw = SampleDilutedDraw(*law, rng);
      sum += draw.value;
      count += draw.added ? 1 : 0;
    }
    const double x = std::abs(static_cast<double>(sum));
    const double d = x - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d * (x - mean);
    count_mean += (static_cast<double>(count) - count_mean) /
                  static_cast<double>(t + 1);
  }
  result.mean_abs = mean;
  result.stderr = std::sqrt(m2 / static_cast<double>(trials - 1) /
                            static_cast<double>(trials));
  result.mean_noise_count = count_mean;
  return result;
}

}  // namespace privagg
