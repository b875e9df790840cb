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

#include "privagg/group.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privagg {
namespace {

constexpr int kPrimalityReps = 40;

bool IsProbablePrime(const BigInt& x) {
  return mpz_probab_prime_p(x.get_mpz_t(), kPrimalityReps) > 0;
}

uint64_t LowWord(const BigInt& x) {
  return static_cast<uint64_t>(mpz_getlimbn(x.get_mpz_t(), 0));
}

BigInt FromU64(uint64_t v) {
  BigInt x;
  mpz_import(x.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return x;
}

// Odd primes below 2^12 for trial division of safe-prime candidates.
std::vector<uint32_t> SmallPrimes() {
  std::vector<bool> composite(4096, false);
  std::vector<uint32_t> primes;
  for (uint32_t i = 3; i < composite.size(); i += 2) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (uint32_t j = i * i; j < composite.size(); j += 2 * i) {
      composite[j] = true;
    }
  }
  return primes;
}

// Both q and 2q + 1 free of small factors.
bool PassesSieve(const BigInt& q, const std::vector<uint32_t>& primes) {
  for (uint32_t prime : primes) {
    const unsigned long r = mpz_fdiv_ui(q.get_mpz_t(), prime);
    if (r == 0 && q != prime) return false;
    if ((2 * r + 1) % prime == 0) return false;
  }
  return true;
}

int MaxSetupAttempts(int bits) {
  // Safe primes have density ~ 1 / (bits^2 ln^2 2); the sieve removes most
  // candidates cheaply, so allow generously many.
  return 200 * bits * bits;
}

absl::StatusOr<int64_t> ScanWindow(const GroupParams& group, const BigInt& h,
                                   int64_t lo, int64_t width) {
  BigInt current = group.GPow(lo);
  for (int64_t y = 0; y < width; ++y) {
    if (current == h) return lo + y;
    current = group.Mul(current, group.g());
  }
  return absl::NotFoundError("no exponent in window");
}

// y in [0, width) with g^y = target.
std::optional<int64_t> BabyStepGiantStep(const GroupParams& group,
                                         const BigInt& target, int64_t width) {
  const int64_t m = static_cast<int64_t>(
      std::ceil(std::sqrt(static_cast<double>(width))));
  std::vector<BigInt> baby;
  baby.reserve(m);
  std::unordered_multimap<uint64_t, int64_t> index;
  index.reserve(m);
  BigInt current = 1;
  for (int64_t j = 0; j < m; ++j) {
    baby.push_back(current);
    index.emplace(LowWord(current), j);
    current = group.Mul(current, group.g());
  }
  const BigInt giant = group.Inverse(current);  // g^{-m}
  BigInt gamma = target;
  for (int64_t i = 0; i * m < width; ++i) {
    auto [first, last] = index.equal_range(LowWord(gamma));
    for (auto it = first; it != last; ++it) {
      if (baby[it->second] == gamma) {
        const int64_t y = i * m + it->second;
        if (y < width) return y;
      }
    }
    gamma = group.Mul(gamma, giant);
  }
  return std::nullopt;
}

// Pollard's lambda method on [0, width). The jump function mixes the low
// word with `salt`, so each attempt walks a different path.
std::optional<int64_t> Kangaroo(const GroupParams& group, const BigInt& target,
                                int64_t width, uint64_t salt) {
  const double root = std::sqrt(static_cast<double>(width));
  // Jumps 2^0 .. 2^{k-1} with mean about sqrt(width) / 2.
  int k = 1;
  while (k < 62 && std::ldexp(1.0, k) / k < root / 2) ++k;
  std::vector<BigInt> jump_element(k);
  std::vector<int64_t> jump_size(k);
  for (int i = 0; i < k; ++i) {
    jump_size[i] = int64_t{1} << i;
    jump_element[i] = group.GPow(jump_size[i]);
  }
  auto choose = [&](const BigInt& x) {
    uint64_t z = LowWord(x) ^ salt;
    z ^= z >> 31;
    z *= 0x9e3779b97f4a7c15ULL;
    z ^= z >> 29;
    return static_cast<int>(z % static_cast<uint64_t>(k));
  };

  // Tame kangaroo from the top of the window lays a trap.
  const int64_t steps = 2 * static_cast<int64_t>(std::ceil(root)) + 16;
  BigInt tame = group.GPow(width - 1);
  int64_t tame_distance = 0;
  for (int64_t s = 0; s < steps; ++s) {
    const int j = choose(tame);
    tame = group.Mul(tame, jump_element[j]);
    tame_distance += jump_size[j];
  }
  // Wild kangaroo from the target until it lands on or passes the trap.
  BigInt wild = target;
  int64_t wild_distance = 0;
  const int64_t limit = (width - 1) + tame_distance;
  while (wild_distance <= limit) {
    if (wild == tame) {
      const int64_t y = (width - 1) + tame_distance - wild_distance;
      if (y >= 0 && y < width) return y;
      return std::nullopt;
    }
    const int j = choose(wild);
    wild = group.Mul(wild, jump_element[j]);
    wild_distance += jump_size[j];
  }
  return std::nullopt;
}

}  // namespace

absl::StatusOr<GroupParams> GroupParams::Create(BigInt p, BigInt q, BigInt g) {
  if (p < 5 || !IsProbablePrime(p)) {
    return absl::InvalidArgumentError(
        absl::StrCat("p = ", p.get_str(), " is not an odd prime"));
  }
  if (q < 2 || !IsProbablePrime(q)) {
    return absl::InvalidArgumentError(
        absl::StrCat("q = ", q.get_str(), " is not prime"));
  }
  const BigInt p_minus_1 = p - 1;
  if (!mpz_divisible_p(p_minus_1.get_mpz_t(), q.get_mpz_t())) {
    return absl::InvalidArgumentError("q does not divide p - 1");
  }
  if (g <= 1 || g >= p) {
    return absl::InvalidArgumentError("g must lie in (1, p)");
  }
  BigInt check;
  mpz_powm(check.get_mpz_t(), g.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  if (check != 1) {
    return absl::InvalidArgumentError("g does not have order q");
  }
  return GroupParams(std::move(p), std::move(q), std::move(g));
}

BigInt BigIntFromInt64(int64_t v) {
  const uint64_t magnitude =
      v < 0 ? ~static_cast<uint64_t>(v) + 1 : static_cast<uint64_t>(v);
  BigInt x = FromU64(magnitude);
  if (v < 0) x = -x;
  return x;
}

BigInt GroupParams::ReduceExponent(const BigInt& exponent) const {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), exponent.get_mpz_t(), q_.get_mpz_t());
  return r;
}

BigInt GroupParams::Pow(const BigInt& base, const BigInt& exponent) const {
  const BigInt e = ReduceExponent(exponent);
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), p_.get_mpz_t());
  return r;
}

BigInt GroupParams::Mul(const BigInt& x, const BigInt& y) const {
  BigInt r = x * y;
  mpz_mod(r.get_mpz_t(), r.get_mpz_t(), p_.get_mpz_t());
  return r;
}

BigInt GroupParams::Inverse(const BigInt& x) const {
  BigInt r;
  mpz_invert(r.get_mpz_t(), x.get_mpz_t(), p_.get_mpz_t());
  return r;
}

bool GroupParams::InSubgroup(const BigInt& x) const {
  if (x < 1 || x >= p_) return false;
  BigInt r;
  mpz_powm(r.get_mpz_t(), x.get_mpz_t(), q_.get_mpz_t(), p_.get_mpz_t());
  return r == 1;
}

absl::StatusOr<GroupParams> GroupSetup(int bits, Rng& rng) {
  if (bits != 32 && bits != 64 && bits != 256 && bits != 2048) {
    return absl::InvalidArgumentError(
        absl::StrCat("group size must be 32, 64, 256 or 2048 bits, got ", bits));
  }
  static const std::vector<uint32_t> primes = SmallPrimes();
  // q has bits - 1 bits with the top bit set, so p = 2q + 1 has exactly bits.
  const BigInt span = BigInt(1) << (bits - 2);
  const int attempts = MaxSetupAttempts(bits);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    BigInt q = span + UniformBigBelow(span, rng);
    q |= 1;
    if (!PassesSieve(q, primes)) continue;
    if (!IsProbablePrime(q)) continue;
    BigInt p = 2 * q + 1;
    if (!IsProbablePrime(p)) continue;
    // Squares generate the order-q subgroup; any square other than 1 works.
    for (;;) {
      BigInt h = 2 + UniformBigBelow(p - 3, rng);
      BigInt g = h * h % p;
      if (g != 1) return GroupParams::Create(p, q, g);
    }
  }
  return absl::ResourceExhaustedError(absl::StrCat(
      "no safe prime of ", bits, " bits found in ", attempts, " candidates"));
}

GroupParams TinyTestGroup() { return *GroupParams::Create(23, 11, 4); }

BigInt UniformBigBelow(const BigInt& bound, Rng& rng) {
  const size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const size_t words = (bits + 63) / 64;
  std::vector<uint64_t> limbs(words);
  const int top_bits = static_cast<int>(bits - 64 * (words - 1));
  const uint64_t top_mask =
      top_bits == 64 ? ~uint64_t{0} : (uint64_t{1} << top_bits) - 1;
  BigInt x;
  do {
    for (uint64_t& limb : limbs) limb = rng();
    limbs[words - 1] &= top_mask;  // most significant, least-first order
    mpz_import(x.get_mpz_t(), words, -1, sizeof(uint64_t), 0, 0, limbs.data());
  } while (x >= bound);
  return x;
}

BigInt RandomExponent(const GroupParams& group, Rng& rng) {
  return 1 + UniformBigBelow(group.q() - 1, rng);
}

KeyPair GenerateKeyPair(const GroupParams& group, Rng& rng) {
  KeyPair keys;
  keys.sk = RandomExponent(group, rng);
  keys.pk = group.GPow(keys.sk);
  return keys;
}

Ciphertext EncOne(const GroupParams& group, const BigInt& sk, Rng& rng) {
  const BigInt r = RandomExponent(group, rng);
  const BigInt a = group.GPow(r);
  return {a, group.Pow(a, sk)};
}

Ciphertext Reencrypt(const GroupParams& group, const Ciphertext& ct,
                     const BigInt& r_prime) {
  return {group.Pow(ct.a, r_prime), group.Pow(ct.b, r_prime)};
}

Ciphertext Reencrypt(const GroupParams& group, const Ciphertext& ct, Rng& rng) {
  return Reencrypt(group, ct, RandomExponent(group, rng));
}

Ciphertext AddLayer(const GroupParams& group, const Ciphertext& ct,
                    const BigInt& sk_new, Rng& rng) {
  const Ciphertext fresh = Reencrypt(group, ct, rng);
  return {fresh.a, group.Mul(fresh.b, group.Pow(fresh.a, sk_new))};
}

Ciphertext Fill(const GroupParams& group, const Ciphertext& ct,
                const BigInt& message) {
  return {ct.a, group.Mul(ct.b, message)};
}

Ciphertext PartialDecrypt(const GroupParams& group, const Ciphertext& ct,
                          const BigInt& sk_layer) {
  return {ct.a, group.Mul(ct.b, group.Pow(ct.a, -sk_layer))};
}

Ciphertext Combine(const GroupParams& group,
                   std::span<const Ciphertext> cts) {
  Ciphertext result{1, 1};
  for (const Ciphertext& ct : cts) {
    result.a = group.Mul(result.a, ct.a);
    result.b = group.Mul(result.b, ct.b);
  }
  return result;
}

BigInt DecryptElement(const GroupParams& group, const Ciphertext& ct,
                      const BigInt& sk) {
  return group.Mul(ct.b, group.Pow(ct.a, -sk));
}

absl::StatusOr<int64_t> BoundedDlog(const GroupParams& group, const BigInt& h,
                                    int64_t lo, int64_t hi,
                                    const DlogOptions& options) {
  if (hi < lo) {
    return absl::InvalidArgumentError(
        absl::StrCat("empty window [", lo, ", ", hi, "]"));
  }
  // hi - lo in unsigned arithmetic: the window may straddle zero widely.
  const uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo);
  if (span > static_cast<uint64_t>(options.max_window)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "window [", lo, ", ", hi, "] exceeds the guard of ",
        options.max_window));
  }
  const int64_t width = static_cast<int64_t>(span) + 1;
  if (FromU64(static_cast<uint64_t>(width)) > group.q()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "window of width ", width, " is not smaller than the group order ",
        group.q().get_str(), "; the exponent would be ambiguous"));
  }
  if (!group.InSubgroup(h)) {
    return absl::NotFoundError("element is not in the prime-order subgroup");
  }
  if (width <= 64) return ScanWindow(group, h, lo, width);

  // Shift to y = x - lo in [0, width).
  const BigInt target = group.Mul(h, group.Inverse(group.GPow(lo)));
  std::optional<int64_t> y;
  if (options.method == DlogMethod::kBabyStepGiantStep) {
    y = BabyStepGiantStep(group, target, width);
  } else {
    for (int attempt = 0; attempt < options.kangaroo_attempts && !y; ++attempt) {
      y = Kangaroo(group, target, width,
                   0x6b616e67u + 0x9e3779b97f4a7c15ULL * attempt);
    }
    if (!y) {
      return absl::NotFoundError(absl::StrCat(
          "kangaroo walks found no exponent in [", lo, ", ", hi, "] after ",
          options.kangaroo_attempts, " attempts (the method is probabilistic)"));
    }
  }
  if (!y) {
    return absl::NotFoundError(
        absl::StrCat("no exponent in [", lo, ", ", hi, "]"));
  }
  return lo + *y;
}

std::string ToHex(const BigInt& x) { return x.get_str(16); }

absl::StatusOr<BigInt> ParseHex(std::string_view hex) {
  if (hex.empty() ||
      !std::all_of(hex.begin(), hex.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
               (c >= 'A' && c <= 'F');
      })) {
    return absl::InvalidArgumentError(
        absl::StrCat("not a hex string: '", std::string(hex), "'"));
  }
  BigInt x;
  x.set_str(std::string(hex), 16);
  return x;
}

}  // namespace privagg
