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

// ElGamal-style layered encryption in the order-q subgroup of Z_p^* for a
// safe prime p = 2q + 1.
//
// A ciphertext (a, b) "under key s" satisfies b = a^s * C for a message C;
// C = 1 for the published encryptions of one. Messages are group elements
// g^x, and exponents are only recovered for x in a small window.
//
// Nothing here is constant time. This is a research artifact, not a
// hardened cryptographic library.

#ifndef PRIVAGG_GROUP_H_
#define PRIVAGG_GROUP_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include <gmpxx.h>

#include "absl/status/statusor.h"
#include "privagg/random.h"

namespace privagg {

using BigInt = mpz_class;

// mpz_class has no int64_t constructor on every platform.
BigInt BigIntFromInt64(int64_t v);

class GroupParams {
 public:
  // Validates that p and q are (probable) primes, q divides p - 1, and g
  // generates the order-q subgroup (g != 1, g^q = 1 mod p).
  static absl::StatusOr<GroupParams> Create(BigInt p, BigInt q, BigInt g);

  const BigInt& p() const { return p_; }
  const BigInt& q() const { return q_; }
  const BigInt& g() const { return g_; }
  size_t bits() const { return mpz_sizeinbase(p_.get_mpz_t(), 2); }

  // base^exponent mod p. The exponent may be negative or exceed q; it is
  // reduced mod q, so base must lie in the subgroup.
  BigInt Pow(const BigInt& base, const BigInt& exponent) const;
  BigInt GPow(const BigInt& exponent) const { return Pow(g_, exponent); }
  BigInt GPow(int64_t exponent) const { return GPow(BigIntFromInt64(exponent)); }
  BigInt Mul(const BigInt& x, const BigInt& y) const;
  BigInt Inverse(const BigInt& x) const;

  // Exponent representative in [0, q).
  BigInt ReduceExponent(const BigInt& exponent) const;
  BigInt ReduceExponent(int64_t exponent) const {
    return ReduceExponent(BigIntFromInt64(exponent));
  }

  // x in [1, p) with x^q = 1.
  bool InSubgroup(const BigInt& x) const;

 private:
  GroupParams(BigInt p, BigInt q, BigInt g)
      : p_(std::move(p)), q_(std::move(q)), g_(std::move(g)) {}

  BigInt p_;
  BigInt q_;
  BigInt g_;
};

// Fresh safe-prime group whose modulus has exactly `bits` bits; bits must be
// one of 32, 64 (test sizes), 256 or 2048. Deterministic given the stream.
absl::StatusOr<GroupParams> GroupSetup(int bits, Rng& rng);

// The toy group p = 23, q = 11, g = 4.
GroupParams TinyTestGroup();

// Uniform in [0, bound); bound must be positive.
BigInt UniformBigBelow(const BigInt& bound, Rng& rng);

// Uniform exponent in [1, q - 1].
BigInt RandomExponent(const GroupParams& group, Rng& rng);

struct KeyPair {
  BigInt sk;
  BigInt pk;
};

KeyPair GenerateKeyPair(const GroupParams& group, Rng& rng);

struct Ciphertext {
  BigInt a;
  BigInt b;

  friend bool operator==(const Ciphertext& x, const Ciphertext& y) {
    return x.a == y.a && x.b == y.b;
  }
};

// (g^r, g^{r sk}) for uniform r in [1, q - 1].
Ciphertext EncOne(const GroupParams& group, const BigInt& sk, Rng& rng);

// (a^{r'}, b^{r'}). Preserves b = a^s only for encryptions of one; a filled
// ciphertext would have its message raised to r' as well.
Ciphertext Reencrypt(const GroupParams& group, const Ciphertext& ct, Rng& rng);
Ciphertext Reencrypt(const GroupParams& group, const Ciphertext& ct,
                     const BigInt& r_prime);

// (a^{r'}, b^{r'} a^{r' sk_new}): an encryption of one under s moves to
// s + sk_new.
Ciphertext AddLayer(const GroupParams& group, const Ciphertext& ct,
                    const BigInt& sk_new, Rng& rng);

// (a, b C).
Ciphertext Fill(const GroupParams& group, const Ciphertext& ct,
                const BigInt& message);

// (a, b / a^{sk_layer}).
Ciphertext PartialDecrypt(const GroupParams& group, const Ciphertext& ct,
                          const BigInt& sk_layer);

// Component-wise product; (1, 1) for an empty list.
Ciphertext Combine(const GroupParams& group,
                   std::span<const Ciphertext> cts);

// b / a^sk.
BigInt DecryptElement(const GroupParams& group, const Ciphertext& ct,
                      const BigInt& sk);

enum class DlogMethod {
  // Deterministic, O(sqrt(W)) time and memory.
  kBabyStepGiantStep,
  // Pollard's kangaroo (lambda) method, O(1) memory. Probabilistic: a walk
  // can miss, so it retries with fresh jump functions before giving up.
  kKangaroo,
};

struct DlogOptions {
  DlogMethod method = DlogMethod::kBabyStepGiantStep;
  // Largest accepted hi - lo.
  int64_t max_window = int64_t{1} << 48;
  int kangaroo_attempts = 16;
};

// x in [lo, hi] with g^x = h. NotFound if there is none; InvalidArgument if
// the window exceeds the guard or is at least q wide (x would be ambiguous).
absl::StatusOr<int64_t> BoundedDlog(const GroupParams& group, const BigInt& h,
                                    int64_t lo, int64_t hi,
                                    const DlogOptions& options = {});

// Lower-case big-endian hex without prefix ("0" for zero).
std::string ToHex(const BigInt& x);
absl::StatusOr<BigInt> ParseHex(std::string_view hex);

}  // namespace privagg

#endif  // PRIVAGG_GROUP_H_
