// Copyright 2026 The ldpfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldpfreq/error.hpp"

namespace ldpfreq {

// Field elements are plain integers in [0, q).
using Element = std::uint32_t;

inline constexpr std::uint32_t kMaxModulus = 1u << 16;

constexpr bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> factors;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      factors.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) factors.push_back(n);
  return factors;
}

constexpr std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp,
                                std::uint64_t mod) noexcept {
  std::uint64_t result = 1 % mod;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return result;
}

// Prime field F_q with log/antilog tables over a generator g of F_q^*, so
// that inversion and division are a pair of table lookups.
class FieldTable {
 public:
  // Generator candidates are scanned g = 2, 3, ... in order, which makes the
  // tables a pure function of q.
  static FieldTable make(std::uint32_t q) {
    if (q > kMaxModulus) {
      throw Error(ErrorCode::kModulusTooLarge,
                  "modulus " + std::to_string(q) + " exceeds 2^16");
    }
    if (!is_prime(q)) {
      throw Error(ErrorCode::kNonPrimeModulus,
                  std::to_string(q) + " is not prime");
    }
    FieldTable f;
    f.q_ = q;
    f.generator_ = find_generator(q);
    f.antilog_.resize(q - 1);
    f.log_.assign(q, 0);
    std::uint64_t x = 1;
    for (std::uint32_t i = 0; i + 1 < q; ++i) {
      f.antilog_[i] = static_cast<Element>(x);
      f.log_[x] = i;
      x = x * f.generator_ % q;
    }
    return f;
  }

  std::uint32_t q() const noexcept { return q_; }
  Element generator() const noexcept { return generator_; }
  // A[i] = g^i for i in [0, q-1).
  const std::vector<Element>& antilog() const noexcept { return antilog_; }
  // L[x] for x in [1, q); L[0] is unused and zero.
  const std::vector<std::uint32_t>& log() const noexcept { return log_; }

  Element add(Element a, Element b) const noexcept {
    std::uint32_t s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  Element sub(Element a, Element b) const noexcept {
    return a >= b ? a - b : a + q_ - b;
  }
  Element neg(Element a) const noexcept { return a == 0 ? 0 : q_ - a; }
  Element mul(Element a, Element b) const noexcept {
    return static_cast<Element>(static_cast<std::uint64_t>(a) * b % q_);
  }

  Element inv(Element a) const {
    if (a == 0) throw Error(ErrorCode::kZeroInverse, "zero has no inverse");
    std::uint32_t order = q_ - 1;
    return antilog_[(order - log_[a]) % order];
  }

  Element div(Element a, Element b) const { return mul(a, inv(b)); }

 private:
  FieldTable() = default;

  static Element find_generator(std::uint32_t q) {
    if (q == 2) return 1;
    const std::uint64_t order = q - 1;
    const auto factors = prime_factors(order);
    for (std::uint32_t g = 2; g < q; ++g) {
      bool ok = true;
      for (std::uint64_t r : factors) {
        if (pow_mod(g, order / r, q) == 1) {
          ok = false;
          break;
        }
      }
      if (ok) return g;
    }
    // Unreachable for prime q: F_q^* is cyclic.
    throw Error(ErrorCode::kNonPrimeModulus, "no generator found");
  }

  std::uint32_t q_ = 0;
  Element generator_ = 0;
  std::vector<Element> antilog_;
  std::vector<std::uint32_t> log_;
};

inline FieldTable make_field(std::uint32_t q) { return FieldTable::make(q); }

}  // namespace ldpfreq
