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

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldpfreq/error.hpp"
#include "ldpfreq/hpg.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/projgeom.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

// Public-coin variants. Client and server both derive a prefix w in
// F_q^(t-1) from a public seed; the client sends one field element a (plus a
// block index for the block mechanism) and the server decodes w o a.
//
// Inputs must sit on canonical vectors with a nonzero last coordinate
// (Embedding::kNonzeroLast), so that for any canonical w exactly one a puts
// w o a in S(v), and u* = (0,...,0,1) is never in S(v).

struct SharedRandomness {
  std::vector<Element> w;  // length t-1, all zero or canonical

  bool is_zero() const noexcept {
    for (Element x : w) {
      if (x != 0) return false;
    }
    return true;
  }

  friend bool operator==(const SharedRandomness&, const SharedRandomness&) = default;
};

// Pr[w = 0] for the plain mechanism is p itself.
inline double pg_shared_zero_probability(const PgParams& params) { return params.coef.p; }

// For the block mechanism w = 0 must cover u* in every block, so
// Pr[w = 0] = h p, and each canonical w has probability p (h q + e^eps - 1).
inline double hpg_shared_zero_probability(const HpgParams& params) {
  return params.h * params.coef.p;
}

inline constexpr std::uint64_t kSharedStreamTag = 0x7075622d636f696eULL;

// Pr[w = 0] = zero_probability, otherwise w is uniform over the canonical
// vectors of F_q^(t-1). A pure function of (public_seed, user).
inline SharedRandomness sample_shared(const Geometry& g, double zero_probability,
                                      std::uint64_t public_seed, std::uint64_t user) {
  Rng rng(derive_seed({public_seed, user, kSharedStreamTag}));
  SharedRandomness s;
  if (bernoulli(rng, zero_probability)) {
    s.w.assign(g.t() - 1, 0);
    return s;
  }
  const Geometry prefix_space(g.field(), g.t() - 1);
  const auto c = prefix_space.index_to_point(prefix_space.uniform_point(rng));
  s.w.assign(c.coords().begin(), c.coords().end());
  return s;
}

inline SharedRandomness sample_shared(const PgParams& params, std::uint64_t public_seed,
                                      std::uint64_t user) {
  return sample_shared(params.geometry, pg_shared_zero_probability(params), public_seed, user);
}

inline SharedRandomness sample_shared(const HpgParams& params, std::uint64_t public_seed,
                                      std::uint64_t user) {
  return sample_shared(params.geometry, hpg_shared_zero_probability(params), public_seed, user);
}

namespace internal {

inline void check_shared(const Geometry& g, const SharedRandomness& s) {
  if (s.w.size() + 1 != g.t()) {
    throw Error(ErrorCode::kMalformedMessage, "shared prefix has wrong length");
  }
  for (Element x : s.w) {
    if (x >= g.q()) throw Error(ErrorCode::kMalformedMessage, "prefix entry out of field");
  }
}

inline void check_star(const CanonicalVector& v) {
  if (v[v.size() - 1] == 0) {
    throw Error(ErrorCode::kInputNotStarCanonical, "input's last coordinate is zero");
  }
}

}  // namespace internal

// The unique a with <v, w o a> = 0, for canonical w.
inline Element matching_last_coordinate(const Geometry& g, const CanonicalVector& v,
                                        const SharedRandomness& s) {
  const FieldTable& f = g.field();
  std::uint64_t partial = 0;
  for (std::size_t i = 0; i + 1 < g.t(); ++i) {
    partial = (partial + static_cast<std::uint64_t>(v[i]) * s.w[i]) % f.q();
  }
  return f.mul(f.neg(static_cast<Element>(partial)), f.inv(v[g.t() - 1]));
}

// Exact Pr[w] and Pr[a | v, w]; used to check the samplers and for exact
// distribution comparisons.
template <class Real>
Real shared_probability(const Geometry& g, const Real& zero_probability,
                        const SharedRandomness& s) {
  if (s.is_zero()) return zero_probability;
  const Geometry prefix_space(g.field(), g.t() - 1);
  return (Real(1) - zero_probability) / Real(prefix_space.k_universe());
}

template <class Real>
Real pub_encode_probability(const Geometry& g, const Real& exp_eps, const CanonicalVector& v,
                            const SharedRandomness& s, Element a) {
  if (s.is_zero()) return a == 1 ? Real(1) : Real(0);
  const Real norm = exp_eps + Real(g.q()) - Real(1);
  return a == matching_last_coordinate(g, v, s) ? exp_eps / norm : Real(1) / norm;
}

inline Element pub_encode_point(const Geometry& g, double exp_eps, const CanonicalVector& v,
                                const SharedRandomness& s, Rng& rng) {
  internal::check_shared(g, s);
  internal::check_star(v);
  if (s.is_zero()) return 1;
  const Element match = matching_last_coordinate(g, v, s);
  const std::uint32_t q = g.q();
  if (bernoulli(rng, exp_eps / (exp_eps + q - 1))) return match;
  return g.field().add(match, static_cast<Element>(1 + uniform_below(rng, q - 1)));
}

inline Element pub_encode(const PgParams& params, std::uint64_t value,
                          const SharedRandomness& s, Rng& rng) {
  const Geometry& g = params.geometry;
  return pub_encode_point(g, params.coef.exp_eps, g.index_to_point(params.input_point(value)),
                          s, rng);
}

// Point of w o a. With w = 0 every nonzero a names u*.
inline PointIndex pub_decode(const Geometry& g, const SharedRandomness& s, Element a) {
  internal::check_shared(g, s);
  if (a >= g.q()) throw Error(ErrorCode::kMalformedMessage, "field element out of range");
  std::vector<Element> u(s.w);
  u.push_back(a);
  if (s.is_zero() && a == 0) {
    throw Error(ErrorCode::kMalformedMessage, "message decodes to the zero vector");
  }
  return g.canonical_index(u);
}

// Block mechanism.

struct HpgPubMessage {
  std::uint32_t block = 0;
  Element a = 0;

  friend bool operator==(const HpgPubMessage&, const HpgPubMessage&) = default;
};

// Given w, the pair (j, a) is drawn with weight e^eps for (i, a*) and 1 for
// each of the other h q - 1 pairs; with w = 0 the block is uniform and a = 1.
// Combined with the law of w this reproduces the private-coin pair law.
template <class Real>
Real hpg_pub_encode_probability(const HpgParams& params, const Real& exp_eps,
                                std::uint32_t true_block, const CanonicalVector& v,
                                const SharedRandomness& s, const HpgPubMessage& m) {
  const Real h(params.h);
  if (s.is_zero()) return m.a == 1 ? Real(1) / h : Real(0);
  const Real norm = exp_eps + h * Real(params.q()) - Real(1);
  const bool favored =
      m.block == true_block && m.a == matching_last_coordinate(params.geometry, v, s);
  return favored ? exp_eps / norm : Real(1) / norm;
}

inline HpgPubMessage hpg_pub_encode(const HpgParams& params, std::uint64_t value,
                                    const SharedRandomness& s, Rng& rng) {
  const Geometry& g = params.geometry;
  internal::check_shared(g, s);
  const auto [block, point] = params.input_location(value);
  const CanonicalVector v = g.index_to_point(point);
  internal::check_star(v);
  if (s.is_zero()) {
    return {static_cast<std::uint32_t>(uniform_below(rng, params.h)), 1};
  }
  const Element match = matching_last_coordinate(g, v, s);
  const std::uint64_t q = g.q();
  const double e = params.coef.exp_eps;
  const std::uint64_t pairs = params.h * q;
  if (bernoulli(rng, e / (e + static_cast<double>(pairs) - 1))) return {block, match};
  std::uint64_t pick = uniform_below(rng, pairs - 1);
  const std::uint64_t favored = static_cast<std::uint64_t>(block) * q + match;
  if (pick >= favored) ++pick;
  return {static_cast<std::uint32_t>(pick / q), static_cast<Element>(pick % q)};
}

inline HpgMessage hpg_pub_decode(const HpgParams& params, const SharedRandomness& s,
                                 const HpgPubMessage& m) {
  if (m.block >= params.h) throw Error(ErrorCode::kMalformedMessage, "block out of range");
  return {m.block, pub_decode(params.geometry, s, m.a)};
}

// Payload sizes in bits.
inline unsigned pub_payload_bits(std::uint32_t q) {
  return static_cast<unsigned>(std::bit_width(q - 1));
}

inline unsigned hpg_pub_payload_bits(std::uint32_t h, std::uint32_t q) {
  return static_cast<unsigned>(std::bit_width(h - 1)) + pub_payload_bits(q);
}

}  // namespace ldpfreq
