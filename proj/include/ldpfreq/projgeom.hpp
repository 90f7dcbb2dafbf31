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
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldpfreq/error.hpp"
#include "ldpfreq/ffield.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

// Dense rank of a projective point of P(F_q^t), in [0, k_universe).
using PointIndex = std::uint64_t;

// Number of projective points of P(F_q^m), i.e. (q^m - 1)/(q - 1); zero for
// m = 0. Returns false on overflow past 2^63.
inline bool checked_projective_count(std::uint64_t q, unsigned m,
                                     std::uint64_t& out) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 63;
  std::uint64_t power = 1;
  for (unsigned i = 0; i < m; ++i) {
    if (power > kLimit / q) return false;
    power *= q;
  }
  out = (power - 1) / (q - 1);
  return true;
}

// A nonzero vector of F_q^t whose first nonzero coordinate is 1.
class CanonicalVector {
 public:
  CanonicalVector() = default;

  // Validates; throws NotCanonical.
  static CanonicalVector from_coords(std::vector<Element> coords) {
    std::size_t lead = 0;
    while (lead < coords.size() && coords[lead] == 0) ++lead;
    if (lead == coords.size() || coords[lead] != 1) {
      throw Error(ErrorCode::kNotCanonical,
                  "vector is zero or its first nonzero coordinate is not 1");
    }
    return CanonicalVector(std::move(coords), lead);
  }

  std::span<const Element> coords() const noexcept { return coords_; }
  Element operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::size_t size() const noexcept { return coords_.size(); }
  // Position of the leading 1.
  std::size_t lead() const noexcept { return lead_; }

  friend bool operator==(const CanonicalVector&, const CanonicalVector&) = default;

 private:
  CanonicalVector(std::vector<Element> coords, std::size_t lead)
      : coords_(std::move(coords)), lead_(lead) {}

  friend class Geometry;

  std::vector<Element> coords_;
  std::size_t lead_ = 0;
};

// P(F_q^t) together with the sizes of the hyperplane set system over it:
// every S(v) = {u : <u, v> = 0} holds c_set points and any two distinct
// S(v), S(v') share exactly c_int points.
class Geometry {
 public:
  Geometry(FieldTable field, unsigned t) : field_(std::move(field)), t_(t) {
    if (t < 1) throw Error(ErrorCode::kInvalidArgument, "dimension t must be >= 1");
    const std::uint64_t q = field_.q();
    if (!checked_projective_count(q, t, k_universe_)) {
      throw Error(ErrorCode::kParameterOverflow,
                  "q^t exceeds 2^63 for q=" + std::to_string(q) +
                      ", t=" + std::to_string(t));
    }
    checked_projective_count(q, t - 1, c_set_);
    c_int_ = 0;
    if (t >= 2) checked_projective_count(q, t - 2, c_int_);
    powers_.resize(t + 1);
    powers_[0] = 1;
    for (unsigned i = 1; i <= t; ++i) powers_[i] = powers_[i - 1] * q;
  }

  Geometry(std::uint32_t q, unsigned t) : Geometry(make_field(q), t) {}

  const FieldTable& field() const noexcept { return field_; }
  std::uint32_t q() const noexcept { return field_.q(); }
  unsigned t() const noexcept { return t_; }
  std::uint64_t k_universe() const noexcept { return k_universe_; }
  std::uint64_t c_set() const noexcept { return c_set_; }
  std::uint64_t c_int() const noexcept { return c_int_; }
  // q^i for i in [0, t].
  std::uint64_t power(unsigned i) const noexcept { return powers_[i]; }

  // Points whose leading 1 sits at position j form the contiguous block
  // [block_offset(j), block_offset(j) + q^(t-1-j)); inside the block the
  // coordinates after the leading 1 are read as a base-q number with the
  // leftmost digit most significant.
  std::uint64_t block_offset(std::size_t j) const noexcept {
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < j; ++i) offset += powers_[t_ - 1 - i];
    return offset;
  }

  CanonicalVector index_to_point(PointIndex index) const {
    if (index >= k_universe_) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "point index " + std::to_string(index) + " >= " +
                      std::to_string(k_universe_));
    }
    std::vector<Element> coords(t_, 0);
    std::size_t lead = 0;
    std::uint64_t rest = index;
    while (rest >= powers_[t_ - 1 - lead]) {
      rest -= powers_[t_ - 1 - lead];
      ++lead;
    }
    coords[lead] = 1;
    for (std::size_t i = t_; i-- > lead + 1;) {
      coords[i] = static_cast<Element>(rest % q());
      rest /= q();
    }
    return CanonicalVector(std::move(coords), lead);
  }

  PointIndex point_to_index(const CanonicalVector& v) const {
    check_length(v.size());
    return rank_canonical(v.coords(), v.lead());
  }

  // Accepts any coordinate span and validates canonical form.
  PointIndex point_to_index(std::span<const Element> coords) const {
    check_length(coords.size());
    std::size_t lead = 0;
    while (lead < coords.size() && coords[lead] == 0) ++lead;
    if (lead == coords.size() || coords[lead] != 1) {
      throw Error(ErrorCode::kNotCanonical,
                  "vector is zero or its first nonzero coordinate is not 1");
    }
    return rank_canonical(coords, lead);
  }

  // Scales a nonzero vector so its first nonzero entry becomes 1.
  CanonicalVector canonicalize(std::span<const Element> coords) const {
    check_length(coords.size());
    std::size_t lead = 0;
    while (lead < coords.size() && coords[lead] == 0) ++lead;
    if (lead == coords.size()) {
      throw Error(ErrorCode::kZeroVector, "cannot canonicalize the zero vector");
    }
    const Element scale = field_.inv(coords[lead]);
    std::vector<Element> out(coords.size(), 0);
    for (std::size_t i = lead; i < coords.size(); ++i) {
      out[i] = field_.mul(coords[i], scale);
    }
    return CanonicalVector(std::move(out), lead);
  }

  PointIndex canonical_index(std::span<const Element> coords) const {
    return point_to_index(canonicalize(coords));
  }

  Element inner_product(std::span<const Element> u,
                        std::span<const Element> v) const {
    check_length(u.size());
    check_length(v.size());
    std::uint64_t acc = 0;
    const std::uint64_t q = field_.q();
    for (std::size_t i = 0; i < u.size(); ++i) {
      acc = (acc + static_cast<std::uint64_t>(u[i]) * v[i]) % q;
    }
    return static_cast<Element>(acc);
  }

  // S(v) by exhaustive scan, ascending. O(k t); meant for reference decoding
  // and tests.
  std::vector<PointIndex> subspace_members(const CanonicalVector& v) const {
    std::vector<PointIndex> members;
    members.reserve(c_set_);
    for (PointIndex i = 0; i < k_universe_; ++i) {
      if (inner_product(index_to_point(i).coords(), v.coords()) == 0) {
        members.push_back(i);
      }
    }
    return members;
  }

  PointIndex uniform_point(Rng& rng) const { return uniform_below(rng, k_universe_); }

 private:
  void check_length(std::size_t n) const {
    if (n != t_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vector length " + std::to_string(n) + " != t=" + std::to_string(t_));
    }
  }

  PointIndex rank_canonical(std::span<const Element> coords, std::size_t lead) const {
    std::uint64_t suffix = 0;
    for (std::size_t i = lead + 1; i < t_; ++i) {
      suffix = suffix * q() + coords[i];
    }
    return block_offset(lead) + suffix;
  }

  FieldTable field_;
  unsigned t_;
  std::uint64_t k_universe_ = 0;
  std::uint64_t c_set_ = 0;
  std::uint64_t c_int_ = 0;
  std::vector<std::uint64_t> powers_;
};

// Uniform sampler over the points of S(v). Uses the fixed kernel basis
// {e_i - v_i e_lead : i != lead} of {u : <u, v> = 0}: a uniform nonzero
// coefficient vector gives a uniform nonzero kernel vector, and each
// projective point has exactly q - 1 such preimages.
class SubspaceSampler {
 public:
  SubspaceSampler(const Geometry& geometry, const CanonicalVector& v)
      : geometry_(&geometry), v_(v) {
    if (geometry.t() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "subspace sampling needs t >= 2");
    }
  }

  PointIndex sample_in(Rng& rng) const {
    const Geometry& g = *geometry_;
    const FieldTable& f = g.field();
    const unsigned t = g.t();
    const std::uint64_t nonzero = g.power(t - 1) - 1;
    std::uint64_t r = 1 + uniform_below(rng, nonzero);
    std::vector<Element> u(t, 0);
    Element lead_value = 0;
    for (std::size_t i = t; i-- > 0;) {
      if (i == v_.lead()) continue;
      const Element c = static_cast<Element>(r % g.q());
      r /= g.q();
      u[i] = c;
      lead_value = f.sub(lead_value, f.mul(c, v_[i]));
    }
    u[v_.lead()] = lead_value;
    return g.canonical_index(u);
  }

  // Rejection over uniform points; expected iterations k/(k - c_set).
  PointIndex sample_out(Rng& rng) const {
    const Geometry& g = *geometry_;
    for (;;) {
      const PointIndex i = g.uniform_point(rng);
      if (g.inner_product(g.index_to_point(i).coords(), v_.coords()) != 0) return i;
    }
  }

  const CanonicalVector& center() const noexcept { return v_; }

 private:
  const Geometry* geometry_;
  CanonicalVector v_;
};

inline PointIndex sample_in_subspace(const Geometry& g, const CanonicalVector& v,
                                     Rng& rng) {
  return SubspaceSampler(g, v).sample_in(rng);
}

inline PointIndex sample_out_subspace(const Geometry& g, const CanonicalVector& v,
                                      Rng& rng) {
  return SubspaceSampler(g, v).sample_out(rng);
}

}  // namespace ldpfreq
