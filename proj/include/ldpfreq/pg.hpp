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

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldpfreq/error.hpp"
#include "ldpfreq/ffield.hpp"
#include "ldpfreq/projgeom.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

// How logical input values m in [0, k_logical) are placed on points.
enum class Embedding {
  // m is the point index itself.
  kDense,
  // Only canonical vectors with a nonzero last coordinate are used (needed by
  // the public-coin protocols). m = 0 is u* = (0,...,0,1); m >= 1 is the
  // canonical prefix of rank (m-1)/(q-1) extended by last coordinate
  // 1 + (m-1) mod (q-1).
  kNonzeroLast,
};

// Number of inputs an embedding can address in P(F_q^t).
inline std::uint64_t embedding_capacity(const Geometry& g, Embedding e) {
  return e == Embedding::kDense ? g.k_universe() : g.power(g.t() - 1);
}

inline PointIndex embed_input(const Geometry& g, Embedding e, std::uint64_t m) {
  if (e == Embedding::kDense) return m;
  if (m == 0) return g.k_universe() - 1;
  const std::uint64_t q = g.q();
  // Appending a coordinate w to a canonical vector of rank r gives rank q*r + w.
  return q * ((m - 1) / (q - 1)) + 1 + (m - 1) % (q - 1);
}

// Smallest prime q >= x. A relative slack of 1e-9 absorbs rounding in
// targets such as e^ln(2) + 1 that are meant to be exact integers.
inline std::uint32_t smallest_prime_at_least(double x) {
  if (!(x <= static_cast<double>(kMaxModulus))) {
    throw Error(ErrorCode::kParameterOverflow, "target field size exceeds 2^16");
  }
  const double target = x * (1 - 1e-9);
  std::uint32_t c = target <= 2 ? 2 : static_cast<std::uint32_t>(std::ceil(target));
  while (!is_prime(c)) ++c;
  if (c > kMaxModulus) throw Error(ErrorCode::kParameterOverflow, "no prime field <= 2^16");
  return c;
}

// Largest prime strictly below x (x > 2), with the same rounding slack as
// smallest_prime_at_least.
inline std::uint32_t largest_prime_below(double x) {
  if (!(x > 2.0)) throw Error(ErrorCode::kInvalidArgument, "no prime below 2");
  if (!(x <= static_cast<double>(kMaxModulus) + 1)) {
    throw Error(ErrorCode::kParameterOverflow, "target field size exceeds 2^16");
  }
  const double target = x * (1 - 1e-9);
  std::uint32_t c = std::max(2u, static_cast<std::uint32_t>(std::ceil(target)) - 1);
  while (!is_prime(c)) --c;
  return c;
}

// Message probability p and estimator weights (alpha, beta) for the
// two-valued law over P(F_q^t): points of S(v) get e^eps * p, the rest p.
// Real may be double or an exact rational type.
template <class Real>
struct PgCoefficients {
  Real exp_eps;
  Real p;
  Real alpha;
  Real beta;

  static PgCoefficients compute(const Real& exp_eps, std::uint64_t k,
                                std::uint64_t c_set, std::uint64_t c_int) {
    const Real e1 = exp_eps - Real(1);
    const Real cs = Real(c_set);
    const Real ci = Real(c_int);
    const Real denom = e1 * cs + Real(k);
    PgCoefficients c{exp_eps, Real(1) / denom, Real(0), Real(0)};
    c.alpha = denom / (e1 * (cs - ci));
    c.beta = -(e1 * ci + cs) / (e1 * (cs - ci));
    return c;
  }

  static PgCoefficients compute(const Real& exp_eps, const Geometry& g) {
    return compute(exp_eps, g.k_universe(), g.c_set(), g.c_int());
  }
};

struct PgOverrides {
  std::optional<std::uint32_t> q;
  std::optional<unsigned> t;
};

struct PgParams {
  double epsilon = 0;
  Geometry geometry;
  std::uint64_t k_logical = 0;
  Embedding embedding = Embedding::kDense;
  PgCoefficients<double> coef;

  std::uint64_t k_universe() const noexcept { return geometry.k_universe(); }
  double p() const noexcept { return coef.p; }
  double alpha() const noexcept { return coef.alpha; }
  double beta() const noexcept { return coef.beta; }

  PointIndex input_point(std::uint64_t value) const {
    if (value >= k_logical) {
      throw Error(ErrorCode::kInputOutOfRange,
                  "input " + std::to_string(value) + " >= k=" + std::to_string(k_logical));
    }
    return embed_input(geometry, embedding, value);
  }
};

// Smallest t >= t_min whose embedding capacity reaches k.
inline unsigned smallest_dimension(std::uint32_t q, std::uint64_t k, Embedding e,
                                   unsigned t_min = 2) {
  for (unsigned t = t_min;; ++t) {
    std::uint64_t count = 0;
    if (!checked_projective_count(q, t, count)) {
      throw Error(ErrorCode::kParameterOverflow,
                  "no t with q^t <= 2^63 covers k=" + std::to_string(k));
    }
    // q^(t-1) = count_t - count_(t-1).
    std::uint64_t previous = 0;
    checked_projective_count(q, t - 1, previous);
    const std::uint64_t capacity = e == Embedding::kDense ? count : count - previous;
    if (capacity >= k) return t;
  }
}

inline PgParams make_pg_params(double epsilon, std::uint64_t k_logical, Geometry geometry,
                               Embedding embedding = Embedding::kDense) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (geometry.t() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "projective geometry mechanism needs t >= 2");
  }
  if (embedding_capacity(geometry, embedding) < k_logical) {
    throw Error(ErrorCode::kNoFeasibleParams,
                "universe of q=" + std::to_string(geometry.q()) + ", t=" +
                    std::to_string(geometry.t()) + " cannot hold k=" +
                    std::to_string(k_logical));
  }
  auto coef = PgCoefficients<double>::compute(std::exp(epsilon), geometry);
  return PgParams{epsilon, std::move(geometry), k_logical, embedding, coef};
}

// q is the smallest prime >= e^eps + 1 (so that c_set / c_int, slightly
// above q, does not fall below e^eps + 1) and t the smallest dimension whose
// universe holds k_logical, unless pinned through overrides.
inline PgParams derive_pg_params(double epsilon, std::uint64_t k_logical,
                                 const PgOverrides& overrides = {},
                                 Embedding embedding = Embedding::kDense) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (k_logical < 2) throw Error(ErrorCode::kInvalidArgument, "k must be >= 2");
  const std::uint32_t q = overrides.q ? *overrides.q : smallest_prime_at_least(std::exp(epsilon) + 1);
  const unsigned t = overrides.t ? *overrides.t : smallest_dimension(q, k_logical, embedding);
  return make_pg_params(epsilon, k_logical, Geometry(q, t), embedding);
}

// Integer message counts over the point universe. Shards merge by addition.
class CountVector {
 public:
  CountVector() = default;
  explicit CountVector(std::uint64_t universe) : counts_(universe, 0) {}

  void add(PointIndex u, std::uint64_t times = 1) {
    if (u >= counts_.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "message " + std::to_string(u) + " outside universe of " +
                      std::to_string(counts_.size()));
    }
    counts_[u] += times;
    n_ += times;
  }

  void merge(const CountVector& other) {
    if (other.counts_.size() != counts_.size()) {
      throw Error(ErrorCode::kUniverseMismatch, "count vectors have different universes");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    n_ += other.n_;
  }

  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t operator[](std::size_t i) const noexcept { return counts_[i]; }
  std::uint64_t universe() const noexcept { return counts_.size(); }
  std::uint64_t n() const noexcept { return n_; }

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_ = 0;
};

inline CountVector accumulate(std::uint64_t universe, std::span<const PointIndex> messages) {
  CountVector y(universe);
  for (PointIndex u : messages) y.add(u);
  return y;
}

inline CountVector merge(const CountVector& a, const CountVector& b) {
  CountVector out = a;
  out.merge(b);
  return out;
}

using EstimateVector = std::vector<double>;

// Flips the in/out coin with probability e^eps * p * c_set, then samples
// uniformly on the chosen side.
inline PointIndex pg_encode(const PgParams& params, std::uint64_t value, Rng& rng) {
  const Geometry& g = params.geometry;
  const SubspaceSampler sampler(g, g.index_to_point(params.input_point(value)));
  const double in_mass = params.coef.exp_eps * params.coef.p * static_cast<double>(g.c_set());
  return bernoulli(rng, in_mass) ? sampler.sample_in(rng) : sampler.sample_out(rng);
}

inline constexpr std::uint64_t kMaxExactUniverse = 100000;

// Exact output law for an input placed at point v: e^eps * p on S(v), p
// elsewhere.
template <class Real>
std::vector<Real> pg_message_distribution(const Geometry& g, PointIndex v,
                                          const PgCoefficients<Real>& coef) {
  if (g.k_universe() > kMaxExactUniverse) {
    throw Error(ErrorCode::kTooLargeForExactMode,
                "universe too large for exact enumeration");
  }
  const CanonicalVector center = g.index_to_point(v);
  std::vector<Real> dist(g.k_universe(), coef.p);
  const Real favored = coef.exp_eps * coef.p;
  for (PointIndex u = 0; u < g.k_universe(); ++u) {
    if (g.inner_product(g.index_to_point(u).coords(), center.coords()) == 0) {
      dist[u] = favored;
    }
  }
  return dist;
}

inline std::vector<double> pg_message_distribution(const PgParams& params,
                                                   std::uint64_t value) {
  return pg_message_distribution(params.geometry, params.input_point(value), params.coef);
}

// For each target point v, the sum of y over S(v), by walking S(v) directly:
// every point of S(v) is the canonical form of a kernel combination with a
// canonical coefficient vector. O(|targets| * c_set * t).
template <class T>
std::vector<T> subset_sums_naive(const Geometry& g, std::span<const T> y,
                                 std::span<const PointIndex> targets) {
  if (y.size() != g.k_universe()) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match universe");
  }
  const FieldTable& f = g.field();
  const unsigned t = g.t();
  const Geometry coeff_space(f, t - 1);
  std::vector<T> sums(targets.size(), T{});
  std::vector<Element> u(t);
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const CanonicalVector v = g.index_to_point(targets[n]);
    T acc{};
    for (PointIndex r = 0; r < coeff_space.k_universe(); ++r) {
      const CanonicalVector c = coeff_space.index_to_point(r);
      Element lead_value = 0;
      std::size_t ci = 0;
      for (std::size_t i = 0; i < t; ++i) {
        if (i == v.lead()) continue;
        u[i] = c[ci++];
        lead_value = f.sub(lead_value, f.mul(u[i], v[i]));
      }
      u[v.lead()] = lead_value;
      acc += y[g.canonical_index(u)];
    }
    sums[n] = acc;
  }
  return sums;
}

namespace internal {

// Rank of a point of P(F_q^m) or zero vector as used in the decoder tables:
// 0 is the zero vector, 1 + r the canonical point of rank r.
struct ReducedSuffix {
  std::uint64_t id;     // in {0} u {1 + rank}
  Element inv_scale;    // 1 / (first nonzero entry), 1 for the zero vector
};

// For every vector s of F_q^m given by its base-q value, the canonical (or
// zero) representative id and the inverse of its leading entry.
inline std::vector<ReducedSuffix> reduce_table(const Geometry& g, unsigned m) {
  const FieldTable& f = g.field();
  const std::uint64_t q = g.q();
  const std::uint64_t size = g.power(m);
  std::vector<ReducedSuffix> table(size);
  table[0] = {0, 1};
  std::vector<Element> digits(m);
  for (std::uint64_t value = 1; value < size; ++value) {
    std::uint64_t rest = value;
    for (unsigned i = m; i-- > 0;) {
      digits[i] = static_cast<Element>(rest % q);
      rest /= q;
    }
    unsigned lead = 0;
    while (digits[lead] == 0) ++lead;
    const Element inv = f.inv(digits[lead]);
    // Block offset of lead inside P(F_q^m) plus suffix value after scaling.
    std::uint64_t offset = 0;
    for (unsigned i = 0; i < lead; ++i) offset += g.power(m - 1 - i);
    std::uint64_t suffix = 0;
    for (unsigned i = lead + 1; i < m; ++i) suffix = suffix * q + f.mul(digits[i], inv);
    table[value] = {1 + offset + suffix, inv};
  }
  return table;
}

}  // namespace internal

// All subset sums F(v) = sum_{u in S(v)} y_u at once, by dynamic programming
// over coordinate prefixes. For a prefix a of length j (zero or canonical),
// a suffix direction b of length t-j (zero or canonical) and z in F_q,
//   f_j(a, b, z) = sum of y_u over u with prefix a and <suffix(u), b> = z.
// Extending a by one coordinate w moves to level j+1 with b's tail and
// target z - w*b_1; a non-canonical tail with leading entry c folds onto its
// canonical form via f(a, b, z) = f(a, b/c, z/c). Only two levels are live.
// Returns F for every point, indexed by point rank. O(k t q) time.
template <class T>
std::vector<T> subset_sums_dp(const Geometry& g, std::span<const T> y) {
  if (y.size() != g.k_universe()) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match universe");
  }
  const unsigned t = g.t();
  const std::uint64_t q = g.q();
  const FieldTable& f = g.field();
  auto canonical_count = [&](unsigned m) { return (g.power(m) - 1) / (q - 1); };

  // Level j = t: f_t(a, empty, z) = y_a when a != 0 and z = 0.
  std::vector<T> next;  // level j+1, layout [(a * nb_next + b) * q + z]
  std::uint64_t nb_next = 1;
  bool next_is_base = true;

  std::vector<T> cur;
  for (unsigned j = t; j-- > 0;) {
    const unsigned m = t - j;
    const std::uint64_t na = 1 + canonical_count(j);
    const std::uint64_t nb = 1 + canonical_count(m);
    const std::uint64_t zcount = (j == 0) ? 1 : q;  // only z = 0 is needed at the top
    const std::uint64_t zero_prefix_ext = canonical_count(j + 1);  // id of 0...01
    const std::uint64_t tail_split = g.power(m - 1);
    const auto reduce = internal::reduce_table(g, m - 1);

    auto next_at = [&](std::uint64_t a, std::uint64_t b, Element z) -> T {
      if (next_is_base) return (z == 0 && a != 0) ? y[a - 1] : T{};
      return next[(a * nb_next + b) * q + z];
    };

    cur.assign(na * nb * zcount, T{});
    for (std::uint64_t bi = 0; bi < nb; ++bi) {
      Element b1 = 0;
      internal::ReducedSuffix tail{0, 1};
      if (bi != 0) {
        const std::uint64_t r = bi - 1;
        if (r < tail_split) {
          b1 = 1;
          tail = reduce[r];
        } else {
          tail = {1 + (r - tail_split), 1};
        }
      }
      for (std::uint64_t ai = 0; ai < na; ++ai) {
        T* out = &cur[(ai * nb + bi) * zcount];
        for (std::uint64_t z = 0; z < zcount; ++z) {
          T acc{};
          if (ai == 0) {
            acc += next_at(0, tail.id, f.mul(static_cast<Element>(z), tail.inv_scale));
            const Element z1 = f.sub(static_cast<Element>(z), b1);
            acc += next_at(zero_prefix_ext, tail.id, f.mul(z1, tail.inv_scale));
          } else {
            const std::uint64_t base = 1 + q * (ai - 1);
            for (std::uint64_t w = 0; w < q; ++w) {
              const Element zw = f.sub(static_cast<Element>(z),
                                       f.mul(static_cast<Element>(w), b1));
              acc += next_at(base + w, tail.id, f.mul(zw, tail.inv_scale));
            }
          }
          out[z] = std::move(acc);
        }
      }
    }
    next.swap(cur);
    nb_next = nb;
    next_is_base = false;
  }
  // Level 0 has a single prefix (empty); entry 1 + v holds F(v).
  std::vector<T> sums(g.k_universe());
  for (std::uint64_t v = 0; v < g.k_universe(); ++v) sums[v] = std::move(next[1 + v]);
  return sums;
}

// Points carrying the k_logical inputs, in input order.
inline std::vector<PointIndex> pg_input_points(const PgParams& params) {
  std::vector<PointIndex> points(params.k_logical);
  for (std::uint64_t m = 0; m < params.k_logical; ++m) {
    points[m] = embed_input(params.geometry, params.embedding, m);
  }
  return points;
}

namespace internal {

inline EstimateVector apply_pg_estimator(const PgParams& params,
                                         std::span<const std::uint64_t> sums,
                                         std::uint64_t n) {
  EstimateVector est(sums.size());
  const double beta_n = params.coef.beta * static_cast<double>(n);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    est[i] = params.coef.alpha * static_cast<double>(sums[i]) + beta_n;
  }
  return est;
}

inline void check_universe(const PgParams& params, const CountVector& y) {
  if (y.universe() != params.k_universe()) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match universe");
  }
}

}  // namespace internal

inline std::vector<std::uint64_t> pg_subset_sums_naive(const PgParams& params,
                                                       const CountVector& y) {
  internal::check_universe(params, y);
  const auto targets = pg_input_points(params);
  return subset_sums_naive<std::uint64_t>(params.geometry, y.counts(), targets);
}

inline std::vector<std::uint64_t> pg_subset_sums_dp(const PgParams& params,
                                                    const CountVector& y) {
  internal::check_universe(params, y);
  const auto all = subset_sums_dp<std::uint64_t>(params.geometry, y.counts());
  if (params.embedding == Embedding::kDense) {
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(params.k_logical)};
  }
  std::vector<std::uint64_t> sums(params.k_logical);
  for (std::uint64_t m = 0; m < params.k_logical; ++m) {
    sums[m] = all[embed_input(params.geometry, params.embedding, m)];
  }
  return sums;
}

inline EstimateVector pg_decode_naive(const PgParams& params, const CountVector& y) {
  return internal::apply_pg_estimator(params, pg_subset_sums_naive(params, y), y.n());
}

inline EstimateVector pg_decode_dp(const PgParams& params, const CountVector& y) {
  return internal::apply_pg_estimator(params, pg_subset_sums_dp(params, y), y.n());
}

// Single-user variance of the estimate at the user's own coordinate,
// (alpha + beta - 1)(1 - beta), and at any other coordinate, -beta(alpha + beta).
template <class Real>
Real pg_own_variance(const PgCoefficients<Real>& c) {
  return (c.alpha + c.beta - Real(1)) * (Real(1) - c.beta);
}

template <class Real>
Real pg_cross_variance(const PgCoefficients<Real>& c) {
  return -c.beta * (c.alpha + c.beta);
}

// Total squared-error bound in ratio form with z = c_set / c_int:
//   n e^eps z^2 / ((e^eps-1)^2 (z-1)) + n (k-1) ((e^eps-1) + z)^2 / ((e^eps-1)^2 (z-1)),
// where k counts the coordinates that are reported.
inline double pg_total_variance_bound(const PgParams& params, std::uint64_t n) {
  const Geometry& g = params.geometry;
  if (g.c_int() == 0) {
    throw Error(ErrorCode::kDegenerateIntersection,
                "ratio form needs c_int > 0 (t >= 3)");
  }
  const double e = params.coef.exp_eps;
  const double e1 = e - 1;
  const double z = static_cast<double>(g.c_set()) / static_cast<double>(g.c_int());
  const double nn = static_cast<double>(n);
  const double k = static_cast<double>(params.k_logical);
  return (nn * e * z * z + nn * (k - 1) * (e1 + z) * (e1 + z)) / (e1 * e1 * (z - 1));
}

// Per-coordinate MSE bound. For t = 2 the intersection is empty and the
// exact variance expression is returned instead of the ratio bound.
inline double pg_variance_bound(const PgParams& params, std::uint64_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  const double k = static_cast<double>(params.k_logical);
  if (params.geometry.c_int() == 0) {
    const double nn = static_cast<double>(n);
    return nn * (pg_own_variance(params.coef) + (k - 1) * pg_cross_variance(params.coef)) / k;
  }
  return pg_total_variance_bound(params, n) / k;
}

// The familiar 4 e^eps / (e^eps - 1)^2 per-user term.
inline double optimal_variance_term(double epsilon) {
  const double e = std::exp(epsilon);
  return 4 * e / ((e - 1) * (e - 1));
}

}  // namespace ldpfreq
