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
#include "ldpfreq/pg.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

// PI-RAPPOR output law: messages (a, b) in F_q^t x F_q, favored set
// S(v) = {(a, b) : <a, v> + b = 0} of size q^t.
template <class Real>
struct PiRapporCoefficients {
  Real exp_eps;
  Real p;
  Real alpha;
  Real beta;

  static PiRapporCoefficients compute(const Real& exp_eps, std::uint64_t q, unsigned t) {
    Real qt(1);
    for (unsigned i = 0; i < t; ++i) qt *= Real(q);
    const Real rq(q);
    const Real e1 = exp_eps - Real(1);
    PiRapporCoefficients c{exp_eps, Real(0), Real(0), Real(0)};
    c.p = Real(1) / (exp_eps * qt + (rq - Real(1)) * qt);
    c.alpha = (exp_eps * rq + (rq - Real(1)) * rq) / (e1 * (rq - Real(1)));
    c.beta = -(exp_eps + rq - Real(1)) / (e1 * (rq - Real(1)));
    return c;
  }
};

struct PiRapporMessage {
  std::vector<Element> a;
  Element b = 0;

  friend bool operator==(const PiRapporMessage&, const PiRapporMessage&) = default;
};

struct PiRapporParams {
  double epsilon = 0;
  FieldTable field;
  unsigned t = 0;
  std::uint64_t k_logical = 0;
  std::uint64_t q_pow_t = 0;
  PiRapporCoefficients<double> coef;

  std::uint32_t q() const noexcept { return field.q(); }
  std::uint64_t universe() const noexcept { return q_pow_t * q(); }

  // Base-q digits of v, most significant first.
  std::vector<Element> input_vector(std::uint64_t value) const {
    if (value >= k_logical) {
      throw Error(ErrorCode::kInputOutOfRange,
                  "input " + std::to_string(value) + " >= k=" + std::to_string(k_logical));
    }
    std::vector<Element> v(t);
    for (unsigned i = t; i-- > 0;) {
      v[i] = static_cast<Element>(value % q());
      value /= q();
    }
    return v;
  }

  std::uint64_t message_index(const PiRapporMessage& m) const {
    if (m.a.size() != t) throw Error(ErrorCode::kMalformedMessage, "wrong vector length");
    std::uint64_t index = 0;
    for (Element x : m.a) {
      if (x >= q()) throw Error(ErrorCode::kMalformedMessage, "coordinate out of field");
      index = index * q() + x;
    }
    if (m.b >= q()) throw Error(ErrorCode::kMalformedMessage, "coordinate out of field");
    return index * q() + m.b;
  }

  PiRapporMessage message_at(std::uint64_t index) const {
    if (index >= universe()) throw Error(ErrorCode::kIndexOutOfRange, "message index");
    PiRapporMessage m;
    m.b = static_cast<Element>(index % q());
    index /= q();
    m.a.resize(t);
    for (unsigned i = t; i-- > 0;) {
      m.a[i] = static_cast<Element>(index % q());
      index /= q();
    }
    return m;
  }
};

struct PiRapporOverrides {
  std::optional<std::uint32_t> q;
  std::optional<unsigned> t;
};

inline PiRapporParams make_pirappor_params(double epsilon, std::uint64_t k_logical,
                                           std::uint32_t q, unsigned t) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (t < 1) throw Error(ErrorCode::kInvalidArgument, "t must be >= 1");
  FieldTable field = make_field(q);
  std::uint64_t qt = 1;
  for (unsigned i = 0; i < t; ++i) {
    if (qt > (std::uint64_t{1} << 62) / q) {
      throw Error(ErrorCode::kParameterOverflow, "q^(t+1) exceeds 2^63");
    }
    qt *= q;
  }
  if (qt < k_logical) {
    throw Error(ErrorCode::kNoFeasibleParams, "q^t smaller than k");
  }
  auto coef = PiRapporCoefficients<double>::compute(std::exp(epsilon), q, t);
  return PiRapporParams{epsilon, std::move(field), t, k_logical, qt, coef};
}

// q is the largest prime below e^eps + 1, t the smallest with q^t >= k.
inline PiRapporParams derive_pirappor_params(double epsilon, std::uint64_t k_logical,
                                             const PiRapporOverrides& overrides = {}) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (k_logical < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const std::uint32_t q =
      overrides.q ? *overrides.q : largest_prime_below(std::exp(epsilon) + 1);
  unsigned t = 1;
  if (overrides.t) {
    t = *overrides.t;
  } else {
    std::uint64_t qt = q;
    while (qt < k_logical) {
      if (qt > (std::uint64_t{1} << 62) / q) {
        throw Error(ErrorCode::kParameterOverflow, "q^t overflows before reaching k");
      }
      qt *= q;
      ++t;
    }
  }
  return make_pirappor_params(epsilon, k_logical, q, t);
}

inline Element pirappor_dot(const FieldTable& f, std::span<const Element> a,
                            std::span<const Element> v) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc = (acc + static_cast<std::uint64_t>(a[i]) * v[i]) % f.q();
  }
  return static_cast<Element>(acc);
}

// Samples the output law directly: a is always uniform; b lands on -<a, v>
// with probability e^eps * p * q^t and otherwise on one of the other q - 1
// values uniformly.
inline PiRapporMessage pirappor_encode(const PiRapporParams& params, std::uint64_t value,
                                       Rng& rng) {
  const auto v = params.input_vector(value);
  const FieldTable& f = params.field;
  PiRapporMessage m;
  m.a.resize(params.t);
  for (auto& x : m.a) x = static_cast<Element>(uniform_below(rng, f.q()));
  const Element root = f.neg(pirappor_dot(f, m.a, v));
  const double in_mass =
      params.coef.exp_eps * params.coef.p * static_cast<double>(params.q_pow_t);
  if (bernoulli(rng, in_mass)) {
    m.b = root;
  } else {
    m.b = f.add(root, static_cast<Element>(1 + uniform_below(rng, f.q() - 1)));
  }
  return m;
}

template <class Real>
std::vector<Real> pirappor_message_distribution(const PiRapporParams& params,
                                                std::uint64_t value,
                                                const PiRapporCoefficients<Real>& coef) {
  if (params.universe() > kMaxExactUniverse) {
    throw Error(ErrorCode::kTooLargeForExactMode, "universe too large for exact enumeration");
  }
  const auto v = params.input_vector(value);
  std::vector<Real> dist(params.universe(), coef.p);
  const Real favored = coef.exp_eps * coef.p;
  for (std::uint64_t i = 0; i < params.universe(); ++i) {
    const PiRapporMessage m = params.message_at(i);
    if (params.field.add(pirappor_dot(params.field, m.a, v), m.b) == 0) dist[i] = favored;
  }
  return dist;
}

// Sum over S(v) for each v in [0, k): O(k q^t t).
template <class T>
std::vector<T> pirappor_subset_sums_naive(const PiRapporParams& params, std::span<const T> y) {
  if (y.size() != params.universe()) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match universe");
  }
  const FieldTable& f = params.field;
  std::vector<T> sums(params.k_logical, T{});
  std::vector<Element> a(params.t);
  for (std::uint64_t value = 0; value < params.k_logical; ++value) {
    const auto v = params.input_vector(value);
    T acc{};
    for (std::uint64_t ai = 0; ai < params.q_pow_t; ++ai) {
      std::uint64_t rest = ai;
      for (unsigned i = params.t; i-- > 0;) {
        a[i] = static_cast<Element>(rest % f.q());
        rest /= f.q();
      }
      acc += y[ai * f.q() + f.neg(pirappor_dot(f, a, v))];
    }
    sums[value] = acc;
  }
  return sums;
}

// Same sums by dynamic programming over coordinate prefixes:
//   f_j(a, b, z) = sum_{i in F_q} f_{j+1}(a o i, tail(b), z - i * b_1),
//   f_t(a, -, w) = y_{a, w},
// with F(v) = f_0(-, v, 0). Every level has q^(t+1) entries; two are live.
// O(t q^(t+2)) time.
template <class T>
std::vector<T> pirappor_subset_sums_dp(const PiRapporParams& params, std::span<const T> y) {
  if (y.size() != params.universe()) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match universe");
  }
  const FieldTable& f = params.field;
  const std::uint64_t q = f.q();
  const unsigned t = params.t;
  std::vector<std::uint64_t> qpow(t + 1, 1);
  for (unsigned i = 1; i <= t; ++i) qpow[i] = qpow[i - 1] * q;

  // Level layout: [(a * q^m + b) * q + z] with a in F_q^j, b in F_q^m.
  std::vector<T> next(y.begin(), y.end());
  std::vector<T> cur;
  for (unsigned j = t; j-- > 0;) {
    const unsigned m = t - j;
    const std::uint64_t na = qpow[j];
    const std::uint64_t nb = qpow[m];
    const std::uint64_t nb_next = qpow[m - 1];
    const std::uint64_t zcount = (j == 0) ? 1 : q;
    cur.assign(na * nb * zcount, T{});
    for (std::uint64_t ai = 0; ai < na; ++ai) {
      for (std::uint64_t bi = 0; bi < nb; ++bi) {
        const Element b1 = static_cast<Element>(bi / nb_next);
        const std::uint64_t tail = bi % nb_next;
        T* out = &cur[(ai * nb + bi) * zcount];
        for (std::uint64_t z = 0; z < zcount; ++z) {
          T acc{};
          for (std::uint64_t i = 0; i < q; ++i) {
            const Element zi =
                f.sub(static_cast<Element>(z), f.mul(static_cast<Element>(i), b1));
            acc += next[((ai * q + i) * nb_next + tail) * q + zi];
          }
          out[z] = std::move(acc);
        }
      }
    }
    next.swap(cur);
  }
  next.resize(params.k_logical);
  return next;
}

namespace internal {

inline EstimateVector apply_pirappor_estimator(const PiRapporParams& params,
                                               std::span<const std::uint64_t> sums,
                                               std::uint64_t n) {
  EstimateVector est(sums.size());
  const double beta_n = params.coef.beta * static_cast<double>(n);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    est[i] = params.coef.alpha * static_cast<double>(sums[i]) + beta_n;
  }
  return est;
}

}  // namespace internal

inline CountVector pirappor_accumulate(const PiRapporParams& params,
                                       std::span<const PiRapporMessage> messages) {
  CountVector y(params.universe());
  for (const auto& m : messages) y.add(params.message_index(m));
  return y;
}

inline EstimateVector pirappor_decode_naive(const PiRapporParams& params, const CountVector& y) {
  return internal::apply_pirappor_estimator(
      params, pirappor_subset_sums_naive<std::uint64_t>(params, y.counts()), y.n());
}

inline EstimateVector pirappor_decode_dp(const PiRapporParams& params, const CountVector& y) {
  return internal::apply_pirappor_estimator(
      params, pirappor_subset_sums_dp<std::uint64_t>(params, y.counts()), y.n());
}

}  // namespace ldpfreq
