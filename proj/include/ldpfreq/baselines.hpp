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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ldpfreq/error.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

namespace internal {

inline void check_basic(double epsilon, std::uint64_t k) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k must be >= 2");
}

inline void check_input(std::uint64_t value, std::uint64_t k) {
  if (value >= k) {
    throw Error(ErrorCode::kInputOutOfRange,
                "input " + std::to_string(value) + " >= k=" + std::to_string(k));
  }
}

// x~_v = (c_v - n * q_out) / (q_in - q_out), unbiased whenever the report
// covers the true item with probability q_in and any other with q_out.
inline EstimateVector debias(std::span<const std::uint64_t> counts, std::uint64_t n,
                             double q_in, double q_out) {
  EstimateVector est(counts.size());
  const double offset = static_cast<double>(n) * q_out;
  const double scale = 1.0 / (q_in - q_out);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    est[i] = (static_cast<double>(counts[i]) - offset) * scale;
  }
  return est;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// k-ary randomized response.

template <class Real>
struct RrCoefficients {
  Real p_true;
  Real p_other;

  static RrCoefficients compute(const Real& exp_eps, std::uint64_t k) {
    const Real denom = exp_eps + Real(k) - Real(1);
    return {exp_eps / denom, Real(1) / denom};
  }
};

struct RrParams {
  double epsilon = 0;
  std::uint64_t k = 0;
  RrCoefficients<double> coef;
};

inline RrParams derive_rr_params(double epsilon, std::uint64_t k) {
  internal::check_basic(epsilon, k);
  return {epsilon, k, RrCoefficients<double>::compute(std::exp(epsilon), k)};
}

inline std::uint64_t rr_encode(const RrParams& params, std::uint64_t value, Rng& rng) {
  internal::check_input(value, params.k);
  if (bernoulli(rng, params.coef.p_true)) return value;
  const std::uint64_t other = uniform_below(rng, params.k - 1);
  return other >= value ? other + 1 : other;
}

inline EstimateVector rr_decode(const RrParams& params, std::span<const std::uint64_t> counts,
                                std::uint64_t n) {
  if (counts.size() != params.k) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match k");
  }
  return internal::debias(counts, n, params.coef.p_true, params.coef.p_other);
}

// ---------------------------------------------------------------------------
// Subset selection: the report is a size-d subset T, with Pr[T] proportional
// to e^eps when the input is in T and to 1 otherwise.

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) acc = acc * (n - r + i) / i;
  return acc;
}

template <class Real>
struct SsCoefficients {
  Real exp_eps;
  Real include_true;   // Pr[v in T | input v]
  Real include_other;  // Pr[w in T | input v != w]

  static SsCoefficients compute(const Real& exp_eps, std::uint64_t k, std::uint64_t d) {
    const Real rd(d);
    const Real rk(k);
    const Real in = exp_eps * rd / (exp_eps * rd + rk - rd);
    const Real other = (in * (rd - Real(1)) + (Real(1) - in) * rd) / (rk - Real(1));
    return {exp_eps, in, other};
  }

  // Probability of one particular size-d subset, given whether it contains
  // the input.
  Real report_probability(std::uint64_t k, std::uint64_t d, bool contains_input) const {
    const Real with(binomial(k - 1, d - 1));
    const Real without(binomial(k - 1, d));
    const Real norm = exp_eps * with + without;
    return contains_input ? exp_eps / norm : Real(1) / norm;
  }
};

struct SsParams {
  double epsilon = 0;
  std::uint64_t k = 0;
  std::uint64_t d = 0;
  SsCoefficients<double> coef;
};

// d = max(1, round(k / (e^eps + 1))), kept below k so that subsets avoiding
// the input exist.
inline SsParams derive_ss_params(double epsilon, std::uint64_t k) {
  internal::check_basic(epsilon, k);
  const double e = std::exp(epsilon);
  auto d = static_cast<std::uint64_t>(std::llround(static_cast<double>(k) / (e + 1)));
  d = std::clamp<std::uint64_t>(d, 1, k - 1);
  return {epsilon, k, d, SsCoefficients<double>::compute(e, k, d)};
}

// Sorted member list of the reported subset; this sparse form is also the
// wire form.
struct SsReport {
  std::vector<std::uint32_t> members;
};

namespace internal {

// Floyd's sampler: `count` distinct values from [0, range), excluding
// `skip` (range counts the values other than skip).
inline void sample_distinct_excluding(Rng& rng, std::uint64_t range, std::uint64_t count,
                                      std::uint64_t skip, std::vector<std::uint32_t>& out) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  for (std::uint64_t j = range - count; j < range; ++j) {
    const std::uint64_t r = uniform_below(rng, j + 1);
    const std::uint64_t pick = chosen.contains(r) ? j : r;
    chosen.insert(pick);
    out.push_back(static_cast<std::uint32_t>(pick >= skip ? pick + 1 : pick));
  }
}

}  // namespace internal

inline SsReport ss_encode(const SsParams& params, std::uint64_t value, Rng& rng) {
  internal::check_input(value, params.k);
  SsReport report;
  report.members.reserve(params.d);
  const double e = std::exp(params.epsilon);
  const double d = static_cast<double>(params.d);
  const double with_input = e * d / (e * d + static_cast<double>(params.k) - d);
  if (bernoulli(rng, with_input)) {
    report.members.push_back(static_cast<std::uint32_t>(value));
    internal::sample_distinct_excluding(rng, params.k - 1, params.d - 1, value, report.members);
  } else {
    internal::sample_distinct_excluding(rng, params.k - 1, params.d, value, report.members);
  }
  std::sort(report.members.begin(), report.members.end());
  return report;
}

inline std::vector<bool> ss_bitset(const SsReport& report, std::uint64_t k) {
  std::vector<bool> bits(k, false);
  for (auto m : report.members) bits.at(m) = true;
  return bits;
}

// Per-item inclusion counts over all reports.
inline std::vector<std::uint64_t> ss_accumulate(const SsParams& params,
                                                std::span<const SsReport> reports) {
  std::vector<std::uint64_t> counts(params.k, 0);
  for (const auto& r : reports) {
    for (auto m : r.members) {
      if (m >= params.k) throw Error(ErrorCode::kIndexOutOfRange, "subset member >= k");
      ++counts[m];
    }
  }
  return counts;
}

inline EstimateVector ss_decode(const SsParams& params, std::span<const std::uint64_t> counts,
                                std::uint64_t n) {
  if (counts.size() != params.k) {
    throw Error(ErrorCode::kUniverseMismatch, "count vector does not match k");
  }
  return internal::debias(counts, n, params.coef.include_true, params.coef.include_other);
}

}  // namespace ldpfreq
