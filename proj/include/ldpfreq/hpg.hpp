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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ldpfreq/error.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/projgeom.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq {

// Estimator weights for the block mechanism: h blocks of b points each, the
// favored set is S(v) inside the user's own block.
//   x~_{i,v} = alpha * sum_{u in S(v)} y_{i,u} + beta * sum_u y_{i,u} + gamma * n
template <class Real>
struct HpgCoefficients {
  Real exp_eps;
  Real p;
  Real alpha;
  Real beta;
  Real gamma;

  static HpgCoefficients compute(const Real& exp_eps, std::uint64_t b, std::uint64_t h,
                                 std::uint64_t c_set, std::uint64_t c_int) {
    const Real e1 = exp_eps - Real(1);
    const Real cs = Real(c_set);
    const Real ci = Real(c_int);
    const Real bb = Real(b);
    HpgCoefficients c{exp_eps, Real(1) / (bb * Real(h) + e1 * cs), Real(0), Real(0), Real(0)};
    c.alpha = Real(1) / (c.p * e1 * (cs - ci));
    c.beta = -c.alpha * ci / cs;
    c.gamma = -c.alpha * c.p * cs - c.beta * c.p * bb;
    return c;
  }
};

struct HpgMessage {
  std::uint32_t block = 0;
  PointIndex point = 0;

  friend bool operator==(const HpgMessage&, const HpgMessage&) = default;
};

struct HpgParams {
  double epsilon = 0;
  std::uint64_t k_logical = 0;
  std::uint32_t h = 0;
  Geometry geometry;  // one block
  std::uint64_t block_size = 0;  // ceil(k_logical / h)
  Embedding embedding = Embedding::kDense;
  HpgCoefficients<double> coef;

  std::uint32_t q() const noexcept { return geometry.q(); }
  unsigned t() const noexcept { return geometry.t(); }
  std::uint64_t b() const noexcept { return geometry.k_universe(); }
  double z() const noexcept {
    return static_cast<double>(geometry.c_set()) / static_cast<double>(geometry.c_int());
  }
  std::uint64_t total_universe() const noexcept { return b() * h; }

  // (block, point) carrying input value m.
  std::pair<std::uint32_t, PointIndex> input_location(std::uint64_t value) const {
    if (value >= k_logical) {
      throw Error(ErrorCode::kInputOutOfRange,
                  "input " + std::to_string(value) + " >= k=" + std::to_string(k_logical));
    }
    return {static_cast<std::uint32_t>(value / block_size),
            embed_input(geometry, embedding, value % block_size)};
  }
};

inline constexpr unsigned kHpgMaxDimension = 40;
inline constexpr std::uint64_t kHpgMaxBlocks = std::uint64_t{1} << 20;

inline HpgParams make_hpg_params(double epsilon, std::uint64_t k_logical, std::uint32_t q,
                                 unsigned t, std::uint32_t h,
                                 Embedding embedding = Embedding::kDense) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (t < 3) throw Error(ErrorCode::kNoFeasibleParams, "block dimension must be >= 3");
  if (h < 1) throw Error(ErrorCode::kNoFeasibleParams, "need at least one block");
  Geometry g(q, t);
  const std::uint64_t block_size = (k_logical + h - 1) / h;
  if (block_size > embedding_capacity(g, embedding)) {
    throw Error(ErrorCode::kNoFeasibleParams,
                "blocks of q=" + std::to_string(q) + ", t=" + std::to_string(t) +
                    " cannot hold " + std::to_string(block_size) + " inputs each");
  }
  if (k_logical <= g.c_set() * h) {
    throw Error(ErrorCode::kNoFeasibleParams, "k must exceed c_set * h");
  }
  auto coef = HpgCoefficients<double>::compute(std::exp(epsilon), g.k_universe(), h,
                                               g.c_set(), g.c_int());
  return HpgParams{epsilon, k_logical, h, std::move(g), block_size, embedding, coef};
}

struct HpgOverrides {
  std::optional<unsigned> t;
  std::optional<std::uint32_t> h;
};

// Searches t in [3, 40] and h in [1, 2^20] for block layouts with
// h * capacity >= k > c_set * h, picking the one whose h * z is closest to
// e^eps + 1; ties go to the smaller universe inflation b * h / k.
inline HpgParams derive_hpg_params(double epsilon, std::uint64_t k_logical, std::uint32_t q,
                                   const HpgOverrides& overrides = {},
                                   Embedding embedding = Embedding::kDense) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
  }
  if (k_logical < 2) throw Error(ErrorCode::kInvalidArgument, "k must be >= 2");
  if (!is_prime(q)) throw Error(ErrorCode::kNonPrimeModulus, std::to_string(q) + " is not prime");
  const double target = std::exp(epsilon) + 1;
  if (q > target) {
    throw Error(ErrorCode::kNoFeasibleParams, "q must not exceed e^eps + 1");
  }

  struct Best {
    unsigned t = 0;
    std::uint64_t h = 0;
    double distance = std::numeric_limits<double>::infinity();
    double inflation = std::numeric_limits<double>::infinity();
  } best;

  const unsigned t_lo = overrides.t ? *overrides.t : 3;
  const unsigned t_hi = overrides.t ? *overrides.t : kHpgMaxDimension;
  for (unsigned t = t_lo; t <= t_hi; ++t) {
    std::uint64_t b = 0, c_set = 0, c_int = 0;
    if (!checked_projective_count(q, t, b)) break;
    checked_projective_count(q, t - 1, c_set);
    checked_projective_count(q, t - 2, c_int);
    if (c_int == 0) continue;
    const std::uint64_t capacity = embedding == Embedding::kDense ? b : b - c_set;
    if (c_set >= k_logical) break;  // no h satisfies k > c_set * h, nor for larger t
    const std::uint64_t h_min = (k_logical + capacity - 1) / capacity;
    const std::uint64_t h_max = std::min<std::uint64_t>((k_logical - 1) / c_set, kHpgMaxBlocks);
    const double z = static_cast<double>(c_set) / static_cast<double>(c_int);

    std::vector<std::uint64_t> candidates;
    if (overrides.h) {
      candidates.push_back(*overrides.h);
    } else {
      const double ideal = target / z;
      const auto lo = static_cast<std::uint64_t>(std::max(1.0, std::floor(ideal)));
      candidates = {h_min, h_max, lo, lo + 1};
    }
    for (std::uint64_t h : candidates) {
      if (h < h_min || h > h_max || h < 1) continue;
      // Ceil-division block size must fit too; h >= h_min guarantees it.
      const double distance = std::abs(static_cast<double>(h) * z - target);
      const double inflation =
          static_cast<double>(b) * static_cast<double>(h) / static_cast<double>(k_logical);
      if (distance < best.distance ||
          (distance == best.distance && inflation < best.inflation)) {
        best = {t, h, distance, inflation};
      }
    }
  }
  if (best.t == 0) {
    throw Error(ErrorCode::kNoFeasibleParams,
                "no (t, h) block layout for k=" + std::to_string(k_logical) +
                    " with q=" + std::to_string(q));
  }
  return make_hpg_params(epsilon, k_logical, q, best.t, static_cast<std::uint32_t>(best.h),
                         embedding);
}

// Counts per block; n is the total over all blocks.
class HpgCounts {
 public:
  HpgCounts() = default;
  HpgCounts(std::uint32_t h, std::uint64_t b) : blocks_(h, CountVector(b)) {}

  void add(const HpgMessage& m) {
    if (m.block >= blocks_.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "block " + std::to_string(m.block) +
                                                   " >= h=" + std::to_string(blocks_.size()));
    }
    blocks_[m.block].add(m.point);
    ++n_;
  }

  void merge(const HpgCounts& other) {
    if (other.blocks_.size() != blocks_.size()) {
      throw Error(ErrorCode::kBlockMismatch, "block counts differ");
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].merge(other.blocks_[i]);
    n_ += other.n_;
  }

  const std::vector<CountVector>& blocks() const noexcept { return blocks_; }
  std::uint64_t n() const noexcept { return n_; }

 private:
  std::vector<CountVector> blocks_;
  std::uint64_t n_ = 0;
};

// The favored pairs (i, u in S(v)) carry total mass e^eps * p * c_set; any
// other pair is uniform, which rejection over all h * b pairs gives exactly.
inline HpgMessage hpg_encode(const HpgParams& params, std::uint64_t value, Rng& rng) {
  const auto [block, point] = params.input_location(value);
  const Geometry& g = params.geometry;
  const CanonicalVector v = g.index_to_point(point);
  const double in_mass = params.coef.exp_eps * params.coef.p * static_cast<double>(g.c_set());
  if (bernoulli(rng, in_mass)) {
    return {block, SubspaceSampler(g, v).sample_in(rng)};
  }
  for (;;) {
    const std::uint64_t flat = uniform_below(rng, params.total_universe());
    const auto j = static_cast<std::uint32_t>(flat / g.k_universe());
    const PointIndex u = flat % g.k_universe();
    if (j != block || g.inner_product(g.index_to_point(u).coords(), v.coords()) != 0) {
      return {j, u};
    }
  }
}

// Exact law over the h * b pairs, flattened as j * b + u.
template <class Real>
std::vector<Real> hpg_message_distribution(const Geometry& g, std::uint32_t h,
                                           std::uint32_t block, PointIndex point,
                                           const HpgCoefficients<Real>& coef) {
  if (g.k_universe() * h > kMaxExactUniverse) {
    throw Error(ErrorCode::kTooLargeForExactMode, "universe too large for exact enumeration");
  }
  std::vector<Real> dist(g.k_universe() * h, coef.p);
  const CanonicalVector v = g.index_to_point(point);
  const Real favored = coef.exp_eps * coef.p;
  for (PointIndex u = 0; u < g.k_universe(); ++u) {
    if (g.inner_product(g.index_to_point(u).coords(), v.coords()) == 0) {
      dist[block * g.k_universe() + u] = favored;
    }
  }
  return dist;
}

inline std::vector<double> hpg_message_distribution(const HpgParams& params,
                                                    std::uint64_t value) {
  const auto [block, point] = params.input_location(value);
  return hpg_message_distribution(params.geometry, params.h, block, point, params.coef);
}

namespace internal {

template <class SumFn>
EstimateVector hpg_decode_with(const HpgParams& params, const HpgCounts& y, unsigned threads,
                               SumFn&& block_sums) {
  if (y.blocks().size() != params.h) {
    throw Error(ErrorCode::kBlockMismatch, "expected " + std::to_string(params.h) + " blocks");
  }
  for (const auto& block : y.blocks()) {
    if (block.universe() != params.b()) {
      throw Error(ErrorCode::kUniverseMismatch, "block universe mismatch");
    }
  }
  EstimateVector est(params.k_logical, 0.0);
  const double gamma_n = params.coef.gamma * static_cast<double>(y.n());
  auto decode_block = [&](std::uint32_t i) {
    const std::uint64_t first = static_cast<std::uint64_t>(i) * params.block_size;
    if (first >= params.k_logical) return;
    const std::uint64_t last = std::min(params.k_logical, first + params.block_size);
    std::vector<PointIndex> targets(last - first);
    for (std::uint64_t m = first; m < last; ++m) {
      targets[m - first] = embed_input(params.geometry, params.embedding, m - first);
    }
    const CountVector& counts = y.blocks()[i];
    const std::vector<std::uint64_t> sums = block_sums(counts, targets);
    const double offset = params.coef.beta * static_cast<double>(counts.n()) + gamma_n;
    for (std::uint64_t m = first; m < last; ++m) {
      est[m] = params.coef.alpha * static_cast<double>(sums[m - first]) + offset;
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, params.h));
  if (threads == 1) {
    for (std::uint32_t i = 0; i < params.h; ++i) decode_block(i);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::uint32_t i = w; i < params.h; i += threads) decode_block(i);
      });
    }
  }
  return est;
}

}  // namespace internal

// Block-wise DP decode; blocks are independent and may be split over threads.
inline EstimateVector hpg_decode(const HpgParams& params, const HpgCounts& y,
                                 unsigned threads = 1) {
  return internal::hpg_decode_with(
      params, y, threads,
      [&](const CountVector& counts, std::span<const PointIndex> targets) {
        const auto all = subset_sums_dp<std::uint64_t>(params.geometry, counts.counts());
        std::vector<std::uint64_t> sums(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) sums[i] = all[targets[i]];
        return sums;
      });
}

inline EstimateVector hpg_decode_naive(const HpgParams& params, const HpgCounts& y) {
  return internal::hpg_decode_with(
      params, y, 1, [&](const CountVector& counts, std::span<const PointIndex> targets) {
        return subset_sums_naive<std::uint64_t>(params.geometry, counts.counts(), targets);
      });
}

struct HpgVarianceBound {
  double total = 0;           // bound on E ||x - x~||^2
  double per_coordinate = 0;  // total / k
  // n/k + z/(z-1) * 4 n e^eps / (e^eps-1)^2, present when h z = e^eps + 1.
  std::optional<double> simplified_per_coordinate;
};

inline double hpg_inflation_factor(double z) { return z / (z - 1); }

inline HpgVarianceBound hpg_variance_bound(const HpgParams& params, std::uint64_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  const double e = params.coef.exp_eps;
  const double e1 = e - 1;
  const double z = params.z();
  const double h = params.h;
  const double nn = static_cast<double>(n);
  const double k = static_cast<double>(params.k_logical);
  const double kh = static_cast<double>((params.k_logical + params.h - 1) / params.h);
  const double zh = z * h;
  const double own = 1 + (zh + e1) / (e1 * e1 * (z - 1)) + 2 / e1 + e * (zh - e + 1) / (e1 * e1);
  const double cross = (zh + e1) * z / (e1 * e1 * (z - 1)) * (k - kh + (kh - 1) * (z + e1) / z);
  HpgVarianceBound out;
  out.total = nn * own + nn * cross;
  out.per_coordinate = out.total / k;
  if (std::abs(zh - (e + 1)) <= 1e-9 * (e + 1)) {
    out.simplified_per_coordinate = nn / k + hpg_inflation_factor(z) * nn * 4 * e / (e1 * e1);
  }
  return out;
}

}  // namespace ldpfreq
