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

#include "ldpfreq/pg.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "ldpfreq/error.hpp"
#include "ldpfreq/random.hpp"
#include "test_util.h"

namespace ldpfreq {
namespace {

using ::ldpfreq::testing::Rational;
using ::ldpfreq::testing::ratio;

PgParams fano_params() { return derive_pg_params(std::log(2.0), 7, PgOverrides{2, 3}); }

// Subset membership by brute-force inner products.
bool orthogonal(const Geometry& g, PointIndex a, PointIndex b) {
  const auto u = g.index_to_point(a);
  const auto v = g.index_to_point(b);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += static_cast<std::uint64_t>(u[i]) * v[i];
  return s % g.q() == 0;
}

std::vector<std::uint64_t> brute_subset_sums(const Geometry& g, std::span<const std::uint64_t> y) {
  std::vector<std::uint64_t> sums(g.k_universe(), 0);
  for (PointIndex v = 0; v < g.k_universe(); ++v) {
    for (PointIndex u = 0; u < g.k_universe(); ++u) {
      if (orthogonal(g, u, v)) sums[v] += y[u];
    }
  }
  return sums;
}

TEST(PgDeriveTest, ExperimentScale) {
  const PgParams p = derive_pg_params(5.0, 22000);
  EXPECT_EQ(p.geometry.q(), 151u);
  EXPECT_EQ(p.geometry.t(), 3u);
  EXPECT_EQ(p.k_universe(), (151ull * 151 * 151 - 1) / 150);
  EXPECT_EQ(p.k_universe(), 22953u);
}

TEST(PgDeriveTest, LargeUniverseUsesFourDimensions) {
  const PgParams p = derive_pg_params(5.0, 3307948);
  EXPECT_EQ(p.geometry.q(), 151u);
  EXPECT_EQ(p.geometry.t(), 4u);
  EXPECT_EQ(p.k_universe(), (151ull * 151 * 151 * 151 - 1) / 150);
  EXPECT_EQ(p.k_universe(), 3465904u);
  EXPECT_LT(static_cast<double>(p.k_universe()), 1.05 * 3307948);
}

TEST(PgDeriveTest, FanoCoefficients) {
  const PgParams p = fano_params();
  EXPECT_EQ(p.k_universe(), 7u);
  EXPECT_NEAR(p.p(), 0.1, 1e-15);
  EXPECT_NEAR(p.alpha(), 5.0, 1e-12);
  EXPECT_NEAR(p.beta(), -2.0, 1e-12);
  // Unpinned, e^eps + 1 = 3 is itself prime.
  EXPECT_EQ(derive_pg_params(std::log(2.0), 7).geometry.q(), 3u);
}

TEST(PgDeriveTest, ExactCoefficientsAtFano) {
  const auto c = PgCoefficients<Rational>::compute(ratio(2), 7, 3, 1);
  EXPECT_EQ(c.p, ratio(1, 10));
  EXPECT_EQ(c.alpha, ratio(5));
  EXPECT_EQ(c.beta, ratio(-2));
}

TEST(PgDeriveTest, CoefficientIdentitiesHold) {
  for (double eps : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    for (std::uint64_t k : {10ull, 500ull, 22000ull}) {
      const PgParams p = derive_pg_params(eps, k);
      const double e = std::exp(eps);
      const double cs = static_cast<double>(p.geometry.c_set());
      const double ci = static_cast<double>(p.geometry.c_int());
      const double ku = static_cast<double>(p.k_universe());
      EXPECT_NEAR(e * p.p() * cs + p.p() * (ku - cs), 1.0, 1e-12);
      EXPECT_NEAR(p.alpha() * e * p.p() * cs + p.beta(), 1.0, 1e-12 * std::abs(p.alpha()));
      EXPECT_NEAR(p.alpha() * p.p() * ((e - 1) * ci + cs) + p.beta(), 0.0,
                  1e-12 * std::abs(p.alpha()));
      EXPECT_LE(p.k_logical, p.k_universe());
    }
  }
}

TEST(PgDeriveTest, FieldSizeIsSmallestPrimeAtLeastTarget) {
  EXPECT_EQ(smallest_prime_at_least(std::exp(5.0) + 1), 151u);
  EXPECT_EQ(smallest_prime_at_least(std::exp(std::log(2.0)) + 1), 3u);
  EXPECT_EQ(smallest_prime_at_least(std::exp(3.0) + 1), 23u);
  EXPECT_EQ(smallest_prime_at_least(1.2), 2u);
  EXPECT_EQ(smallest_prime_at_least(4.0), 5u);
  EXPECT_EQ(smallest_prime_at_least(65521.0), 65521u);
  EXPECT_THROW(smallest_prime_at_least(65522.0), Error);
  EXPECT_EQ(largest_prime_below(std::exp(5.0) + 1), 149u);
}

TEST(PgDeriveTest, Errors) {
  EXPECT_THROW(derive_pg_params(0.0, 10), Error);
  EXPECT_THROW(derive_pg_params(1.0, 1), Error);
  try {
    derive_pg_params(1.0, 100, PgOverrides{2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoFeasibleParams);
  }
  try {
    derive_pg_params(1.0, 100, PgOverrides{4, std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPrimeModulus);
  }
  try {
    derive_pg_params(12.0, std::uint64_t{1} << 62);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParameterOverflow);
  }
}

TEST(PgEncodeTest, FanoDistributionExact) {
  const PgParams params = fano_params();
  const auto coef = PgCoefficients<Rational>::compute(ratio(2), params.geometry);
  const auto dist = pg_message_distribution<Rational>(params.geometry, 0, coef);
  const std::vector<Rational> expected = {ratio(1, 10), ratio(1, 10), ratio(1, 10), ratio(1, 10),
                                          ratio(2, 10), ratio(2, 10), ratio(2, 10)};
  EXPECT_EQ(dist, expected);
  const auto approx = pg_message_distribution(params, 0);
  double total = 0;
  for (double x : approx) total += x;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(PgEncodeTest, DistributionIsTwoValuedAndPrivate) {
  const Geometry g(3, 3);
  const auto coef = PgCoefficients<Rational>::compute(ratio(5, 2), g);
  std::vector<std::vector<Rational>> all;
  for (PointIndex v = 0; v < g.k_universe(); ++v) {
    all.push_back(pg_message_distribution<Rational>(g, v, coef));
    Rational total = 0;
    for (const auto& x : all.back()) total += x;
    EXPECT_EQ(total, 1);
  }
  for (const auto& a : all) {
    for (const auto& b : all) {
      for (PointIndex u = 0; u < g.k_universe(); ++u) EXPECT_LE(a[u], ratio(5, 2) * b[u]);
    }
  }
}

TEST(PgEncodeTest, EmpiricalFrequenciesMatchLaw) {
  const PgParams params = derive_pg_params(1.0, 13, PgOverrides{3, 3});
  const auto law = pg_message_distribution(params, 4);
  Rng rng(2024);
  std::vector<std::uint64_t> counts(params.k_universe(), 0);
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[pg_encode(params, 4, rng)];
  for (PointIndex u = 0; u < params.k_universe(); ++u) {
    EXPECT_TRUE(::ldpfreq::testing::within_sigmas(counts[u], kDraws, law[u])) << u;
  }
}

TEST(PgEncodeTest, RangeDeterminismAndErrors) {
  const PgParams params = derive_pg_params(2.0, 100);
  Rng a(9), b(9);
  for (std::uint64_t v = 0; v < 100; ++v) {
    const PointIndex x = pg_encode(params, v, a);
    EXPECT_LT(x, params.k_universe());
    EXPECT_EQ(x, pg_encode(params, v, b));
  }
  try {
    pg_encode(params, 100, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputOutOfRange);
  }
}

TEST(PgEncodeTest, ExactModeRefusesHugeUniverse) {
  const PgParams params = derive_pg_params(5.0, 22000, PgOverrides{151, 4});
  try {
    pg_message_distribution(params, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLargeForExactMode);
  }
}

TEST(CountVectorTest, AccumulateAndMerge) {
  const CountVector empty = accumulate(7, {});
  EXPECT_EQ(empty.n(), 0u);
  for (auto c : empty.counts()) EXPECT_EQ(c, 0u);

  const std::vector<PointIndex> stream = {4, 4, 6};
  const CountVector y = accumulate(7, stream);
  EXPECT_EQ(std::vector<std::uint64_t>(y.counts().begin(), y.counts().end()),
            (std::vector<std::uint64_t>{0, 0, 0, 0, 2, 0, 1}));
  EXPECT_EQ(y.n(), 3u);

  Rng rng(1);
  std::vector<PointIndex> a, b;
  for (int i = 0; i < 500; ++i) a.push_back(uniform_below(rng, 40));
  for (int i = 0; i < 300; ++i) b.push_back(uniform_below(rng, 40));
  std::vector<PointIndex> ab(a);
  ab.insert(ab.end(), b.begin(), b.end());
  EXPECT_EQ(merge(accumulate(40, a), accumulate(40, b)), accumulate(40, ab));

  CountVector bad(7);
  EXPECT_THROW(bad.add(7), Error);
  EXPECT_THROW(bad.merge(CountVector(8)), Error);
}

TEST(PgDecodeTest, FanoWorkedExample) {
  const PgParams params = fano_params();
  const CountVector y = accumulate(7, std::vector<PointIndex>{4});
  EXPECT_NEAR(pg_decode_naive(params, y)[0], 3.0, 1e-12);
  EXPECT_NEAR(pg_decode_dp(params, y)[0], 3.0, 1e-12);
}

TEST(PgDecodeTest, ZeroAndConstantCounts) {
  const PgParams params = derive_pg_params(1.0, 40, PgOverrides{3, 4});
  const CountVector zero(params.k_universe());
  for (double x : pg_decode_dp(params, zero)) EXPECT_EQ(x, 0.0);
  CountVector flat(params.k_universe());
  for (PointIndex u = 0; u < params.k_universe(); ++u) flat.add(u, 5);
  for (auto s : pg_subset_sums_dp(params, flat)) EXPECT_EQ(s, 5 * params.geometry.c_set());
}

TEST(PgDecodeTest, DpMatchesNaiveAndBruteForce) {
  Rng rng(77);
  for (std::uint32_t q : {2u, 3u, 5u, 7u}) {
    for (unsigned t = 2; t <= 5; ++t) {
      const Geometry g(q, t);
      if (g.k_universe() > 3000) continue;
      const PgParams params = make_pg_params(1.0, g.k_universe(), g);
      for (int trial = 0; trial < 5; ++trial) {
        CountVector y(g.k_universe());
        for (PointIndex u = 0; u < g.k_universe(); ++u) y.add(u, uniform_below(rng, 1000));
        const auto dp = pg_subset_sums_dp(params, y);
        ASSERT_EQ(dp, pg_subset_sums_naive(params, y)) << "q=" << q << " t=" << t;
        ASSERT_EQ(dp, brute_subset_sums(g, y.counts())) << "q=" << q << " t=" << t;
      }
    }
  }
}

TEST(PgDecodeTest, LogicalUniverseTruncatesEstimates) {
  const PgParams params = derive_pg_params(2.0, 50);
  EXPECT_GT(params.k_universe(), 50u);
  CountVector y(params.k_universe());
  y.add(3);
  EXPECT_EQ(pg_decode_dp(params, y).size(), 50u);
  EXPECT_EQ(pg_decode_dp(params, y), pg_decode_naive(params, y));
  EXPECT_THROW(pg_decode_dp(params, CountVector(params.k_universe() + 1)), Error);
}

// E[estimate] under the exact output law equals the indicator of the input.
TEST(PgDecodeTest, ExactUnbiasedness) {
  for (auto [q, t] : {std::pair{2u, 3u}, std::pair{3u, 3u}, std::pair{2u, 4u}}) {
    const Geometry g(q, t);
    const Rational e = ratio(3);
    const auto coef = PgCoefficients<Rational>::compute(e, g);
    for (PointIndex v = 0; v < g.k_universe(); ++v) {
      const auto law = pg_message_distribution<Rational>(g, v, coef);
      for (PointIndex w = 0; w < g.k_universe(); ++w) {
        Rational expect = 0;
        for (PointIndex u = 0; u < g.k_universe(); ++u) {
          expect += law[u] * ((orthogonal(g, u, w) ? coef.alpha : Rational(0)) + coef.beta);
        }
        ASSERT_EQ(expect, v == w ? 1 : 0) << "q=" << q << " t=" << t;
      }
    }
  }
}

TEST(PgVarianceTest, FanoSingleUser) {
  const PgParams params = fano_params();
  const auto coef = PgCoefficients<Rational>::compute(ratio(2), params.geometry);
  EXPECT_EQ(pg_own_variance(coef), 6);
  EXPECT_EQ(pg_cross_variance(coef), 6);
  // (k - c_set) e c_set / ((e - 1)^2 (c_set - c_int)^2)
  EXPECT_EQ(ratio(7 - 3) * 2 * 3 / (ratio(1) * ratio(2) * ratio(2)), 6);
}

TEST(PgVarianceTest, BoundCoversExactVariance) {
  const PgParams params = fano_params();
  const double exact_per_coordinate = 10 * (6.0 + 6 * 6.0) / 7;
  EXPECT_GE(pg_variance_bound(params, 10), exact_per_coordinate);
  const double e = 2.0, z = 3.0;
  EXPECT_NEAR(pg_total_variance_bound(params, 1),
              (e * z * z + 6 * (e - 1 + z) * (e - 1 + z)) / ((e - 1) * (e - 1) * (z - 1)),
              1e-12);
}

TEST(PgVarianceTest, LineGeometryUsesExactForm) {
  const PgParams params = derive_pg_params(1.0, 4, PgOverrides{3, 2});
  EXPECT_THROW(pg_total_variance_bound(params, 1), Error);
  const double expected =
      (pg_own_variance(params.coef) + 3 * pg_cross_variance(params.coef)) / 4;
  EXPECT_NEAR(pg_variance_bound(params, 1), expected, 1e-12);
}

TEST(PgVarianceTest, OptimalTerm) {
  EXPECT_NEAR(optimal_variance_term(5.0), 4 * std::exp(5.0) / std::pow(std::exp(5.0) - 1, 2),
              1e-15);
  EXPECT_NEAR(optimal_variance_term(5.0), 0.0273187, 1e-7);
  EXPECT_LT(optimal_variance_term(40.0), 1e-15);
}

}  // namespace
}  // namespace ldpfreq
