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

#include "ldpfreq/hpg.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "ldpfreq/error.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/random.hpp"
#include "test_util.h"

namespace ldpfreq {
namespace {

using ::ldpfreq::testing::Rational;
using ::ldpfreq::testing::ratio;

// e^eps = 5, q = 2, t = 3, h = 2: b = 7, z = 3, h z = 6 = e^eps + 1.
HpgParams small_params() { return make_hpg_params(std::log(5.0), 14, 2, 3, 2); }

bool orthogonal(const Geometry& g, PointIndex a, PointIndex b) {
  const auto u = g.index_to_point(a);
  const auto v = g.index_to_point(b);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += static_cast<std::uint64_t>(u[i]) * v[i];
  return s % g.q() == 0;
}

TEST(HpgDeriveTest, ExperimentScale) {
  const HpgParams p = derive_hpg_params(5.0, 22000, 5);
  EXPECT_EQ(p.h, 30u);
  EXPECT_EQ(p.t(), 5u);
  EXPECT_EQ(p.total_universe(), 23430u);
  EXPECT_EQ(p.geometry.c_set(), 156u);
  EXPECT_EQ(p.geometry.c_int(), 31u);
  EXPECT_NEAR(p.h * p.z(), 4680.0 / 31, 1e-9);
  EXPECT_NEAR(p.h * p.z(), 150.97, 5e-3);
}

TEST(HpgDeriveTest, SmallParamsExactCoefficients) {
  const HpgParams p = derive_hpg_params(std::log(5.0), 14, 2, HpgOverrides{3, std::nullopt});
  EXPECT_EQ(p.h, 2u);
  EXPECT_EQ(p.b(), 7u);
  EXPECT_DOUBLE_EQ(p.z(), 3.0);
  const auto c = HpgCoefficients<Rational>::compute(ratio(5), 7, 2, 3, 1);
  EXPECT_EQ(c.p, ratio(1, 26));
  EXPECT_EQ(c.alpha, ratio(13, 4));
  EXPECT_EQ(c.beta, ratio(-13, 12));
  EXPECT_EQ(c.gamma, ratio(-1, 12));
  EXPECT_NEAR(p.coef.p, 1.0 / 26, 1e-15);
  EXPECT_NEAR(p.coef.alpha, 13.0 / 4, 1e-12);
  EXPECT_NEAR(p.coef.beta, -13.0 / 12, 1e-12);
  EXPECT_NEAR(p.coef.gamma, -1.0 / 12, 1e-12);
}

TEST(HpgDeriveTest, InvariantsHold) {
  for (double eps : {2.0, 3.0, 5.0}) {
    for (std::uint32_t q : {2u, 3u, 5u}) {
      const HpgParams p = derive_hpg_params(eps, 5000, q);
      const double cs = static_cast<double>(p.geometry.c_set());
      const double ci = static_cast<double>(p.geometry.c_int());
      EXPECT_GE(p.b() * p.h, p.k_logical);
      EXPECT_GT(p.k_logical, p.geometry.c_set() * p.h);
      EXPECT_GE(p.z(), q);
      EXPECT_LE(p.z(), q + 1);
      EXPECT_LE(p.coef.gamma, 0);
      EXPECT_NEAR(p.coef.alpha + p.coef.beta, (1 - ci / cs) * p.coef.alpha,
                  1e-12 * p.coef.alpha);
      const double e = p.coef.exp_eps;
      EXPECT_NEAR(e * p.coef.p * cs + p.coef.p * (static_cast<double>(p.total_universe()) - cs),
                  1.0, 1e-12);
    }
  }
}

TEST(HpgDeriveTest, Errors) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of([] { derive_hpg_params(5.0, 6, 5); }), ErrorCode::kNoFeasibleParams);
  EXPECT_EQ(code_of([] { derive_hpg_params(1.0, 1000, 5); }), ErrorCode::kNoFeasibleParams);
  EXPECT_EQ(code_of([] { derive_hpg_params(5.0, 1000, 6); }), ErrorCode::kNonPrimeModulus);
  EXPECT_EQ(code_of([] { make_hpg_params(1.0, 14, 2, 2, 2); }), ErrorCode::kNoFeasibleParams);
  EXPECT_EQ(code_of([] { make_hpg_params(1.0, 6, 2, 3, 2); }), ErrorCode::kNoFeasibleParams);
}

TEST(HpgEncodeTest, ExactLawIsTwoValuedAndNormalized) {
  const HpgParams p = small_params();
  const auto coef = HpgCoefficients<Rational>::compute(ratio(5), 7, 2, 3, 1);
  for (std::uint64_t value = 0; value < p.k_logical; ++value) {
    const auto [block, point] = p.input_location(value);
    const auto law = hpg_message_distribution<Rational>(p.geometry, p.h, block, point, coef);
    ASSERT_EQ(law.size(), 14u);
    Rational total = 0;
    for (std::uint64_t flat = 0; flat < law.size(); ++flat) {
      total += law[flat];
      const bool favored = flat / 7 == block && orthogonal(p.geometry, flat % 7, point);
      EXPECT_EQ(law[flat], favored ? ratio(5, 26) : ratio(1, 26));
    }
    EXPECT_EQ(total, 1);
  }
}

TEST(HpgEncodeTest, PrivacyRatioExhaustive) {
  for (std::uint32_t q : {2u, 3u}) {
    const Geometry g(q, 3);
    const auto coef =
        HpgCoefficients<Rational>::compute(ratio(7, 2), g.k_universe(), 2, g.c_set(), g.c_int());
    std::vector<std::vector<Rational>> laws;
    for (std::uint32_t block = 0; block < 2; ++block) {
      for (PointIndex v = 0; v < g.k_universe(); ++v) {
        laws.push_back(hpg_message_distribution<Rational>(g, 2, block, v, coef));
      }
    }
    for (const auto& a : laws) {
      for (const auto& b : laws) {
        for (std::size_t u = 0; u < a.size(); ++u) ASSERT_LE(a[u], ratio(7, 2) * b[u]);
      }
    }
  }
}

TEST(HpgEncodeTest, EmpiricalFrequenciesMatchLaw) {
  const HpgParams p = small_params();
  const auto law = hpg_message_distribution(p, 9);
  Rng rng(31);
  std::vector<std::uint64_t> counts(p.total_universe(), 0);
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const HpgMessage m = hpg_encode(p, 9, rng);
    ASSERT_LT(m.block, p.h);
    ASSERT_LT(m.point, p.b());
    ++counts[m.block * p.b() + m.point];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_TRUE(::ldpfreq::testing::within_sigmas(counts[i], kDraws, law[i])) << i;
  }
  EXPECT_THROW(hpg_encode(p, 14, rng), Error);
}

TEST(HpgEncodeTest, SingleBlockMatchesProjectiveLaw) {
  const HpgParams hp = make_hpg_params(std::log(3.0), 7, 2, 3, 1);
  const PgParams pg = derive_pg_params(std::log(3.0), 7, PgOverrides{2, 3});
  const auto hcoef = HpgCoefficients<Rational>::compute(ratio(3), 7, 1, 3, 1);
  const auto pcoef = PgCoefficients<Rational>::compute(ratio(3), pg.geometry);
  for (PointIndex v = 0; v < 7; ++v) {
    EXPECT_EQ(hpg_message_distribution<Rational>(hp.geometry, 1, 0, v, hcoef),
              pg_message_distribution<Rational>(pg.geometry, v, pcoef));
  }
  // With one block, beta + gamma plays the role of the projective beta.
  EXPECT_EQ(hcoef.alpha, pcoef.alpha);
  EXPECT_EQ(hcoef.beta + hcoef.gamma, pcoef.beta);
}

TEST(HpgDecodeTest, SingleUserWorkedExample) {
  const HpgParams p = small_params();
  // Input 0 sits at (block 0, point 0); S(point 0) = {4, 5, 6}.
  HpgCounts y(p.h, p.b());
  y.add({0, 4});
  const auto est = hpg_decode(p, y);
  EXPECT_NEAR(est[0], 25.0 / 12, 1e-12);
  EXPECT_EQ(est, hpg_decode_naive(p, y));
  EXPECT_EQ(ratio(13, 4) - ratio(13, 12) - ratio(1, 12), ratio(25, 12));
}

TEST(HpgDecodeTest, ZeroCountsGiveZero) {
  const HpgParams p = derive_hpg_params(5.0, 3000, 5);
  const HpgCounts y(p.h, p.b());
  for (double x : hpg_decode(p, y)) EXPECT_EQ(x, 0.0);
}

TEST(HpgDecodeTest, DpMatchesNaiveAndThreadsAgree) {
  const HpgParams p = derive_hpg_params(4.0, 2000, 3);
  Rng rng(8);
  HpgCounts y(p.h, p.b());
  for (int i = 0; i < 20000; ++i) {
    y.add({static_cast<std::uint32_t>(uniform_below(rng, p.h)), uniform_below(rng, p.b())});
  }
  const auto dp = hpg_decode(p, y);
  EXPECT_EQ(dp, hpg_decode_naive(p, y));
  EXPECT_EQ(dp, hpg_decode(p, y, 4));
  EXPECT_EQ(dp.size(), 2000u);
}

TEST(HpgDecodeTest, BlockMismatchRejected) {
  const HpgParams p = small_params();
  try {
    hpg_decode(p, HpgCounts(3, p.b()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBlockMismatch);
  }
}

TEST(HpgDecodeTest, CountsMergeAcrossShards) {
  const HpgParams p = small_params();
  HpgCounts a(p.h, p.b()), b(p.h, p.b()), all(p.h, p.b());
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const HpgMessage m = hpg_encode(p, uniform_below(rng, 14), rng);
    (i % 3 ? a : b).add(m);
    all.add(m);
  }
  a.merge(b);
  EXPECT_EQ(a.n(), all.n());
  for (std::uint32_t j = 0; j < p.h; ++j) EXPECT_EQ(a.blocks()[j], all.blocks()[j]);
  EXPECT_THROW(a.merge(HpgCounts(3, p.b())), Error);
  EXPECT_THROW(a.add({2, 0}), Error);
}

// For every input, the exact expected estimate is the indicator vector.
TEST(HpgDecodeTest, ExactUnbiasedness) {
  for (std::uint32_t q : {2u, 3u}) {
    const Geometry g(q, 3);
    const std::uint32_t h = 2;
    const auto coef =
        HpgCoefficients<Rational>::compute(ratio(9, 2), g.k_universe(), h, g.c_set(), g.c_int());
    const std::uint64_t b = g.k_universe();
    for (std::uint32_t i = 0; i < h; ++i) {
      for (PointIndex v = 0; v < b; ++v) {
        const auto law = hpg_message_distribution<Rational>(g, h, i, v, coef);
        for (std::uint32_t i2 = 0; i2 < h; ++i2) {
          for (PointIndex v2 = 0; v2 < b; ++v2) {
            Rational expect = 0;
            for (std::uint64_t flat = 0; flat < law.size(); ++flat) {
              Rational weight = coef.gamma;
              if (flat / b == i2) {
                weight += coef.beta;
                if (orthogonal(g, flat % b, v2)) weight += coef.alpha;
              }
              expect += law[flat] * weight;
            }
            ASSERT_EQ(expect, (i == i2 && v == v2) ? 1 : 0);
          }
        }
      }
    }
  }
}

TEST(HpgVarianceTest, InflationFactors) {
  EXPECT_NEAR(hpg_inflation_factor(156.0 / 31), 1.248, 5e-4);
  EXPECT_DOUBLE_EQ(hpg_inflation_factor(3.0), 1.5);
  EXPECT_NEAR(hpg_inflation_factor(1e12), 1.0, 1e-11);
}

TEST(HpgVarianceTest, SimplifiedFormAtMatchedParams) {
  const HpgParams p = small_params();
  const auto bound = hpg_variance_bound(p, 100);
  ASSERT_TRUE(bound.simplified_per_coordinate.has_value());
  EXPECT_NEAR(*bound.simplified_per_coordinate, 100.0 / 14 + 1.5 * 100 * 4 * 5 / 16, 1e-9);
  EXPECT_FALSE(hpg_variance_bound(derive_hpg_params(5.0, 22000, 5), 10).simplified_per_coordinate);
}

TEST(HpgVarianceTest, EmpiricalSpikeErrorWithinBound) {
  const HpgParams p = small_params();
  constexpr std::uint64_t kUsers = 500;
  constexpr int kTrials = 300;
  double total = 0;
  Rng rng(99);
  for (int trial = 0; trial < kTrials; ++trial) {
    HpgCounts y(p.h, p.b());
    for (std::uint64_t user = 0; user < kUsers; ++user) y.add(hpg_encode(p, 0, rng));
    const auto est = hpg_decode(p, y);
    double sq = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
      const double d = est[i] - (i == 0 ? static_cast<double>(kUsers) : 0.0);
      sq += d * d;
    }
    total += sq / static_cast<double>(est.size());
  }
  EXPECT_LE(total / kTrials, 1.15 * hpg_variance_bound(p, kUsers).per_coordinate);
}

}  // namespace
}  // namespace ldpfreq
