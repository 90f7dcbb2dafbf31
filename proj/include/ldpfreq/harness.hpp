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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ldpfreq/baselines.hpp"
#include "ldpfreq/error.hpp"
#include "ldpfreq/hpg.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/pirappor.hpp"
#include "ldpfreq/pubcoin.hpp"
#include "ldpfreq/random.hpp"

namespace ldpfreq::harness {

enum class Mechanism { kPg, kHpg, kPiRappor, kRr, kSs, kPgPub, kHpgPub };

inline constexpr std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kPg: return "pg";
    case Mechanism::kHpg: return "hpg";
    case Mechanism::kPiRappor: return "pirappor";
    case Mechanism::kRr: return "rr";
    case Mechanism::kSs: return "ss";
    case Mechanism::kPgPub: return "pg-pub";
    case Mechanism::kHpgPub: return "hpg-pub";
  }
  return "?";
}

inline Mechanism parse_mechanism(std::string_view name) {
  for (auto m : {Mechanism::kPg, Mechanism::kHpg, Mechanism::kPiRappor, Mechanism::kRr,
                 Mechanism::kSs, Mechanism::kPgPub, Mechanism::kHpgPub}) {
    if (mechanism_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown mechanism '" + std::string(name) + "'");
}

struct Distribution {
  enum class Kind { kSpike, kZipf };
  Kind kind = Kind::kSpike;
  double zipf_exponent = 0;

  static Distribution spike() { return {Kind::kSpike, 0}; }
  static Distribution zipf(double s) { return {Kind::kZipf, s}; }
};

// Accepts "spike", "zipf" (exponent 1), "zipf:<s>" or "zipf(<s>)".
inline Distribution parse_distribution(std::string_view text) {
  if (text == "spike") return Distribution::spike();
  if (text.rfind("zipf", 0) == 0) {
    std::string rest(text.substr(4));
    if (rest.empty()) return Distribution::zipf(1.0);
    if (rest.front() == ':' || rest.front() == '(') rest.erase(0, 1);
    if (!rest.empty() && rest.back() == ')') rest.pop_back();
    try {
      std::size_t used = 0;
      const double s = std::stod(rest, &used);
      if (used == rest.size()) return Distribution::zipf(s);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown distribution '" + std::string(text) + "'");
}

enum class OutputFormat { kCsv, kJson };

struct ExperimentConfig {
  Mechanism mechanism = Mechanism::kPg;
  double epsilon = 1.0;
  std::uint64_t k = 2;
  std::uint64_t n = 1;
  std::uint32_t trials = 1;
  Distribution distribution;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> q;
  std::optional<unsigned> t;
  std::optional<std::uint32_t> h;
  OutputFormat format = OutputFormat::kCsv;
  unsigned threads = 1;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
    if (!(epsilon > 0) || !std::isfinite(epsilon)) fail("epsilon must be positive");
    if (k < 2) fail("k must be >= 2");
    if (k > std::numeric_limits<std::uint32_t>::max()) fail("k must fit in 32 bits");
    if (n < 1) fail("n must be >= 1");
    if (trials < 1) fail("trials must be >= 1");
    if (distribution.kind == Distribution::Kind::kZipf &&
        !(distribution.zipf_exponent >= 0 && std::isfinite(distribution.zipf_exponent))) {
      fail("zipf exponent must be >= 0");
    }
    if (threads < 1) fail("threads must be >= 1");
  }
};

struct TrialResult {
  std::uint32_t trial = 0;
  double mse = 0;   // (1/k) ||x - x~||^2
  double linf = 0;  // ||x - x~||_inf
  std::int64_t encode_ns = 0;
  std::int64_t decode_ns = 0;
};

inline constexpr std::uint64_t kInputStreamTag = 0x696e70757473ULL;
inline constexpr std::uint64_t kUserStreamTag = 0x75736572ULL;
inline constexpr std::uint64_t kPublicSeedTag = 0x7075626c6963ULL;
inline constexpr std::uint64_t kBenchCountsTag = 0x62656e6368ULL;

// Spike puts every user on item 0; zipf(s) draws i.i.d. with
// P(i) proportional to (i + 1)^-s via a cumulative table.
inline std::vector<std::uint32_t> generate_inputs(const ExperimentConfig& config, Rng& rng) {
  std::vector<std::uint32_t> inputs(config.n, 0);
  if (config.distribution.kind == Distribution::Kind::kSpike) return inputs;
  std::vector<double> cumulative(config.k);
  double total = 0;
  for (std::uint64_t i = 0; i < config.k; ++i) {
    total += std::pow(static_cast<double>(i + 1), -config.distribution.zipf_exponent);
    cumulative[i] = total;
  }
  for (auto& x : inputs) {
    const double r = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;
    x = static_cast<std::uint32_t>(it - cumulative.begin());
  }
  return inputs;
}

// Default field for the block mechanism when the caller gives none.
inline std::uint32_t default_hpg_q(double epsilon) {
  const double limit = std::exp(epsilon) + 1;
  return limit >= 5 ? 5 : (limit >= 3 ? 3 : 2);
}

struct Metrics {
  double mse = 0;
  double linf = 0;
};

inline Metrics error_metrics(std::span<const std::uint32_t> inputs,
                             std::span<const double> estimate) {
  std::vector<double> truth(estimate.size(), 0.0);
  for (auto v : inputs) truth[v] += 1;
  Metrics m;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = truth[i] - estimate[i];
    m.mse += d * d;
    m.linf = std::max(m.linf, std::abs(d));
  }
  m.mse /= static_cast<double>(estimate.size());
  return m;
}

// Derived parameters for one configuration; trials are pure functions of
// (config, trial index).
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config)
      : config_(std::move(config)), params_(derive(config_)) {}

  const ExperimentConfig& config() const noexcept { return config_; }

  template <class Params>
  const Params& params() const {
    return std::get<Params>(params_);
  }

  TrialResult run_trial(std::uint32_t trial) const {
    Rng input_rng(derive_seed({config_.seed, trial, kInputStreamTag}));
    const auto inputs = generate_inputs(config_, input_rng);
    TrialResult result;
    result.trial = trial;
    EstimateVector estimate;
    std::visit([&](const auto& p) { estimate = simulate(p, trial, inputs, result); }, params_);
    const Metrics m = error_metrics(inputs, estimate);
    result.mse = m.mse;
    result.linf = m.linf;
    return result;
  }

 private:
  using Clock = std::chrono::steady_clock;
  using AnyParams = std::variant<PgParams, HpgParams, PiRapporParams, RrParams, SsParams>;

  static AnyParams derive(const ExperimentConfig& c) {
    c.validate();
    switch (c.mechanism) {
      case Mechanism::kPg:
        return derive_pg_params(c.epsilon, c.k, PgOverrides{c.q, c.t});
      case Mechanism::kPgPub:
        return derive_pg_params(c.epsilon, c.k, PgOverrides{c.q, c.t}, Embedding::kNonzeroLast);
      case Mechanism::kHpg:
      case Mechanism::kHpgPub:
        return derive_hpg_params(
            c.epsilon, c.k, c.q ? *c.q : default_hpg_q(c.epsilon), HpgOverrides{c.t, c.h},
            c.mechanism == Mechanism::kHpgPub ? Embedding::kNonzeroLast : Embedding::kDense);
      case Mechanism::kPiRappor:
        return derive_pirappor_params(c.epsilon, c.k, PiRapporOverrides{c.q, c.t});
      case Mechanism::kRr:
        return derive_rr_params(c.epsilon, c.k);
      case Mechanism::kSs:
        return derive_ss_params(c.epsilon, c.k);
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown mechanism");
  }

  static std::int64_t since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  }

  Rng user_rng(std::uint32_t trial, std::uint64_t user) const {
    return Rng(derive_seed({config_.seed, trial, user, kUserStreamTag}));
  }

  std::uint64_t public_seed(std::uint32_t trial) const {
    return derive_seed({config_.seed, trial, kPublicSeedTag});
  }

  EstimateVector simulate(const PgParams& p, std::uint32_t trial,
                          std::span<const std::uint32_t> inputs, TrialResult& r) const {
    const bool pub = config_.mechanism == Mechanism::kPgPub;
    const std::uint64_t shared_seed = public_seed(trial);
    auto start = Clock::now();
    CountVector y(p.k_universe());
    for (std::uint64_t user = 0; user < inputs.size(); ++user) {
      Rng rng = user_rng(trial, user);
      if (pub) {
        const SharedRandomness s = sample_shared(p, shared_seed, user);
        const Element a = pub_encode(p, inputs[user], s, rng);
        y.add(pub_decode(p.geometry, s, a));
      } else {
        y.add(pg_encode(p, inputs[user], rng));
      }
    }
    r.encode_ns = since(start);
    start = Clock::now();
    EstimateVector est = pg_decode_dp(p, y);
    r.decode_ns = since(start);
    return est;
  }

  EstimateVector simulate(const HpgParams& p, std::uint32_t trial,
                          std::span<const std::uint32_t> inputs, TrialResult& r) const {
    const bool pub = config_.mechanism == Mechanism::kHpgPub;
    const std::uint64_t shared_seed = public_seed(trial);
    auto start = Clock::now();
    HpgCounts y(p.h, p.b());
    for (std::uint64_t user = 0; user < inputs.size(); ++user) {
      Rng rng = user_rng(trial, user);
      if (pub) {
        const SharedRandomness s = sample_shared(p, shared_seed, user);
        y.add(hpg_pub_decode(p, s, hpg_pub_encode(p, inputs[user], s, rng)));
      } else {
        y.add(hpg_encode(p, inputs[user], rng));
      }
    }
    r.encode_ns = since(start);
    start = Clock::now();
    EstimateVector est = hpg_decode(p, y);
    r.decode_ns = since(start);
    return est;
  }

  EstimateVector simulate(const PiRapporParams& p, std::uint32_t trial,
                          std::span<const std::uint32_t> inputs, TrialResult& r) const {
    auto start = Clock::now();
    CountVector y(p.universe());
    for (std::uint64_t user = 0; user < inputs.size(); ++user) {
      Rng rng = user_rng(trial, user);
      y.add(p.message_index(pirappor_encode(p, inputs[user], rng)));
    }
    r.encode_ns = since(start);
    start = Clock::now();
    EstimateVector est = pirappor_decode_dp(p, y);
    r.decode_ns = since(start);
    return est;
  }

  EstimateVector simulate(const RrParams& p, std::uint32_t trial,
                          std::span<const std::uint32_t> inputs, TrialResult& r) const {
    auto start = Clock::now();
    std::vector<std::uint64_t> counts(p.k, 0);
    for (std::uint64_t user = 0; user < inputs.size(); ++user) {
      Rng rng = user_rng(trial, user);
      ++counts[rr_encode(p, inputs[user], rng)];
    }
    r.encode_ns = since(start);
    start = Clock::now();
    EstimateVector est = rr_decode(p, counts, inputs.size());
    r.decode_ns = since(start);
    return est;
  }

  EstimateVector simulate(const SsParams& p, std::uint32_t trial,
                          std::span<const std::uint32_t> inputs, TrialResult& r) const {
    auto start = Clock::now();
    std::vector<std::uint64_t> counts(p.k, 0);
    for (std::uint64_t user = 0; user < inputs.size(); ++user) {
      Rng rng = user_rng(trial, user);
      for (auto m : ss_encode(p, inputs[user], rng).members) ++counts[m];
    }
    r.encode_ns = since(start);
    start = Clock::now();
    EstimateVector est = ss_decode(p, counts, inputs.size());
    r.decode_ns = since(start);
    return est;
  }

  ExperimentConfig config_;
  AnyParams params_;
};

// Runs all trials over config.threads workers. Results are ordered by trial
// and do not depend on the worker count.
inline std::vector<TrialResult> run_trials(const ExperimentConfig& config) {
  const Experiment experiment(config);
  std::vector<TrialResult> results(config.trials);
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, config.trials));
  if (workers == 1) {
    for (std::uint32_t i = 0; i < config.trials; ++i) results[i] = experiment.run_trial(i);
    return results;
  }
  std::atomic<std::uint32_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::uint32_t i = next++; i < config.trials; i = next++) {
            results[i] = experiment.run_trial(i);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

inline double mean_mse(std::span<const TrialResult> results) {
  double total = 0;
  for (const auto& r : results) total += r.mse;
  return results.empty() ? 0.0 : total / static_cast<double>(results.size());
}

struct CdfRow {
  double percentile = 0;
  double value = 0;
};

// Row i (1-based) of N: percentile 100 i / N and the smallest value v with at
// least that share of trials at or below v.
inline std::vector<CdfRow> emit_cdf(std::span<const TrialResult> results,
                                    double TrialResult::*metric = &TrialResult::mse) {
  if (results.empty()) throw Error(ErrorCode::kInvalidArgument, "CDF needs at least one result");
  std::vector<double> values;
  values.reserve(results.size());
  for (const auto& r : results) values.push_back(r.*metric);
  std::sort(values.begin(), values.end());
  std::vector<CdfRow> rows(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    rows[i] = {100.0 * static_cast<double>(i + 1) / static_cast<double>(values.size()),
               values[i]};
  }
  return rows;
}

struct SweepRow {
  double epsilon = 0;
  double mean_mse = 0;
};

inline constexpr std::uint32_t kSweepTrials = 10;

// Re-derives parameters at every epsilon and averages 10 trials.
inline std::vector<SweepRow> sweep_epsilon(const ExperimentConfig& config,
                                           std::span<const double> epsilons) {
  std::vector<SweepRow> rows;
  for (double eps : epsilons) {
    ExperimentConfig c = config;
    c.epsilon = eps;
    c.trials = kSweepTrials;
    const auto results = run_trials(c);
    rows.push_back({eps, mean_mse(results)});
  }
  return rows;
}

struct BenchConfig {
  double epsilon = 5;
  std::uint64_t k = 22000;
  std::uint64_t n = 10000;
  std::uint64_t seed = 0;
  PgOverrides pg;
  std::uint32_t hpg_q = 0;  // 0 picks default_hpg_q
  HpgOverrides hpg;
  PiRapporOverrides pirappor;
  std::vector<std::string> decoders = {"pg-dp", "pg-naive", "hpg", "pirappor-dp"};
  unsigned repeats = 5;
};

struct BenchRow {
  std::string decoder;
  std::int64_t median_ns = 0;
};

namespace internal {

inline CountVector random_counts(std::uint64_t universe, std::uint64_t n, std::uint64_t seed) {
  Rng rng(seed);
  CountVector y(universe);
  for (std::uint64_t i = 0; i < n; ++i) y.add(uniform_below(rng, universe));
  return y;
}

template <class Fn>
std::int64_t median_time(unsigned repeats, Fn&& fn) {
  std::vector<std::int64_t> times;
  for (unsigned i = 0; i < std::max(1u, repeats); ++i) {
    const auto start = std::chrono::steady_clock::now();
    auto out = fn();
    const auto stop = std::chrono::steady_clock::now();
    // Keep the result observable so the call is not elided.
    if (out.empty()) times.push_back(-1);
    times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
  }
  std::erase(times, -1);
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace internal

// Times decoders on fixed random count vectors (median of `repeats` runs).
inline std::vector<BenchRow> bench_decode(const BenchConfig& config) {
  std::vector<BenchRow> rows;
  std::optional<PgParams> pg;
  auto pg_params = [&]() -> const PgParams& {
    if (!pg) pg = derive_pg_params(config.epsilon, config.k, config.pg);
    return *pg;
  };
  for (const auto& name : config.decoders) {
    const std::uint64_t seed = derive_seed({config.seed, kBenchCountsTag, rows.size()});
    if (name == "pg-dp" || name == "pg-naive") {
      const PgParams& p = pg_params();
      const CountVector y = internal::random_counts(p.k_universe(), config.n, seed);
      rows.push_back({name, internal::median_time(config.repeats, [&] {
                        return name == "pg-dp" ? pg_decode_dp(p, y) : pg_decode_naive(p, y);
                      })});
    } else if (name == "hpg") {
      const std::uint32_t q = config.hpg_q ? config.hpg_q : default_hpg_q(config.epsilon);
      const HpgParams p = derive_hpg_params(config.epsilon, config.k, q, config.hpg);
      Rng rng(seed);
      HpgCounts y(p.h, p.b());
      for (std::uint64_t i = 0; i < config.n; ++i) {
        const std::uint64_t flat = uniform_below(rng, p.total_universe());
        y.add({static_cast<std::uint32_t>(flat / p.b()), flat % p.b()});
      }
      rows.push_back({name, internal::median_time(config.repeats, [&] { return hpg_decode(p, y); })});
    } else if (name == "pirappor-dp" || name == "pirappor-naive") {
      const PiRapporParams p = derive_pirappor_params(config.epsilon, config.k, config.pirappor);
      const CountVector y = internal::random_counts(p.universe(), config.n, seed);
      rows.push_back({name, internal::median_time(config.repeats, [&] {
                        return name == "pirappor-dp" ? pirappor_decode_dp(p, y)
                                                     : pirappor_decode_naive(p, y);
                      })});
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown decoder '" + name + "'");
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output. CSV headers are fixed; JSON is an array of objects with the same
// keys.

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline void write_trials(std::ostream& os, std::span<const TrialResult> results,
                         OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "trial,mse,linf,encode_ns,decode_ns\n";
    for (const auto& r : results) {
      os << r.trial << ',' << format_double(r.mse) << ',' << format_double(r.linf) << ','
         << r.encode_ns << ',' << r.decode_ns << '\n';
    }
    return;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : results) {
    out.push_back({{"trial", r.trial}, {"mse", r.mse}, {"linf", r.linf},
                   {"encode_ns", r.encode_ns}, {"decode_ns", r.decode_ns}});
  }
  os << out.dump(2) << '\n';
}

inline void write_cdf(std::ostream& os, std::span<const CdfRow> rows, OutputFormat format,
                      std::string_view value_name = "mse") {
  if (format == OutputFormat::kCsv) {
    os << "percentile," << value_name << '\n';
    for (const auto& r : rows) {
      os << format_double(r.percentile) << ',' << format_double(r.value) << '\n';
    }
    return;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"percentile", r.percentile}, {std::string(value_name), r.value}});
  }
  os << out.dump(2) << '\n';
}

inline void write_sweep(std::ostream& os, std::span<const SweepRow> rows, OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "epsilon,mean_mse\n";
    for (const auto& r : rows) {
      os << format_double(r.epsilon) << ',' << format_double(r.mean_mse) << '\n';
    }
    return;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back({{"epsilon", r.epsilon}, {"mean_mse", r.mean_mse}});
  os << out.dump(2) << '\n';
}

inline void write_bench(std::ostream& os, std::span<const BenchRow> rows, OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    os << "decoder,median_ns\n";
    for (const auto& r : rows) os << r.decoder << ',' << r.median_ns << '\n';
    return;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back({{"decoder", r.decoder}, {"median_ns", r.median_ns}});
  os << out.dump(2) << '\n';
}

}  // namespace ldpfreq::harness
