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

// Experiment runner for the frequency-estimation mechanisms.
//
//   ldp-freq run   --mechanism pg --epsilon 5 --k 22000 --n 10000 --trials 300
//                  --dist spike --seed 42 --out results.csv
//   ldp-freq sweep --mechanism pg --epsilons 1,2,3,4,5 --k 1000 --n 10000
//   ldp-freq bench --epsilon 5 --k 22000 --n 10000
//
// Exit codes: 0 success, 2 invalid configuration, 3 parameter derivation
// failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldpfreq/ldpfreq.hpp"

namespace {

using ldpfreq::Error;
namespace harness = ldpfreq::harness;

constexpr int kExitInvalidConfig = 2;
constexpr int kExitDerivationFailure = 3;

struct CommonOptions {
  std::string mechanism = "pg";
  double epsilon = 1.0;
  std::uint64_t k = 1000;
  std::uint64_t n = 10000;
  std::uint32_t trials = 1;
  std::string dist = "spike";
  std::optional<double> zipf_s;
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string format = "csv";
  std::optional<std::uint32_t> q;
  std::optional<unsigned> t;
  std::optional<std::uint32_t> h;
  unsigned threads = 1;
  bool public_coin = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--mechanism", o.mechanism, "pg, hpg, pirappor, rr, ss, pg-pub or hpg-pub");
  app->add_option("--k", o.k, "universe size");
  app->add_option("--n", o.n, "number of users");
  app->add_option("--dist", o.dist, "spike, zipf or zipf:<s>");
  app->add_option("--zipf-s", o.zipf_s, "zipf exponent (implies --dist zipf)");
  app->add_option("--seed", o.seed, "experiment seed");
  app->add_option("--out", o.out, "output path, '-' for stdout");
  app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--q", o.q, "field size override");
  app->add_option("--t", o.t, "dimension override");
  app->add_option("--h", o.h, "block count override (hpg)");
  app->add_option("--threads", o.threads, "worker threads");
  app->add_flag("--public-coin", o.public_coin, "use the shared-randomness variant");
}

harness::ExperimentConfig to_config(const CommonOptions& o) {
  harness::ExperimentConfig c;
  c.mechanism = harness::parse_mechanism(o.mechanism);
  if (o.public_coin) {
    if (c.mechanism == harness::Mechanism::kPg) {
      c.mechanism = harness::Mechanism::kPgPub;
    } else if (c.mechanism == harness::Mechanism::kHpg) {
      c.mechanism = harness::Mechanism::kHpgPub;
    } else if (c.mechanism != harness::Mechanism::kPgPub &&
               c.mechanism != harness::Mechanism::kHpgPub) {
      throw Error(ldpfreq::ErrorCode::kInvalidArgument,
                  "--public-coin applies only to pg and hpg");
    }
  }
  c.epsilon = o.epsilon;
  c.k = o.k;
  c.n = o.n;
  c.trials = o.trials;
  c.distribution = o.zipf_s ? harness::Distribution::zipf(*o.zipf_s)
                            : harness::parse_distribution(o.dist);
  c.seed = o.seed;
  c.q = o.q;
  c.t = o.t;
  c.h = o.h;
  c.format = o.format == "json" ? harness::OutputFormat::kJson : harness::OutputFormat::kCsv;
  c.threads = o.threads;
  c.validate();
  return c;
}

// Calls `fn` with a stream for `path` ("-" is stdout).
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream file(path);
  if (!file) {
    throw Error(ldpfreq::ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
  }
  fn(file);
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : text) {
    if (ch == ',') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally private frequency estimation experiments"};
  app.require_subcommand(1);
  // "--h" is the block-count option, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");

  CommonOptions run_opts;
  std::string cdf_path;
  auto* run = app.add_subcommand("run", "repeated trials with per-trial error metrics");
  run->set_help_flag("--help", "print this help and exit");
  add_common(run, run_opts);
  run->add_option("--epsilon", run_opts.epsilon, "privacy parameter")->required();
  run->add_option("--trials", run_opts.trials, "number of trials");
  run->add_option("--cdf", cdf_path, "also write the mse CDF to this path");

  CommonOptions sweep_opts;
  std::string epsilons_text;
  auto* sweep = app.add_subcommand("sweep", "mean mse over 10 trials per epsilon");
  sweep->set_help_flag("--help", "print this help and exit");
  add_common(sweep, sweep_opts);
  sweep->add_option("--epsilons", epsilons_text, "comma-separated epsilon list")->required();

  harness::BenchConfig bench_cfg;
  std::string bench_out = "-";
  std::string bench_format = "csv";
  std::string decoders_text;
  std::optional<std::uint32_t> bench_q, bench_t, bench_hpg_t, bench_hpg_h;
  auto* bench = app.add_subcommand("bench", "median decode time per decoder");
  bench->set_help_flag("--help", "print this help and exit");
  bench->add_option("--epsilon", bench_cfg.epsilon, "privacy parameter");
  bench->add_option("--k", bench_cfg.k, "universe size");
  bench->add_option("--n", bench_cfg.n, "number of reports in the count vector");
  bench->add_option("--seed", bench_cfg.seed, "seed for the count vectors");
  bench->add_option("--q", bench_q, "field size override for pg");
  bench->add_option("--t", bench_t, "dimension override for pg");
  bench->add_option("--hpg-q", bench_cfg.hpg_q, "field size for hpg");
  bench->add_option("--hpg-t", bench_hpg_t, "dimension override for hpg");
  bench->add_option("--h", bench_hpg_h, "block count override for hpg");
  bench->add_option("--decoders", decoders_text,
                    "comma-separated subset of pg-dp,pg-naive,hpg,pirappor-dp,pirappor-naive");
  bench->add_option("--repeats", bench_cfg.repeats, "timed runs per decoder");
  bench->add_option("--out", bench_out, "output path, '-' for stdout");
  bench->add_option("--format", bench_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    if (*run) {
      const auto config = to_config(run_opts);
      const auto results = harness::run_trials(config);
      with_output(run_opts.out,
                  [&](std::ostream& os) { harness::write_trials(os, results, config.format); });
      if (!cdf_path.empty()) {
        const auto rows = harness::emit_cdf(results);
        with_output(cdf_path,
                    [&](std::ostream& os) { harness::write_cdf(os, rows, config.format); });
      }
    } else if (*sweep) {
      const auto config = to_config(sweep_opts);
      std::vector<double> epsilons;
      for (const auto& part : split_csv(epsilons_text)) {
        try {
          epsilons.push_back(std::stod(part));
        } catch (const std::exception&) {
          throw Error(ldpfreq::ErrorCode::kInvalidArgument, "bad epsilon '" + part + "'");
        }
        if (!(epsilons.back() > 0)) {
          throw Error(ldpfreq::ErrorCode::kInvalidArgument, "epsilons must be positive");
        }
      }
      const auto rows = harness::sweep_epsilon(config, epsilons);
      with_output(sweep_opts.out,
                  [&](std::ostream& os) { harness::write_sweep(os, rows, config.format); });
    } else if (*bench) {
      bench_cfg.pg = {bench_q, bench_t};
      bench_cfg.hpg = {bench_hpg_t, bench_hpg_h};
      if (!decoders_text.empty()) bench_cfg.decoders = split_csv(decoders_text);
      const auto rows = harness::bench_decode(bench_cfg);
      const auto format =
          bench_format == "json" ? harness::OutputFormat::kJson : harness::OutputFormat::kCsv;
      with_output(bench_out, [&](std::ostream& os) { harness::write_bench(os, rows, format); });
    }
  } catch (const Error& e) {
    std::cerr << "ldp-freq: " << e.what() << '\n';
    return e.is_derivation_failure() ? kExitDerivationFailure : kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "ldp-freq: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
