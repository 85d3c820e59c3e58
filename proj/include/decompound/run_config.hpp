#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decompound/compound_poisson.hpp"
#include "decompound/estimator.hpp"
#include "decompound/lepskii.hpp"
#include "decompound/risk.hpp"

namespace decomp {

//! Fully resolved run description: every default applied, every field
//! validated at parse time. `resolved_json` holds the post-defaults
//! configuration document embedded in output manifests.
struct RunConfig {
  CompoundPoissonModel model;
  EstimatorConfig estimator;
  LepskiiConfig lepskii;
  JSelection selection;
  int series_terms = 0;
  std::int64_t n = 1000;
  int reps = 50;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<double> delta_sweep;
  std::vector<double> t_lambda_sweep;
  std::vector<double> xi_prime_list;
  double delta_exp = 0.5;
  bool write_csv = true;
  bool write_json = true;
  std::string out_dir = "out";
  std::string sample_path;
  std::string resolved_json;
};

//! Command-line values that win over config-file keys.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

//! Parse a config document; throws ConfigError naming the offending field.
RunConfig parse_run_config(const std::string& json_text,
                           const CliOverrides& overrides);
RunConfig load_run_config(const std::string& path,
                          const CliOverrides& overrides);

//! Read increments exported by run_simulate (CSV `index,value`); n_zero is
//! recounted, delta comes from the caller.
IncrementSample load_increments_csv(const std::string& path, double delta);

// Subcommand drivers. Each writes its outputs plus manifest.json into
// config.out_dir and returns the paths written. Failures throw; the CLI
// maps them onto the single-line error format and a nonzero exit.
std::vector<std::string> run_simulate(const RunConfig& config);
std::vector<std::string> run_estimate(const RunConfig& config);
std::vector<std::string> run_adapt(const RunConfig& config);
std::vector<std::string> run_bench(const RunConfig& config);
std::vector<std::string> run_ecf_diagnose(const RunConfig& config);

} // namespace decomp
