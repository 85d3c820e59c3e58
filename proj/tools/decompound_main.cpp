#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decompound/errors.hpp"
#include "decompound/run_config.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 1;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--seed", seed, "Override experiment.seed");
    sub->add_option("--out", out_dir, "Override output.dir");
    sub->add_option("--threads", threads, "Override experiment.threads");
  }

  //! Overrides carry only the flags the user actually passed; file values
  //! win otherwise.
  decomp::CliOverrides overrides(const CLI::App* sub) const {
    decomp::CliOverrides over;
    if (sub->count("--seed") > 0) over.seed = seed;
    if (sub->count("--out") > 0) over.out_dir = out_dir;
    if (sub->count("--threads") > 0) over.threads = threads;
    return over;
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric jump measure estimation for compound Poisson "
               "increments"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* simulate =
      app.add_subcommand("simulate", "Draw increments and write them to CSV");
  auto* estimate =
      app.add_subcommand("estimate", "Estimate the jump measure density");
  auto* adapt = app.add_subcommand(
      "adapt", "Estimate with data-driven resolution selection");
  auto* bench =
      app.add_subcommand("bench", "Monte Carlo risk, optionally over a sweep");
  auto* diagnose = app.add_subcommand(
      "ecf-diagnose", "Empirical characteristic function diagnostics");
  for (auto* sub : {simulate, estimate, adapt, bench, diagnose})
    flags.attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    const decomp::RunConfig config =
        decomp::load_run_config(flags.config_path, flags.overrides(sub));
    std::vector<std::string> written;
    if (simulate->parsed())
      written = decomp::run_simulate(config);
    else if (estimate->parsed())
      written = decomp::run_estimate(config);
    else if (adapt->parsed())
      written = decomp::run_adapt(config);
    else if (bench->parsed())
      written = decomp::run_bench(config);
    else
      written = decomp::run_ecf_diagnose(config);
    for (const auto& path : written) std::cout << path << '\n';
    return 0;
  } catch (const decomp::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}
