#include <catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "decompound/errors.hpp"
#include "decompound/run_config.hpp"

using namespace decomp;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  return parse_run_config(text, CliOverrides{});
}

//! Fresh scratch directory under the system temp root, removed on scope
//! exit so reruns start clean.
struct ScratchDir {
  fs::path path;

  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("decompound_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }

  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }

  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path.string() : (path / leaf).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.is_open());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

std::string message_of(const std::function<void()>& call) {
  try {
    call();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("config defaults from a minimal document", "[run_config]") {
  const auto config = parse(R"({"model": {"lambda": 1}})");
  REQUIRE(config.model.lambda == 1.0);
  REQUIRE(config.model.delta == 1.0);
  REQUIRE(config.n == 1000);
  REQUIRE(config.reps == 50);
  REQUIRE(config.seed == 1);
  REQUIRE(config.threads == 1);
  REQUIRE(config.estimator.p == 2.0);
  REQUIRE(config.estimator.op.kind == OperatorKind::FlatTopConvolution);
  REQUIRE(config.selection.mode == JSelection::Mode::Adaptive);
  REQUIRE(config.series_terms == 0);
  REQUIRE(config.out_dir == "out");
  REQUIRE(config.write_csv);
  REQUIRE(config.write_json);
  REQUIRE(config.sample_path.empty());
  REQUIRE(!config.lepskii.tau.has_value());
}

TEST_CASE("config errors name the offending field", "[run_config]") {
  SECTION("missing intensity") {
    const auto message =
        message_of([] { parse(R"({"model": {}})"); });
    REQUIRE(message.find("model.lambda") != std::string::npos);
  }

  SECTION("nonpositive intensity") {
    const auto message =
        message_of([] { parse(R"({"model": {"lambda": 0}})"); });
    REQUIRE(message.find("model.lambda") != std::string::npos);
  }

  SECTION("unknown keys are rejected by name") {
    const auto message = message_of(
        [] { parse(R"({"model": {"lambda": 1, "lamda": 2}})"); });
    REQUIRE(message.find("lamda") != std::string::npos);
  }

  SECTION("top-level unknown section") {
    REQUIRE_THROWS_AS(parse(R"({"model": {"lambda": 1}, "extra": {}})"),
                      ConfigError);
  }

  SECTION("malformed document") {
    REQUIRE_THROWS_AS(parse("{"), ConfigError);
  }
}

TEST_CASE("config parses estimator choices", "[run_config]") {
  SECTION("infinite norm index") {
    const auto config = parse(
        R"({"model": {"lambda": 1}, "estimator": {"p": "inf"}})");
    REQUIRE(std::isinf(config.estimator.p));
  }

  SECTION("meyer operator") {
    const auto config = parse(
        R"({"model": {"lambda": 1},
            "estimator": {"operator": {"kind": "meyer"}}})");
    REQUIRE(config.estimator.op.kind == OperatorKind::MeyerProjection);
  }

  SECTION("level selection modes") {
    auto fixed = parse(
        R"({"model": {"lambda": 1}, "estimator": {"j": 4}})");
    REQUIRE(fixed.selection.mode == JSelection::Mode::Fixed);
    REQUIRE(fixed.selection.j == 4);

    auto oracle = parse(
        R"({"model": {"lambda": 1},
            "estimator": {"j": "oracle", "oracle_s": 1.5}})");
    REQUIRE(oracle.selection.mode == JSelection::Mode::Oracle);
    REQUIRE(oracle.selection.s == 1.5);

    auto adaptive = parse(
        R"({"model": {"lambda": 1}, "estimator": {"j": "adaptive"}})");
    REQUIRE(adaptive.selection.mode == JSelection::Mode::Adaptive);

    REQUIRE_THROWS_AS(
        parse(R"({"model": {"lambda": 1}, "estimator": {"j": "best"}})"),
        ConfigError);
  }

  SECTION("threshold forms") {
    auto fixed = parse(
        R"({"model": {"lambda": 1}, "lepskii": {"tau": 0.5}})");
    REQUIRE(fixed.lepskii.tau.has_value());
    REQUIRE(*fixed.lepskii.tau == 0.5);

    auto zero = parse(
        R"({"model": {"lambda": 1}, "lepskii": {"tau": 0}})");
    REQUIRE(zero.lepskii.tau.has_value());
    REQUIRE(*zero.lepskii.tau == 0.0);

    auto automatic = parse(
        R"({"model": {"lambda": 1}, "lepskii": {"tau": "auto"}})");
    REQUIRE(!automatic.lepskii.tau.has_value());

    REQUIRE_THROWS_AS(
        parse(R"({"model": {"lambda": 1}, "lepskii": {"tau": "later"}})"),
        ConfigError);
  }

  SECTION("jump families") {
    auto mixture = parse(
        R"({"model": {"lambda": 1,
                      "family": "mixture",
                      "params": {"components": [
                        {"weight": 0.7, "family": "gaussian"},
                        {"weight": 0.3, "family": "laplace",
                         "params": {"scale": 2.0}}]}}})");
    REQUIRE(mixture.model.jump.family() == JumpDensity::Family::Mixture);

    REQUIRE_THROWS_AS(
        parse(R"({"model": {"lambda": 1, "family": "cauchy"}})"),
        ConfigError);
  }
}

TEST_CASE("experiment size comes from n or t exclusively", "[run_config]") {
  SECTION("t converts to a whole number of increments") {
    const auto config = parse(
        R"({"model": {"lambda": 1, "delta": 0.5},
            "experiment": {"t": 500}})");
    REQUIRE(config.n == 1000);
  }

  SECTION("both n and t is ambiguous") {
    REQUIRE_THROWS_AS(parse(R"({"model": {"lambda": 1},
                                "experiment": {"n": 10, "t": 10}})"),
                      ConfigError);
  }

  SECTION("t must be a multiple of delta") {
    REQUIRE_THROWS_AS(parse(R"({"model": {"lambda": 1, "delta": 0.7},
                                "experiment": {"t": 1}})"),
                      ConfigError);
  }

  SECTION("nonpositive reps") {
    REQUIRE_THROWS_AS(parse(R"({"model": {"lambda": 1},
                                "experiment": {"reps": 0}})"),
                      ConfigError);
  }

  SECTION("nonpositive tail exponent") {
    REQUIRE_THROWS_AS(parse(R"({"model": {"lambda": 1},
                                "experiment": {"delta_exp": 0}})"),
                      ConfigError);
  }
}

TEST_CASE("command line values win over the document", "[run_config]") {
  CliOverrides overrides;
  overrides.seed = 99;
  overrides.out_dir = "elsewhere";
  overrides.threads = 4;
  const auto config = parse_run_config(
      R"({"model": {"lambda": 1},
          "experiment": {"seed": 2, "threads": 2},
          "output": {"dir": "from_file"}})",
      overrides);
  REQUIRE(config.seed == 99);
  REQUIRE(config.out_dir == "elsewhere");
  REQUIRE(config.threads == 4);
}

TEST_CASE("resolved document echoes the applied defaults", "[run_config]") {
  const auto config = parse(
      R"({"model": {"lambda": 2, "delta": 0.5},
          "estimator": {"p": 1}})");
  const auto doc = nlohmann::json::parse(config.resolved_json);
  REQUIRE(doc["model"]["lambda"] == 2.0);
  REQUIRE(doc["estimator"]["p"] == 1.0);
  REQUIRE(doc["estimator"]["theta_h"] == 0.75);
  REQUIRE(doc["estimator"]["theta_h_prime"] == 0.0);
  REQUIRE(doc["lepskii"]["tau"] == "auto");
  REQUIRE(doc["lepskii"]["eta"].is_number());
  REQUIRE(doc["lepskii"]["eta_prime"].is_number());
  REQUIRE(doc["output"]["formats"].is_array());

  const auto wide = parse(R"({"model": {"lambda": 1}})");
  const auto wide_doc = nlohmann::json::parse(wide.resolved_json);
  REQUIRE(wide_doc["estimator"]["theta_h"].is_null());
}

TEST_CASE("increment files round trip", "[run_config]") {
  ScratchDir dir("roundtrip");

  RunConfig config = parse(R"({"model": {"lambda": 0.8}})");
  config.n = 10;
  config.seed = 7;
  config.out_dir = dir.str("sim");
  const auto written = run_simulate(config);
  REQUIRE(written.size() >= 2);

  const auto csv_path = dir.str("sim") + "/increments.csv";
  const auto text = slurp(csv_path);
  REQUIRE(text.rfind("index,value", 0) == 0);
  REQUIRE(count_lines(text) == 11);

  SECTION("values reload exactly") {
    const auto sample = load_increments_csv(csv_path, 1.0);
    REQUIRE(sample.n == 10);
    REQUIRE(sample.delta == 1.0);
    const auto direct = sample_increments(config.model, 10, 7);
    REQUIRE(sample.values == direct.values);
    REQUIRE(sample.n_zero == direct.n_zero);
  }

  SECTION("same seed writes identical bytes") {
    RunConfig again = config;
    again.out_dir = dir.str("sim2");
    run_simulate(again);
    REQUIRE(slurp(dir.str("sim2") + "/increments.csv") == text);
  }

  SECTION("header must match") {
    const auto bad = dir.str("bad.csv");
    std::ofstream(bad) << "idx,value\n0,1.0\n";
    const auto message =
        message_of([&] { (void)load_increments_csv(bad, 1.0); });
    REQUIRE(message.find("header") != std::string::npos);
  }

  SECTION("indices must be consecutive") {
    const auto bad = dir.str("gap.csv");
    std::ofstream(bad) << "index,value\n0,1.0\n2,2.0\n";
    REQUIRE_THROWS_AS(load_increments_csv(bad, 1.0), ConfigError);
  }

  SECTION("values must be finite numbers") {
    const auto bad = dir.str("nan.csv");
    std::ofstream(bad) << "index,value\n0,abc\n";
    REQUIRE_THROWS_AS(load_increments_csv(bad, 1.0), ConfigError);
  }

  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_increments_csv(dir.str("absent.csv"), 1.0),
                      IoError);
  }
}

TEST_CASE("estimate runs write sidecar metadata", "[run_config]") {
  ScratchDir dir("estimate");

  RunConfig config = parse(
      R"({"model": {"lambda": 0.5, "delta": 0.5},
          "estimator": {"j": 4},
          "experiment": {"n": 400, "seed": 3}})");
  config.out_dir = dir.str("est");
  const auto written = run_estimate(config);

  const auto meta =
      nlohmann::json::parse(slurp(dir.str("est") + "/estimate_meta.json"));
  REQUIRE(meta["j"] == 4);
  REQUIRE(meta["valid"].is_boolean());
  REQUIRE(meta["lambda_hat"].is_number());
  REQUIRE(meta["adaptive"] == false);

  const auto manifest =
      nlohmann::json::parse(slurp(dir.str("est") + "/manifest.json"));
  REQUIRE(manifest["subcommand"] == "estimate");
  REQUIRE(manifest["outputs"].is_array());
  REQUIRE(manifest["config"]["model"]["lambda"] == 0.5);

  const auto estimate = slurp(dir.str("est") + "/estimate.csv");
  REQUIRE(estimate.rfind("x,nu_hat", 0) == 0);
}

TEST_CASE("bench runs summarize sweeps", "[run_config]") {
  ScratchDir dir("bench");

  SECTION("three-point sweep fits a rate") {
    RunConfig config = parse(
        R"({"model": {"lambda": 1, "delta": 0.5},
            "estimator": {"j": 3},
            "experiment": {"reps": 2, "seed": 4,
                           "t_lambda_sweep": [50, 100, 200]}})");
    config.out_dir = dir.str("sweep");
    run_bench(config);

    const auto summary =
        nlohmann::json::parse(slurp(dir.str("sweep") + "/risk_summary.json"));
    REQUIRE(summary["reports"].size() == 3);

    const auto fit =
        nlohmann::json::parse(slurp(dir.str("sweep") + "/rate_fit.json"));
    REQUIRE(fit["points"].size() == 3);
    REQUIRE(fit["slope"].is_number());

    const auto reps_csv = slurp(dir.str("sweep") + "/risk_reps.csv");
    REQUIRE(reps_csv.rfind("t_lambda,t,delta,n,rep,error,valid", 0) == 0);
    REQUIRE(count_lines(reps_csv) == 7);
  }

  SECTION("single replication serializes a null spread") {
    RunConfig config = parse(
        R"({"model": {"lambda": 1, "delta": 0.5},
            "estimator": {"j": 3},
            "experiment": {"n": 200, "reps": 1, "seed": 4}})");
    config.out_dir = dir.str("single");
    run_bench(config);
    const auto summary =
        nlohmann::json::parse(slurp(dir.str("single") + "/risk_summary.json"));
    REQUIRE(summary["reports"].size() == 1);
    REQUIRE(summary["reports"][0]["std_error"].is_null());
  }

  SECTION("series bench is rejected") {
    RunConfig config = parse(
        R"({"model": {"lambda": 1},
            "estimator": {"j": 3, "series_terms": 10}})");
    config.out_dir = dir.str("series");
    REQUIRE_THROWS_AS(run_bench(config), ConfigError);
  }
}

TEST_CASE("ecf diagnosis writes one row per band edge", "[run_config]") {
  ScratchDir dir("ecf");

  RunConfig config = parse(
      R"({"model": {"lambda": 1, "delta": 0.5},
          "experiment": {"n": 300, "reps": 4, "seed": 6,
                         "xi_prime": [10, 100]}})");
  config.out_dir = dir.str("diag");
  run_ecf_diagnose(config);

  const auto fluct = slurp(dir.str("diag") + "/fluctuation.csv");
  REQUIRE(count_lines(fluct) == 3);
  const auto reps_rows = slurp(dir.str("diag") + "/fluctuation_reps.csv");
  REQUIRE(count_lines(reps_rows) == 9);

  const auto summary = nlohmann::json::parse(
      slurp(dir.str("diag") + "/fluctuation_summary.json"));
  REQUIRE(summary["stats"].size() == 2);

  SECTION("the band list is required") {
    RunConfig missing = parse(
        R"({"model": {"lambda": 1}, "experiment": {"n": 300}})");
    missing.out_dir = dir.str("missing");
    REQUIRE_THROWS_AS(run_ecf_diagnose(missing), ConfigError);
  }
}

TEST_CASE("reruns produce identical bytes", "[run_config]") {
  ScratchDir dir("determinism");

  RunConfig config = parse(
      R"({"model": {"lambda": 0.5, "delta": 0.5},
          "estimator": {"j": 3},
          "experiment": {"n": 300, "seed": 12}})");
  config.out_dir = dir.str("a");
  run_estimate(config);
  RunConfig other = config;
  other.out_dir = dir.str("b");
  run_estimate(other);

  for (const char* leaf :
       {"/estimate.csv", "/estimate_meta.json", "/manifest.json"}) {
    INFO(leaf);
    REQUIRE(slurp(dir.str("a") + leaf) == slurp(dir.str("b") + leaf));
  }
}
