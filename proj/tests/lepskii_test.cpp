#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "decompound/compound_poisson.hpp"
#include "decompound/errors.hpp"
#include "decompound/lepskii.hpp"

using namespace decomp;

namespace {

IncrementSample laplace_sample(std::int64_t n, std::uint64_t seed,
                               double lambda = 1.0, double delta = 0.5) {
  CompoundPoissonModel model;
  model.lambda = lambda;
  model.jump = JumpDensity::laplace(1.0);
  model.delta = delta;
  return sample_increments(model, n, seed);
}

//! n increments with exactly `zeros` zeros, so the intensity estimate is
//! fixed by construction; the rest are drawn from the given jump law, which
//! keeps the ECF bounded away from zero on the working band.
IncrementSample engineered_sample(int n, int zeros, double delta,
                                  const JumpDensity& jump,
                                  std::uint64_t seed) {
  IncrementSample sample;
  sample.delta = delta;
  sample.n = n;
  sample.values.assign(static_cast<std::size_t>(zeros), 0.0);
  std::mt19937_64 rng(seed);
  for (int i = zeros; i < n; ++i) sample.values.push_back(jump.sample(rng));
  recount_zeros(sample);
  return sample;
}

} // namespace

TEST_CASE("level grid from the horizon", "[lepskii]") {
  const double e = std::exp(1.0);

  SECTION("smallest admissible horizon") {
    const auto grid = j_grid(e, 2.0, 0.5);
    REQUIRE(grid == std::vector<int>{1});
  }

  SECTION("worked value at T = 4096") {
    const auto grid = j_grid(4096.0, 2.0, 0.5);
    REQUIRE(grid.size() == 10);
    REQUIRE(grid.front() == 1);
    REQUIRE(grid.back() == 10);
  }

  SECTION("grows with the horizon") {
    const auto small = j_grid(512.0, 2.0, 0.5);
    const auto large = j_grid(8192.0, 2.0, 0.5);
    REQUIRE(large.size() >= small.size());
    REQUIRE(std::includes(large.begin(), large.end(), small.begin(),
                          small.end()));
  }

  SECTION("bad arguments") {
    REQUIRE_THROWS_AS(j_grid(0.0, 2.0, 0.5), ConfigError);
    REQUIRE_THROWS_AS(j_grid(100.0, 2.0, 0.0), ConfigError);
  }
}

TEST_CASE("penalized level size", "[lepskii]") {
  REQUIRE(two_pl(3, 2.0, 100.0) == 8.0);
  REQUIRE(two_pl(1, 1.0, 100.0) == 2.0);
  const double e2 = std::exp(2.0);
  REQUIRE(two_pl(3, std::numeric_limits<double>::infinity(), e2) ==
          Catch::Approx(48.0));
}

TEST_CASE("discrete Lp norms", "[lepskii]") {
  SECTION("indicator mass") {
    std::vector<double> values(100, 1.0);
    REQUIRE(std::abs(lp_norm(values, 0.01, 1.0) - 1.0) < 0.011);
  }

  SECTION("gaussian pdf in L2") {
    std::vector<double> values;
    const double spacing = 0.001;
    for (double x = -10.0; x <= 10.0; x += spacing)
      values.push_back(std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI));
    const double expected = std::pow(2.0 * std::sqrt(M_PI), -0.5);
    REQUIRE(std::abs(lp_norm(values, spacing, 2.0) - expected) < 1e-4);
  }

  SECTION("sup norm ignores spacing") {
    std::vector<double> values{0.5, -3.0, 2.0};
    REQUIRE(lp_norm(values, 0.0, std::numeric_limits<double>::infinity()) ==
            3.0);
  }

  SECTION("finite p needs a positive spacing") {
    REQUIRE_THROWS_AS(lp_norm({1.0, 2.0}, 0.0, 2.0), ConfigError);
  }
}

TEST_CASE("selection on degenerate and genuine samples", "[lepskii]") {
  EstimatorConfig config;
  LepskiiConfig lcfg;

  SECTION("identical estimates select the coarsest level") {
    IncrementSample flat;
    flat.values.assign(64, 0.0);
    flat.delta = 1.0;
    flat.n = 64;
    recount_zeros(flat);
    const auto trace = select_j(flat, config, lcfg);
    REQUIRE(trace.j_hat == trace.j_values.front());
  }

  SECTION("zero threshold with nonzero differences falls back to the finest") {
    const auto sample = laplace_sample(2000, 5);
    lcfg.tau = 0.0;
    const auto trace = select_j(sample, config, lcfg);
    REQUIRE(trace.j_hat == trace.j_values.back());
    REQUIRE(trace.tau_used == 0.0);
  }

  SECTION("selected level is nonincreasing in the threshold") {
    const auto sample = laplace_sample(2000, 6);
    int prev = std::numeric_limits<int>::max();
    for (double tau : {0.0, 0.25, 0.5, 1.0, 2.0, 8.0}) {
      lcfg.tau = tau;
      const auto trace = select_j(sample, config, lcfg);
      REQUIRE(trace.j_hat <= prev);
      prev = trace.j_hat;
    }
  }

  SECTION("trace is complete and symmetric") {
    const auto sample = laplace_sample(1000, 7);
    const auto trace = select_j(sample, config, lcfg);
    const std::size_t count = trace.j_values.size();
    REQUIRE(trace.estimates.size() == count);
    REQUIRE(trace.pairwise_stats.size() == count);
    for (std::size_t a = 0; a < count; ++a) {
      REQUIRE(trace.pairwise_stats[a].size() == count);
      REQUIRE(trace.pairwise_stats[a][a] == 0.0);
      for (std::size_t b = 0; b < count; ++b)
        REQUIRE(trace.pairwise_stats[a][b] ==
                Catch::Approx(trace.pairwise_stats[b][a]));
    }

    SECTION("every rejected level has a witness") {
      for (std::size_t a = 0;
           trace.j_values[a] < trace.j_hat && a < count; ++a) {
        bool witnessed = false;
        for (std::size_t b = a + 1; b < count; ++b) {
          const double bound =
              trace.tau_used *
              std::sqrt(two_pl(trace.j_values[b], trace.p, trace.t) /
                        trace.t);
          if (trace.pairwise_stats[a][b] > bound) witnessed = true;
        }
        REQUIRE(witnessed);
      }
    }
  }
}

TEST_CASE("data-driven threshold", "[lepskii]") {
  EstimatorConfig config;
  LepskiiConfig lcfg;

  SECTION("exact intensity four gives a one-half first term") {
    const auto sample = engineered_sample(160, 10, std::log(2.0),
                                          JumpDensity::gaussian(0.0, 0.01), 3);
    lcfg.c_ms = 0.0;
    const double tau = tau_auto(sample, config, lcfg);
    REQUIRE(std::abs(tau - 0.5) < 1e-12);
  }

  SECTION("unit intensity with a small pilot floors at two") {
    const auto sample =
        engineered_sample(2000, 1000, std::log(2.0),
                          JumpDensity::uniform_interval(-8.0, 8.0), 4);
    const double tau = tau_auto(sample, config, lcfg);
    REQUIRE(std::abs(tau - 2.0) < 1e-12);
  }

  SECTION("the model-selection summand is linear in its weight") {
    const auto sample = laplace_sample(1500, 9);
    lcfg.c_ms = 0.0;
    const double base = tau_auto(sample, config, lcfg);
    lcfg.c_ms = 1.0;
    const double one = tau_auto(sample, config, lcfg);
    lcfg.c_ms = 2.0;
    const double two = tau_auto(sample, config, lcfg);
    REQUIRE(std::abs((two - base) - 2.0 * (one - base)) < 1e-12);
  }

  SECTION("degenerate samples fall back") {
    IncrementSample flat;
    flat.values.assign(64, 0.0);
    flat.delta = 1.0;
    flat.n = 64;
    recount_zeros(flat);
    lcfg.tau_fallback = 3.5;
    REQUIRE(tau_auto(flat, config, lcfg) == 3.5);
  }
}

TEST_CASE("lepskii configuration validation", "[lepskii]") {
  LepskiiConfig lcfg;
  EstimatorConfig config;

  SECTION("defaults pass for common norm indices") {
    for (double p : {1.0, 2.0}) {
      config.p = p;
      lcfg.validate(p, config.resolved_theta_h());
    }
  }

  SECTION("eta below its lower bound is rejected at p = 1") {
    lcfg.eta = 1.0;
    REQUIRE_THROWS_AS(lcfg.validate(1.0, 0.75), ConfigError);
  }

  SECTION("eta_prime must exceed eta plus one") {
    lcfg.eta = 0.5;
    lcfg.eta_prime = 1.2;
    REQUIRE_THROWS_AS(lcfg.validate(2.0, 0.0), ConfigError);
  }

  SECTION("negative threshold is rejected") {
    lcfg.tau = -0.5;
    REQUIRE_THROWS_AS(lcfg.validate(2.0, 0.0), ConfigError);
  }
}

TEST_CASE("smoother targets select coarser levels", "[lepskii]") {
  EstimatorConfig config;
  LepskiiConfig lcfg;

  CompoundPoissonModel smooth;
  smooth.lambda = 1.0;
  smooth.jump = JumpDensity::gaussian(0.0, 1.0);
  smooth.delta = 0.5;

  CompoundPoissonModel sharp = smooth;
  sharp.jump = JumpDensity::mixture(
      {0.7, 0.3},
      {JumpDensity::gaussian(0.0, 1.0), JumpDensity::gaussian(0.0, 0.05)});

  std::vector<int> smooth_j;
  std::vector<int> sharp_j;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    smooth_j.push_back(
        select_j(sample_increments(smooth, 2000, seed), config, lcfg).j_hat);
    sharp_j.push_back(
        select_j(sample_increments(sharp, 2000, seed), config, lcfg).j_hat);
  }
  std::sort(smooth_j.begin(), smooth_j.end());
  std::sort(sharp_j.begin(), sharp_j.end());
  REQUIRE(smooth_j[5] <= sharp_j[5]);
}
