#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "decompound/compound_poisson.hpp"
#include "decompound/estimator.hpp"
#include "decompound/lepskii.hpp"

namespace decomp {

//! How the Monte Carlo harness picks the level per replication: a fixed j,
//! the rate-optimal rule at a known smoothness s, or the data-driven
//! balancing selection. `population` swaps the empirical inputs for exact
//! ones (bias-only runs; incompatible with Adaptive).
struct JSelection {
  enum class Mode { Fixed, Oracle, Adaptive };
  Mode mode = Mode::Fixed;
  int j = 3;
  double s = 1.0;
  bool population = false;
  LepskiiConfig lepskii;
};

//! Summary of one experiment cell: per-replication L^p distances between
//! the estimate and the true Levy density on the reporting window, with
//! aggregate statistics. std_error is NaN when reps = 1.
struct RiskReport {
  double lambda = 0.0;
  double delta = 0.0;
  std::int64_t n = 0;
  double t = 0.0;
  double t_lambda = 0.0;
  double p = 2.0;
  int reps = 0;
  std::vector<double> errors;
  std::vector<std::uint8_t> invalid_flags;
  double mean = 0.0;
  double std_error = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double invalid_rate = 0.0;
};

//! Least-squares line through (log t_lambda, log mean risk).
struct RateFit {
  std::vector<std::pair<double, double>> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

//! Normalized ECF fluctuation statistics: per replication the sup over a
//! 1/16-step grid on [0, xi_prime] of n |phi_hat - phi|, raw and divided
//! by sqrt(t_lambda log^{1+2 delta_exp}(e + xi_prime)).
struct FluctuationStats {
  double xi_prime = 0.0;
  double delta_exp = 0.0;
  std::int64_t n = 0;
  double t_lambda = 0.0;
  int reps = 0;
  std::vector<double> raw_sup;
  std::vector<double> normalized;
  double mean_normalized = 0.0;
  double q50_normalized = 0.0;
  double q90_normalized = 0.0;
  //! Fraction of replications with raw sup above twice its empirical mean
  //! plus sqrt(32 t_lambda), the tail pivot probed qualitatively.
  double exceed_frequency = 0.0;
};

//! Replication r uses seed + r, so reports are deterministic for a fixed
//! seed and invariant under the thread count. Invalid replications
//! contribute the distance from the zero function and are counted in
//! invalid_rate.
RiskReport mc_risk(const CompoundPoissonModel& model,
                   const EstimatorConfig& config, const JSelection& sel,
                   std::int64_t n, int reps, std::uint64_t seed,
                   int threads = 1);

//! Fit log mean-risk against log t_lambda; needs three distinct t_lambda
//! values with positive mean risk.
RateFit rate_fit(const std::vector<RiskReport>& reports);

//! One report per delta at a shared horizon t_fixed = n * delta (each
//! delta must divide t_fixed). Replications share seeds across deltas so
//! ratios between cells are compared on common draws.
std::vector<RiskReport> regime_sweep(const JumpDensity& jump, double lambda,
                                     double t_fixed,
                                     const std::vector<double>& deltas,
                                     const EstimatorConfig& config,
                                     const JSelection& sel, int reps,
                                     std::uint64_t seed, int threads = 1);

FluctuationStats ecf_fluctuation_stats(const CompoundPoissonModel& model,
                                       std::int64_t n, double xi_prime,
                                       double delta_exp, int reps,
                                       std::uint64_t seed, int threads = 1);

} // namespace decomp
