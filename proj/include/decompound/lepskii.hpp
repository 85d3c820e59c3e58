#pragma once

#include <optional>
#include <vector>

#include "decompound/estimator.hpp"

namespace decomp {

//! Knobs of the data-driven bandwidth selection. Zero values of eta and
//! eta_prime select p-dependent defaults; an absent tau selects the
//! data-driven rule backed by tau_fallback.
struct LepskiiConfig {
  double eta = 0.0;
  std::optional<double> tau;
  double c_lambda_weight = 1.0;
  double c_ms = 1.0;
  double eta_prime = 0.0;
  double tau_fallback = 2.0;

  //! Grid exponent default: 2/(1 - theta_h) + 0.5 at p = 1, 0.5 for finite
  //! p > 1, 1.5 at p = inf; each sits half a unit inside its lower bound.
  double resolved_eta(double p, double theta_h) const;
  //! Pilot-level exponent default: eta + 1.5 (bound is eta + 1).
  double resolved_eta_prime(double p, double theta_h) const;
  void validate(double p, double theta_h) const;
};

//! Record of one selection run: the level grid, the per-level estimates on
//! the common finest spatial grid, every pairwise distance entering the
//! stopping rule, and the outcome.
struct SelectionTrace {
  std::vector<int> j_values;
  std::vector<DensityEstimate> estimates;
  std::vector<std::vector<double>> pairwise_stats;
  int j_hat = 0;
  double tau_used = 0.0;
  double t = 0.0;
  double p = 2.0;
};

//! Level grid {1, .., j_max} with 2^{j_max} ~ t / log^eta(t v e); never
//! empty (degenerates to {1} for t <= e).
std::vector<int> j_grid(double t, double p, double eta);

//! Penalized level size 2^l (1 + (l + log t) [p = inf]).
double two_pl(int l, double p, double t);

//! Discrete L^p norm: (sum |v|^p spacing)^{1/p}, max |v| at p = inf.
double lp_norm(const std::vector<double>& values, double spacing, double p);

//! Data-driven threshold: c_lambda_weight / sqrt(lambda_hat) plus
//! c_ms * max{1, ||pilot estimate||_p}, the pilot level sitting below the
//! grid by the eta_prime margin. Falls back to tau_fallback when the pilot
//! is invalid.
double tau_auto(const IncrementSample& sample, const EstimatorConfig& config,
                const LepskiiConfig& lcfg);

//! Balancing selection: the smallest level j whose estimate stays within
//! tau sqrt(2^l_(p) / t) of every finer level l, or j_max when no level
//! qualifies. One spectral workspace on the widest band backs all levels.
SelectionTrace select_j(const IncrementSample& sample,
                        const EstimatorConfig& config,
                        const LepskiiConfig& lcfg);

} // namespace decomp
