#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "decompound/compound_poisson.hpp"
#include "decompound/distinguished_log.hpp"
#include "decompound/ecf.hpp"
#include "decompound/fourier_grid.hpp"
#include "decompound/operator_spec.hpp"

namespace decomp {

//! Knobs of the density estimator. `p` is the risk norm index in [1, inf]
//! (use INFINITY for the sup norm); it also decides whether the spatial
//! truncation H applies (p < 2) or not (p >= 2).
struct EstimatorConfig {
  double p = 2.0;
  OperatorSpec op;

  //! Exponent of the log-magnitude cap U = T^{u_exponent}, T = n delta.
  double u_exponent = 0.5;

  //! Spatial truncation exponents for p < 2; nonpositive values select the
  //! defaults theta_h = (3/8)/(1/p - 1/2) and theta_h' = theta_h (1 - 1/p),
  //! which sit strictly inside the admissible ranges for every p in [1, 2).
  double theta_h = 0.0;
  double theta_h_prime = -1.0;

  int oversampling = 4;
  //! Reporting-grid size (power of 2); 0 picks 2^{J+4}. Doubled as needed
  //! until the spatial Nyquist rate covers the working frequency band.
  int x_points = 0;
  double x_half_width = 16.0;

  //! Optional postprocessing: clip negative density values to 0.
  bool clip_negative = false;

  void validate() const;
  double resolved_theta_h() const;
  double resolved_theta_h_prime() const;
};

//! An estimate on a uniform spatial grid plus the knob values that produced
//! it. Invalid estimates (no zero increments, vanishing ECF, failed phase
//! tracking) are identically zero with valid = false.
struct DensityEstimate {
  std::vector<double> xs;
  std::vector<double> values;
  int j = 0;
  double lambda_hat = 0.0;
  bool valid = false;
  double h_used = std::numeric_limits<double>::infinity();
  double u_used = std::numeric_limits<double>::infinity();
  int u_clamped_count = 0;
  //! Set by the series route when lambda_hat * delta >= log 2, outside the
  //! series' convergence-guarantee regime.
  bool series_regime_warn = false;
  //! Max |imaginary part| discarded when realizing the inverse transform.
  double imag_residue = 0.0;

  double spacing() const { return xs.size() > 1 ? xs[1] - xs[0] : 0.0; }
};

//! Bandwidth level from the rate-optimal rule 2^J = (T_lambda / log-factor)
//! ^{1/(2s+1)}, rounded in log2. The log factor enters only at p = inf.
int choose_j_oracle(double t_lambda, double s, double p);

//! Log-magnitude cap U = T^{vartheta_u}.
double choose_u(double t, double vartheta_u);

//! Spatial truncation H = (sqrt(T / 2^j))^{theta_h} * 2^{j theta_h'}.
double choose_h(double t, int j, double theta_h, double theta_h_prime);

//! Full estimation pipeline at a fixed bandwidth level j: intensity
//! estimate, ECF on the level's frequency band, validity check, continuous
//! log, magnitude cap, operator multiplier, inverse FFT, spatial truncation.
DensityEstimate estimate_fixed_j(const IncrementSample& sample,
                                 const EstimatorConfig& config, int j);

//! Same pipeline with population inputs: the exact characteristic function
//! and the true intensity replace their estimates (the continuous log is
//! then lambda * cf_jump in closed form). Bias studies only. `n` sets the
//! horizon T for the truncation knobs; n = 0 disables both truncations.
DensityEstimate estimate_population(const CompoundPoissonModel& model,
                                    const EstimatorConfig& config, int j,
                                    std::int64_t n = 0);

//! Truncated decompounding series: the log step is replaced by
//! sum_{i=1..terms} (-1)^{i-1} (scaled ECF - 1)^i / (delta i), which is the
//! truncated principal log of the same quantity; everything downstream is
//! shared with estimate_fixed_j. No magnitude cap is applied.
DensityEstimate series_estimate(const IncrementSample& sample,
                                const EstimatorConfig& config, int j,
                                int terms);

namespace detail {

//! Everything the per-level step needs, computed once per sample on the
//! widest band: the grid, the truncated log values, and prefix minima of
//! |phi_hat| so nested narrower bands can check validity without rescans.
struct SpectralWorkspace {
  FourierGrid grid;
  int j_band = 0;
  int k_band = 0;
  std::vector<std::complex<double>> g;
  std::vector<double> prefix_min_abs;
  //! prefix_clamped[k] counts magnitude-cap clamps among indices -k..k, so
  //! a level with band k reports its own clamp count.
  std::vector<int> prefix_clamped;
  int log_reached = 0;
  double lambda_hat_value = 0.0;
  double t = 0.0;
  double u = std::numeric_limits<double>::infinity();
  bool n_zero_positive = false;
};

SpectralWorkspace build_workspace(const IncrementSample& sample,
                                  const EstimatorConfig& config, int j_band);

DensityEstimate estimate_from_workspace(const SpectralWorkspace& ws,
                                        const EstimatorConfig& config, int j);

//! Frequency-domain application of the operator at level j: plain
//! multiplier for the flat-top kernel; multiplier times the three-term
//! band periodization for the Meyer projection. `g` spans centered indices
//! -k_band..k_band.
std::vector<std::complex<double>>
apply_operator(const FourierGrid& grid, const OperatorSpec& op, int j,
               int k_band, const std::vector<std::complex<double>>& g);

} // namespace detail

} // namespace decomp
