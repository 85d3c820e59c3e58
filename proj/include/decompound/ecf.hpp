#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "decompound/compound_poisson.hpp"

namespace decomp {

//! Empirical characteristic function values on a symmetric uniform grid.
//! `scaled` distinguishes phi_hat (mean of e^{i xi Z}) from its rescaling
//! e^{lambda_hat delta} phi_hat used by the log step.
struct EcfGrid {
  std::vector<double> xis;
  std::vector<std::complex<double>> values;
  std::int64_t n = 0;
  std::int64_t n_zero = 0;
  bool scaled = false;

  std::size_t center() const { return xis.size() / 2; }
  double spacing() const { return xis.size() > 1 ? xis[1] - xis[0] : 0.0; }
};

//! Symmetric grid {-k_max..k_max} * dxi (2 k_max + 1 points, 0 included).
std::vector<double> symmetric_grid(double dxi, int k_max);

//! Evaluate the ECF. The grid must be symmetric, uniform, and contain 0;
//! values then satisfy value(0) = 1 and value(-xi) = conj(value(xi)) exactly
//! (the negative half is mirrored, not recomputed).
EcfGrid ecf(const IncrementSample& sample, const std::vector<double>& xis);

//! Intensity estimate -log(n_zero/n)/delta. Throws NoZeroIncrements when
//! the sample has no exact-zero increment.
double lambda_hat(const IncrementSample& sample);

//! Multiply by e^{lambda_hat delta}, turning phi_hat into the scaled ECF
//! whose value at 0 is n/n_zero.
EcfGrid scale_ecf(const EcfGrid& grid, double lambda_hat_value, double delta);

//! Grid-relaxed validity: no ECF value vanishes on the working band and the
//! sample has at least one zero increment.
bool validity_check(const EcfGrid& grid);

} // namespace decomp
