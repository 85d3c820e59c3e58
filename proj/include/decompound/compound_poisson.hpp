#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "decompound/jump_density.hpp"

namespace decomp {

//! Ground-truth model: jumps arrive at rate `lambda` per unit time with
//! sizes drawn from `jump`; the process is observed every `delta` time
//! units, so one increment aggregates Poisson(lambda * delta) jumps.
struct CompoundPoissonModel {
  double lambda = 1.0;
  JumpDensity jump = JumpDensity::gaussian(0.0, 1.0);
  double delta = 1.0;

  void validate() const;
};

//! Observed increments Z_1..Z_n at spacing delta. Increments whose jump
//! count is zero are exactly 0.0, which is what `n_zero` counts.
struct IncrementSample {
  std::vector<double> values;
  double delta = 1.0;
  std::int64_t n = 0;
  std::int64_t n_zero = 0;
};

//! Simulate n increments. Deterministic for a fixed seed. An increment with
//! no jumps is the empty sum, stored as exact 0.0.
IncrementSample sample_increments(const CompoundPoissonModel& model,
                                  std::int64_t n, std::uint64_t seed);

//! Recount n_zero after external construction or file import; exact-zero
//! detection is bitwise (jump sums hit 0.0 with probability zero).
void recount_zeros(IncrementSample& sample);

//! Characteristic function of one increment:
//! exp(delta * lambda * (cf_jump(xi) - 1)).
std::complex<double> true_cf(const CompoundPoissonModel& model, double xi);

//! The estimation target lambda * pdf_jump(x).
double true_levy_density(const CompoundPoissonModel& model, double x);

} // namespace decomp
