#pragma once

#include <complex>
#include <vector>

#include "decompound/ecf.hpp"

namespace decomp {

//! Continuous logarithm of the scaled ECF, divided by delta, on the same
//! grid. values(0) is real and equals lambda_hat; exp(delta * values)
//! reproduces the input pointwise.
struct LogGrid {
  std::vector<double> xis;
  std::vector<std::complex<double>> values;
  double delta = 1.0;
  //! Entries clamped by truncate_u, for truncation-neutrality diagnostics.
  int clamped_count = 0;
};

//! Track the continuous branch of log along the grid, outward from xi = 0
//! where the value is real positive. Each step takes the principal log of
//! the ratio of consecutive values; a step with |ratio - 1| >= 1 is bridged
//! by dyadic midpoint refinement (up to `max_refine_rounds` halvings),
//! re-evaluating the ECF from `sample_values` when provided. Without sample
//! access, or when refinement runs out, throws PhaseStepTooLarge. The
//! accumulated imaginary part is resynchronized to the principal argument
//! plus a winding integer at every grid point, so the exp round trip stays
//! at rounding level regardless of grid length.
LogGrid distinguished_log(const EcfGrid& grid, double delta,
                          const std::vector<double>* sample_values = nullptr,
                          int max_refine_rounds = 4);

//! Clamp entries with |z| > u to the real value u. u may be infinity
//! (no-op). Returns the clamp count in the result's clamped_count.
LogGrid truncate_u(const LogGrid& log_grid, double u);

namespace detail {

//! Unwrap as far along the nonnegative half as possible instead of
//! throwing; returns the largest k (offset from the center) whose log was
//! produced. Entries beyond the reach hold 0. The negative half mirrors
//! the reach by conjugation.
struct PartialLog {
  LogGrid log;
  int reached = 0;
};

PartialLog distinguished_log_partial(const EcfGrid& grid, double delta,
                                     const std::vector<double>* sample_values,
                                     int max_refine_rounds);

} // namespace detail

} // namespace decomp
