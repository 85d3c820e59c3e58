#pragma once

#include <complex>
#include <vector>

namespace decomp {

//! Matched pair of centered uniform grids for FFT-based Fourier inversion.
//!
//! Reporting grid: x_i = (i - x_points/2) * dx over [-W, W), dx = 2W/x_points.
//! Transform length m = x_points * oversampling, so the frequency grid
//! xi_j = j * dxi with dxi = pi / (W * oversampling) and j in [-m/2, m/2).
//! The product dx * dxi = 2 pi / m is what makes the discrete transforms
//! below exact Riemann sums of the continuous ones on these grids.
//!
//! Oversampling densifies the frequency grid; equivalently it widens the
//! spatial period m * dx = 2 W * oversampling, pushing wraparound further out.
struct FourierGrid {
  double x_half_width = 16.0;
  int x_points = 0;
  int oversampling = 4;
  int m = 0;
  double dx = 0.0;
  double dxi = 0.0;

  double x_at(int i) const { return (i - x_points / 2) * dx; }
  double xi_at(int j) const { return j * dxi; }

  //! Largest centered frequency index j with |xi_j| <= xi_max.
  int band_index(double xi_max) const;
};

//! Build a grid whose frequency range covers [-xi_max_required, xi_max_required].
//! `x_points` = 0 picks the default for the given bandwidth level and is then
//! doubled (as is an explicit value) until the centered frequency storage
//! holds every index up to ceil(xi_max_required / dxi).
FourierGrid make_fourier_grid(double x_half_width, int x_points,
                              int oversampling, double xi_max_required,
                              int default_points);

//! Inverse transform f(x_i) = (2 pi)^{-1} sum_j A_j e^{-i xi_j x_i} dxi.
//! `a` is indexed by storage index j + m/2 and must have size m; the result
//! uses the same storage convention on the x side.
std::vector<std::complex<double>>
inverse_fourier(const FourierGrid& grid, const std::vector<std::complex<double>>& a);

//! Forward transform F(xi_j) = sum_i f(x_i) e^{i xi_j x_i} dx, storage as above.
std::vector<std::complex<double>>
forward_fourier(const FourierGrid& grid, const std::vector<std::complex<double>>& f);

} // namespace decomp
