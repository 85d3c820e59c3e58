#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace decomp {

//! Parametric jump-size law. Each family provides a sampler, the density,
//! and the closed-form characteristic function, so it can serve both as a
//! simulation input and as an analytic oracle.
//!
//! All families are absolutely continuous, so the law puts no mass at 0.
class JumpDensity {
public:
  enum class Family { Gaussian, Laplace, Gamma, UniformInterval, Mixture };

  static JumpDensity gaussian(double mean, double sd);
  //! Centered Laplace with density exp(-|x|/scale) / (2 scale).
  static JumpDensity laplace(double scale);
  static JumpDensity gamma(double shape, double scale);
  static JumpDensity uniform_interval(double a, double b);
  //! Convex mixture; weights must be nonnegative and sum to 1 (within 1e-12).
  static JumpDensity mixture(std::vector<double> weights,
                             std::vector<JumpDensity> components);

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<JumpDensity>& components() const { return components_; }

  double pdf(double x) const;
  std::complex<double> cf(double xi) const;
  double sample(std::mt19937_64& rng) const;

  //! A window [-w, w] holding all but `tail_mass` of the distribution.
  double support_half_width(double tail_mass) const;

private:
  JumpDensity() = default;

  Family family_ = Family::Gaussian;
  std::vector<double> params_;
  std::vector<double> weights_;
  std::vector<JumpDensity> components_;
};

} // namespace decomp
