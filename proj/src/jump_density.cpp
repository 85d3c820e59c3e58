#include "decompound/jump_density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

double sinc(double u) {
  if (std::abs(u) < 1e-4) {
    double u2 = u * u;
    return 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
  }
  return std::sin(u) / u;
}

} // namespace

JumpDensity JumpDensity::gaussian(double mean, double sd) {
  if (!(sd > 0.0)) throw ConfigError("gaussian jump sd must be > 0");
  JumpDensity d;
  d.family_ = Family::Gaussian;
  d.params_ = {mean, sd};
  return d;
}

JumpDensity JumpDensity::laplace(double scale) {
  if (!(scale > 0.0)) throw ConfigError("laplace jump scale must be > 0");
  JumpDensity d;
  d.family_ = Family::Laplace;
  d.params_ = {scale};
  return d;
}

JumpDensity JumpDensity::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw ConfigError("gamma jump shape and scale must be > 0");
  JumpDensity d;
  d.family_ = Family::Gamma;
  d.params_ = {shape, scale};
  return d;
}

JumpDensity JumpDensity::uniform_interval(double a, double b) {
  if (!(a < b)) throw ConfigError("uniform jump interval needs a < b");
  JumpDensity d;
  d.family_ = Family::UniformInterval;
  d.params_ = {a, b};
  return d;
}

JumpDensity JumpDensity::mixture(std::vector<double> weights,
                                 std::vector<JumpDensity> components) {
  if (weights.empty() || weights.size() != components.size())
    throw ConfigError("mixture needs matching nonempty weights and components");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("mixture weights must sum to 1");
  JumpDensity d;
  d.family_ = Family::Mixture;
  d.weights_ = std::move(weights);
  d.components_ = std::move(components);
  return d;
}

double JumpDensity::pdf(double x) const {
  switch (family_) {
    case Family::Gaussian: {
      double mean = params_[0], sd = params_[1];
      double z = (x - mean) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    }
    case Family::Laplace: {
      double s = params_[0];
      return std::exp(-std::abs(x) / s) / (2.0 * s);
    }
    case Family::Gamma: {
      double k = params_[0], theta = params_[1];
      if (x <= 0.0) return 0.0;
      return std::exp((k - 1.0) * std::log(x) - x / theta
                      - std::lgamma(k) - k * std::log(theta));
    }
    case Family::UniformInterval: {
      double a = params_[0], b = params_[1];
      return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
    }
    case Family::Mixture: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * components_[i].pdf(x);
      return acc;
    }
  }
  return 0.0;
}

std::complex<double> JumpDensity::cf(double xi) const {
  using namespace std::complex_literals;
  switch (family_) {
    case Family::Gaussian: {
      double mean = params_[0], sd = params_[1];
      return std::exp(std::complex<double>(-0.5 * sd * sd * xi * xi, mean * xi));
    }
    case Family::Laplace: {
      double s = params_[0];
      return std::complex<double>(1.0 / (1.0 + s * s * xi * xi), 0.0);
    }
    case Family::Gamma: {
      // (1 - i theta xi)^{-k}; Re(base) = 1 > 0 keeps the principal
      // branch on the continuous branch for every xi.
      double k = params_[0], theta = params_[1];
      return std::pow(std::complex<double>(1.0, -theta * xi), -k);
    }
    case Family::UniformInterval: {
      double a = params_[0], b = params_[1];
      double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      return std::exp(1i * (mid * xi)) * sinc(half * xi);
    }
    case Family::Mixture: {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * components_[i].cf(xi);
      return acc;
    }
  }
  return 0.0;
}

double JumpDensity::sample(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::Gaussian: {
      std::normal_distribution<double> dist(params_[0], params_[1]);
      return dist(rng);
    }
    case Family::Laplace: {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      double u = dist(rng) - 0.5;
      double mag = -params_[0] * std::log1p(-2.0 * std::abs(u));
      return u < 0.0 ? -mag : mag;
    }
    case Family::Gamma: {
      std::gamma_distribution<double> dist(params_[0], params_[1]);
      return dist(rng);
    }
    case Family::UniformInterval: {
      std::uniform_real_distribution<double> dist(params_[0], params_[1]);
      return dist(rng);
    }
    case Family::Mixture: {
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      double u = dist(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        acc += weights_[i];
        if (u <= acc || i + 1 == weights_.size())
          return components_[i].sample(rng);
      }
      return components_.back().sample(rng);
    }
  }
  return 0.0;
}

double JumpDensity::support_half_width(double tail_mass) const {
  double log_inv = std::log(1.0 / tail_mass);
  switch (family_) {
    case Family::Gaussian: {
      double mean = params_[0], sd = params_[1];
      return std::abs(mean) + sd * std::sqrt(2.0 * log_inv) + sd;
    }
    case Family::Laplace:
      return params_[0] * (log_inv + 1.0);
    case Family::Gamma: {
      double k = params_[0], theta = params_[1];
      return theta * (k + 2.0 * log_inv + 2.0 * std::sqrt(k * log_inv));
    }
    case Family::UniformInterval:
      return std::max(std::abs(params_[0]), std::abs(params_[1]));
    case Family::Mixture: {
      double per = tail_mass / static_cast<double>(components_.size());
      double w = 0.0;
      for (const auto& comp : components_)
        w = std::max(w, comp.support_half_width(per));
      return w;
    }
  }
  return 0.0;
}

} // namespace decomp
