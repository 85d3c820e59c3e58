#include "decompound/ecf.hpp"

#include <cmath>

#include "decompound/errors.hpp"

namespace decomp {

std::vector<double> symmetric_grid(double dxi, int k_max) {
  if (!(dxi > 0.0) || k_max < 0) throw ConfigError("bad ECF grid parameters");
  std::vector<double> xis(static_cast<std::size_t>(2 * k_max + 1));
  for (int k = -k_max; k <= k_max; ++k)
    xis[static_cast<std::size_t>(k + k_max)] = k * dxi;
  return xis;
}

EcfGrid ecf(const IncrementSample& sample, const std::vector<double>& xis) {
  if (sample.n < 1 || sample.values.empty())
    throw ConfigError("ECF needs a nonempty sample");
  if (xis.size() % 2 != 1)
    throw ConfigError("ECF grid must be symmetric around 0 (odd size)");
  const std::size_t center = xis.size() / 2;
  const double dxi = xis.size() > 1 ? xis[center + 1] - xis[center] : 1.0;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    double expected = (static_cast<double>(i) - static_cast<double>(center)) * dxi;
    if (std::abs(xis[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw ConfigError("ECF grid must be uniform and symmetric with 0 included");
  }

  const int k_max = static_cast<int>(center);
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(k_max + 1), 0.0);

  // Incremental rotation along the nonnegative half, refreshed from sincos
  // every 128 steps to stop the O(k) drift of repeated complex products.
  for (double z : sample.values) {
    const std::complex<double> step(std::cos(dxi * z), std::sin(dxi * z));
    std::complex<double> w(1.0, 0.0);
    for (int k = 0; k <= k_max; ++k) {
      if (k % 128 == 0) {
        double arg = xis[center + static_cast<std::size_t>(k)] * z;
        w = {std::cos(arg), std::sin(arg)};
      }
      acc[static_cast<std::size_t>(k)] += w;
      w *= step;
    }
  }

  EcfGrid grid;
  grid.xis = xis;
  grid.values.resize(xis.size());
  grid.n = sample.n;
  grid.n_zero = sample.n_zero;
  const double inv_n = 1.0 / static_cast<double>(sample.n);
  for (int k = 0; k <= k_max; ++k) {
    std::complex<double> v = acc[static_cast<std::size_t>(k)] * inv_n;
    grid.values[center + static_cast<std::size_t>(k)] = v;
    grid.values[center - static_cast<std::size_t>(k)] = std::conj(v);
  }
  return grid;
}

double lambda_hat(const IncrementSample& sample) {
  if (sample.n < 1) throw ConfigError("intensity estimate needs n >= 1");
  if (sample.n_zero == 0)
    throw NoZeroIncrements("no zero increments; intensity estimate undefined");
  return -std::log(static_cast<double>(sample.n_zero) /
                   static_cast<double>(sample.n)) / sample.delta;
}

EcfGrid scale_ecf(const EcfGrid& grid, double lambda_hat_value, double delta) {
  if (grid.scaled) throw ConfigError("ECF grid is already scaled");
  EcfGrid out = grid;
  out.scaled = true;
  const double factor = std::exp(lambda_hat_value * delta);
  for (auto& v : out.values) v *= factor;
  return out;
}

bool validity_check(const EcfGrid& grid) {
  if (grid.n_zero == 0) return false;
  for (const auto& v : grid.values)
    if (std::abs(v) == 0.0) return false;
  return true;
}

} // namespace decomp
