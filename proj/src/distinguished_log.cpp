#include "decompound/distinguished_log.hpp"

#include <cmath>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

// Fresh ECF evaluation at one frequency, matching the scaling of the grid
// the unwrap runs on. Used only for refinement midpoints.
std::complex<double> ecf_point(const std::vector<double>& sample_values,
                               double xi, double scale) {
  std::complex<double> acc(0.0, 0.0);
  for (double z : sample_values)
    acc += std::complex<double>(std::cos(xi * z), std::sin(xi * z));
  return acc * (scale / static_cast<double>(sample_values.size()));
}

// Sum of principal logs along a dyadically refined path from (xi_a, va) to
// (xi_b, vb). Each accepted sub-step has |ratio - 1| < 1, hence a principal
// imaginary part below pi/2.
std::complex<double> bridge(const std::vector<double>* sample_values,
                            double scale, double xi_a,
                            std::complex<double> va, double xi_b,
                            std::complex<double> vb, int rounds_left) {
  std::complex<double> ratio = vb / va;
  if (std::abs(ratio - 1.0) < 1.0) return std::log(ratio);
  if (rounds_left <= 0 || sample_values == nullptr)
    throw PhaseStepTooLarge("consecutive ECF values too far apart for phase tracking");
  double xi_m = 0.5 * (xi_a + xi_b);
  std::complex<double> vm = ecf_point(*sample_values, xi_m, scale);
  return bridge(sample_values, scale, xi_a, va, xi_m, vm, rounds_left - 1) +
         bridge(sample_values, scale, xi_m, vm, xi_b, vb, rounds_left - 1);
}

} // namespace

namespace detail {

PartialLog distinguished_log_partial(const EcfGrid& grid, double delta,
                                     const std::vector<double>* sample_values,
                                     int max_refine_rounds) {
  if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
  if (grid.xis.empty() || grid.xis.size() % 2 != 1)
    throw ConfigError("log needs a symmetric grid with a center point");

  const std::size_t c = grid.center();
  const std::complex<double> v0 = grid.values[c];
  if (!(v0.real() > 0.0) || std::abs(v0.imag()) > 1e-12 * v0.real())
    throw ConfigError("grid value at xi=0 must be real positive");

  // Unscaled grids have value(0) = 1; scaled ones carry e^{lambda_hat delta}
  // there. Refinement midpoints must match whichever it is.
  const double scale = v0.real();

  PartialLog out;
  out.log.xis = grid.xis;
  out.log.delta = delta;
  out.log.values.assign(grid.xis.size(), {0.0, 0.0});
  out.log.values[c] = {std::log(v0.real()) / delta, 0.0};

  const int k_max = static_cast<int>(c);
  double im_running = 0.0;
  std::complex<double> prev = v0;
  int reached = 0;
  for (int k = 1; k <= k_max; ++k) {
    const std::complex<double> cur = grid.values[c + static_cast<std::size_t>(k)];
    std::complex<double> step;
    try {
      step = bridge(sample_values, scale, grid.xis[c + static_cast<std::size_t>(k - 1)],
                    prev, grid.xis[c + static_cast<std::size_t>(k)], cur,
                    max_refine_rounds);
    } catch (const PhaseStepTooLarge&) {
      break;
    }
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;

    // Snap to the principal argument plus a winding integer; the running
    // imaginary part only decides which branch we are on.
    double predicted = im_running + step.imag();
    double theta = std::arg(cur);
    double winding = std::round((predicted - theta) / (2.0 * M_PI));
    double im = theta + 2.0 * M_PI * winding;
    std::complex<double> l(std::log(std::abs(cur)), im);

    out.log.values[c + static_cast<std::size_t>(k)] = l / delta;
    out.log.values[c - static_cast<std::size_t>(k)] = std::conj(l) / delta;
    im_running = im;
    prev = cur;
    reached = k;
  }
  out.reached = reached;
  return out;
}

} // namespace detail

LogGrid distinguished_log(const EcfGrid& grid, double delta,
                          const std::vector<double>* sample_values,
                          int max_refine_rounds) {
  auto partial = detail::distinguished_log_partial(grid, delta, sample_values,
                                                   max_refine_rounds);
  if (partial.reached < static_cast<int>(grid.center()))
    throw PhaseStepTooLarge("phase tracking failed before the end of the grid");
  return std::move(partial.log);
}

LogGrid truncate_u(const LogGrid& log_grid, double u) {
  if (!(u >= 0.0)) throw ConfigError("truncation level u must be >= 0");
  LogGrid out = log_grid;
  out.clamped_count = 0;
  if (std::isinf(u)) return out;
  for (auto& z : out.values) {
    if (std::abs(z) > u) {
      z = {u, 0.0};
      ++out.clamped_count;
    }
  }
  return out;
}

} // namespace decomp
