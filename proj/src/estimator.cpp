#include "decompound/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

std::vector<double> reporting_xs(const FourierGrid& grid) {
  std::vector<double> xs(static_cast<std::size_t>(grid.x_points));
  for (int i = 0; i < grid.x_points; ++i)
    xs[static_cast<std::size_t>(i)] = grid.x_at(i);
  return xs;
}

//! Inverse FFT of the assembled band, central-window extraction, spatial
//! truncation, optional clipping. `t` drives the H rule; t <= 0 disables it
//! (population mode without a horizon).
void finalize_spatial(DensityEstimate& est, const FourierGrid& grid,
                      const EstimatorConfig& config,
                      const std::vector<std::complex<double>>& a, double t,
                      int j) {
  const auto dense = inverse_fourier(grid, a);
  const int p_points = grid.x_points;
  const int off = (grid.m - p_points) / 2;
  est.values.resize(static_cast<std::size_t>(p_points));
  double residue = 0.0;
  for (int i = 0; i < p_points; ++i) {
    const auto v = dense[static_cast<std::size_t>(off + i)];
    residue = std::max(residue, std::abs(v.imag()));
    est.values[static_cast<std::size_t>(i)] = v.real();
  }
  est.imag_residue = residue;

  if (config.p < 2.0 && t > 0.0) {
    est.h_used = choose_h(t, j, config.resolved_theta_h(),
                          config.resolved_theta_h_prime());
    for (int i = 0; i < p_points; ++i)
      if (std::abs(est.xs[static_cast<std::size_t>(i)]) > est.h_used)
        est.values[static_cast<std::size_t>(i)] = 0.0;
  }

  if (config.clip_negative)
    for (auto& v : est.values) v = std::max(v, 0.0);
}

} // namespace

double EstimatorConfig::resolved_theta_h() const {
  if (theta_h > 0.0) return theta_h;
  if (p >= 2.0) return 0.0;
  return 0.375 / (1.0 / p - 0.5);
}

double EstimatorConfig::resolved_theta_h_prime() const {
  if (theta_h_prime >= 0.0) return theta_h_prime;
  return resolved_theta_h() * (1.0 - 1.0 / p);
}

void EstimatorConfig::validate() const {
  if (!(p >= 1.0)) throw ConfigError("p must lie in [1, inf]");
  op.validate();
  if (!(u_exponent > 0.0)) throw ConfigError("u_exponent must be > 0");
  if (oversampling < 1) throw ConfigError("oversampling must be >= 1");
  if (x_points < 0) throw ConfigError("x_points must be >= 0");
  if (!(x_half_width > 0.0)) throw ConfigError("x_half_width must be > 0");
  if (p < 2.0) {
    const double th = resolved_theta_h();
    const double thp = resolved_theta_h_prime();
    const double inv_gap = 1.0 / p - 0.5;
    if (!(th > 1.0 / (3.0 * inv_gap)) || !(th < 1.0 / (2.0 * inv_gap)))
      throw ConfigError(
          "theta_h must lie in (1/(3(1/p-1/2)), 1/(2(1/p-1/2)))");
    if (!(thp >= 0.0) || !(thp <= (1.0 - 1.0 / p) / (2.0 * inv_gap)))
      throw ConfigError(
          "theta_h_prime must lie in [0, (1-1/p)/(2(1/p-1/2))]");
    if (p > 1.0 && th - 2.0 * thp - 1.0 > 0.0)
      throw ConfigError(
          "theta_h - 2 theta_h_prime - 1 must be <= 0 for p in (1,2)");
  }
}

int choose_j_oracle(double t_lambda, double s, double p) {
  if (!(t_lambda >= std::exp(1.0)))
    throw ConfigError("t_lambda must be at least e");
  if (!(s > 0.0)) throw ConfigError("s must be > 0");
  double base = t_lambda;
  if (std::isinf(p)) base /= std::log(t_lambda);
  const double j = std::log2(base) / (2.0 * s + 1.0);
  return std::max(0, static_cast<int>(std::lround(j)));
}

double choose_u(double t, double vartheta_u) {
  if (!(t > 0.0)) throw ConfigError("t must be > 0");
  if (!(vartheta_u > 0.0)) throw ConfigError("vartheta_u must be > 0");
  return std::pow(t, vartheta_u);
}

double choose_h(double t, int j, double theta_h, double theta_h_prime) {
  if (!(t > 0.0)) throw ConfigError("t must be > 0");
  if (j < 0) throw ConfigError("j must be >= 0");
  const double two_j = std::ldexp(1.0, j);
  return std::pow(std::sqrt(t / two_j), theta_h) *
         std::pow(two_j, theta_h_prime);
}

namespace detail {

SpectralWorkspace build_workspace(const IncrementSample& sample,
                                  const EstimatorConfig& config, int j_band) {
  config.validate();
  if (j_band < 0 || j_band > 24)
    throw ConfigError("j must lie in [0, 24]");
  if (sample.n <= 0) throw ConfigError("sample must be nonempty");
  if (!(sample.delta > 0.0)) throw ConfigError("delta must be > 0");

  SpectralWorkspace ws;
  ws.j_band = j_band;
  ws.t = static_cast<double>(sample.n) * sample.delta;
  ws.u = choose_u(ws.t, config.u_exponent);

  const double xi_max = std::ldexp(config.op.xi_op(), j_band);
  ws.grid = make_fourier_grid(config.x_half_width, config.x_points,
                              config.oversampling, xi_max, 1 << (j_band + 4));
  ws.k_band = ws.grid.band_index(xi_max);

  ws.n_zero_positive = sample.n_zero > 0;
  if (!ws.n_zero_positive) return ws;
  ws.lambda_hat_value = lambda_hat(sample);

  const auto xis = symmetric_grid(ws.grid.dxi, ws.k_band);
  const EcfGrid raw = ecf(sample, xis);
  const std::size_t c = raw.center();

  ws.prefix_min_abs.resize(static_cast<std::size_t>(ws.k_band) + 1);
  double min_run = std::abs(raw.values[c]);
  for (int k = 0; k <= ws.k_band; ++k) {
    min_run = std::min(min_run,
                       std::abs(raw.values[c + static_cast<std::size_t>(k)]));
    ws.prefix_min_abs[static_cast<std::size_t>(k)] = min_run;
  }

  const EcfGrid scaled = scale_ecf(raw, ws.lambda_hat_value, sample.delta);
  const PartialLog part =
      distinguished_log_partial(scaled, sample.delta, &sample.values, 4);
  ws.log_reached = part.reached;

  ws.prefix_clamped.resize(static_cast<std::size_t>(ws.k_band) + 1);
  int clamp_run = std::abs(part.log.values[c]) > ws.u ? 1 : 0;
  ws.prefix_clamped[0] = clamp_run;
  for (int k = 1; k <= ws.k_band; ++k) {
    if (std::abs(part.log.values[c + static_cast<std::size_t>(k)]) > ws.u)
      clamp_run += 2;
    ws.prefix_clamped[static_cast<std::size_t>(k)] = clamp_run;
  }

  LogGrid truncated = truncate_u(part.log, ws.u);
  ws.g = std::move(truncated.values);
  return ws;
}

std::vector<std::complex<double>>
apply_operator(const FourierGrid& grid, const OperatorSpec& op, int j,
               int k_band, const std::vector<std::complex<double>>& g) {
  const int m = grid.m;
  std::vector<std::complex<double>> a(static_cast<std::size_t>(m), 0.0);
  const double level_scale = std::ldexp(1.0, -j);
  const double xi_max_j = std::ldexp(op.xi_op(), j);
  const int k_j = std::min(grid.band_index(xi_max_j), k_band);
  const auto window = [&](int q) {
    return fourier_multiplier(op, level_scale * grid.xi_at(q));
  };

  if (op.kind == OperatorKind::FlatTopConvolution) {
    for (int q = -k_j; q <= k_j; ++q)
      a[static_cast<std::size_t>(m / 2 + q)] =
          window(q) * g[static_cast<std::size_t>(k_band + q)];
    return a;
  }

  // Meyer-scale projection in the frequency domain: with h = g * Fphi(2^-j .)
  // the projected transform is Fphi(2^-j xi) times the 2 pi 2^j
  // periodization of h, which on the support collapses to three terms. The
  // period must land on the frequency lattice.
  const double shift_real = 2.0 * M_PI * std::ldexp(1.0, j) / grid.dxi;
  const long shift_round = std::lround(shift_real);
  if (std::abs(shift_real - static_cast<double>(shift_round)) >
      1e-6 * std::max(1.0, shift_real))
    throw ConfigError(
        "meyer projection needs 2*pi*2^j/dxi on the frequency lattice; "
        "adjust x_half_width or oversampling");
  const int shift = static_cast<int>(shift_round);

  std::vector<std::complex<double>> h(static_cast<std::size_t>(2 * k_j + 1));
  for (int q = -k_j; q <= k_j; ++q)
    h[static_cast<std::size_t>(k_j + q)] =
        window(q) * g[static_cast<std::size_t>(k_band + q)];
  const auto h_at = [&](int q) {
    return q >= -k_j && q <= k_j ? h[static_cast<std::size_t>(k_j + q)]
                                 : std::complex<double>(0.0);
  };
  for (int q = -k_j; q <= k_j; ++q) {
    const double w = window(q);
    if (w == 0.0) continue;
    a[static_cast<std::size_t>(m / 2 + q)] =
        w * (h_at(q) + h_at(q - shift) + h_at(q + shift));
  }
  return a;
}

DensityEstimate estimate_from_workspace(const SpectralWorkspace& ws,
                                        const EstimatorConfig& config, int j) {
  if (j < 0 || j > ws.j_band)
    throw ConfigError("j must lie within the workspace band");

  DensityEstimate est;
  est.j = j;
  est.xs = reporting_xs(ws.grid);
  est.lambda_hat = ws.lambda_hat_value;
  est.u_used = ws.u;

  const double xi_max_j = std::ldexp(config.op.xi_op(), j);
  const int k_j = std::min(ws.grid.band_index(xi_max_j), ws.k_band);
  const bool valid = ws.n_zero_positive && ws.log_reached >= k_j &&
                     ws.prefix_min_abs[static_cast<std::size_t>(k_j)] > 0.0;
  if (!valid) {
    est.values.assign(static_cast<std::size_t>(ws.grid.x_points), 0.0);
    if (config.p < 2.0 && ws.t > 0.0)
      est.h_used = choose_h(ws.t, j, config.resolved_theta_h(),
                            config.resolved_theta_h_prime());
    return est;
  }

  est.u_clamped_count = ws.prefix_clamped[static_cast<std::size_t>(k_j)];
  const auto a = apply_operator(ws.grid, config.op, j, ws.k_band, ws.g);
  finalize_spatial(est, ws.grid, config, a, ws.t, j);
  est.valid = true;
  return est;
}

} // namespace detail

DensityEstimate estimate_fixed_j(const IncrementSample& sample,
                                 const EstimatorConfig& config, int j) {
  const auto ws = detail::build_workspace(sample, config, j);
  return detail::estimate_from_workspace(ws, config, j);
}

DensityEstimate estimate_population(const CompoundPoissonModel& model,
                                    const EstimatorConfig& config, int j,
                                    std::int64_t n) {
  config.validate();
  model.validate();
  if (j < 0 || j > 24) throw ConfigError("j must lie in [0, 24]");
  if (n < 0) throw ConfigError("n must be >= 0");

  detail::SpectralWorkspace ws;
  ws.j_band = j;
  ws.t = n > 0 ? static_cast<double>(n) * model.delta : 0.0;
  const double xi_max = std::ldexp(config.op.xi_op(), j);
  ws.grid = make_fourier_grid(config.x_half_width, config.x_points,
                              config.oversampling, xi_max, 1 << (j + 4));
  ws.k_band = ws.grid.band_index(xi_max);
  ws.lambda_hat_value = model.lambda;
  ws.n_zero_positive = true;
  ws.log_reached = ws.k_band;
  ws.u = n > 0 ? choose_u(ws.t, config.u_exponent)
               : std::numeric_limits<double>::infinity();

  // Population inputs: the log of the scaled cf is exactly
  // delta * lambda * cf_jump, so g = lambda * cf_jump with no unwrapping.
  const std::size_t width = 2 * static_cast<std::size_t>(ws.k_band) + 1;
  ws.g.assign(width, 0.0);
  ws.prefix_min_abs.resize(static_cast<std::size_t>(ws.k_band) + 1);
  ws.prefix_clamped.resize(static_cast<std::size_t>(ws.k_band) + 1);
  const std::size_t c = static_cast<std::size_t>(ws.k_band);
  double min_run = std::numeric_limits<double>::infinity();
  int clamp_run = 0;
  for (int k = 0; k <= ws.k_band; ++k) {
    const double xi = ws.grid.xi_at(k);
    std::complex<double> value = model.lambda * model.jump.cf(xi);
    const double abs_phi = std::exp(model.delta *
                                    (value.real() - model.lambda));
    min_run = std::min(min_run, abs_phi);
    ws.prefix_min_abs[static_cast<std::size_t>(k)] = min_run;
    if (std::abs(value) > ws.u) {
      value = ws.u;
      clamp_run += k == 0 ? 1 : 2;
    }
    ws.prefix_clamped[static_cast<std::size_t>(k)] = clamp_run;
    ws.g[c + static_cast<std::size_t>(k)] = value;
    ws.g[c - static_cast<std::size_t>(k)] = std::conj(value);
  }

  return detail::estimate_from_workspace(ws, config, j);
}

DensityEstimate series_estimate(const IncrementSample& sample,
                                const EstimatorConfig& config, int j,
                                int terms) {
  config.validate();
  if (j < 0 || j > 24) throw ConfigError("j must lie in [0, 24]");
  if (terms < 0) throw ConfigError("terms must be >= 0");
  if (sample.n <= 0) throw ConfigError("sample must be nonempty");
  if (!(sample.delta > 0.0)) throw ConfigError("delta must be > 0");

  const double xi_max = std::ldexp(config.op.xi_op(), j);
  FourierGrid grid = make_fourier_grid(config.x_half_width, config.x_points,
                                       config.oversampling, xi_max,
                                       1 << (j + 4));
  const int k_band = grid.band_index(xi_max);
  const double t = static_cast<double>(sample.n) * sample.delta;

  DensityEstimate est;
  est.j = j;
  est.xs = reporting_xs(grid);
  if (sample.n_zero == 0) {
    est.values.assign(static_cast<std::size_t>(grid.x_points), 0.0);
    return est;
  }
  est.lambda_hat = lambda_hat(sample);
  est.series_regime_warn = est.lambda_hat * sample.delta >= std::log(2.0);

  const auto xis = symmetric_grid(grid.dxi, k_band);
  const EcfGrid scaled =
      scale_ecf(ecf(sample, xis), est.lambda_hat, sample.delta);
  const std::size_t c = scaled.center();

  // Truncated principal-log series: sum_{i=1..terms} (-1)^{i-1} w^i / i
  // with w = scaled ECF - 1. Matches the decompounding series termwise
  // after the convolution powers are expressed in the frequency domain.
  std::vector<std::complex<double>> g(2 * static_cast<std::size_t>(k_band) + 1,
                                      0.0);
  for (int q = 0; q <= k_band; ++q) {
    const std::complex<double> w =
        scaled.values[c + static_cast<std::size_t>(q)] - 1.0;
    std::complex<double> power = w;
    std::complex<double> sum = terms >= 1 ? w : std::complex<double>(0.0);
    for (int i = 2; i <= terms; ++i) {
      power *= -w;
      sum += power / static_cast<double>(i);
    }
    sum /= sample.delta;
    g[static_cast<std::size_t>(k_band + q)] = sum;
    g[static_cast<std::size_t>(k_band - q)] = std::conj(sum);
  }

  const auto a = detail::apply_operator(grid, config.op, j, k_band, g);
  finalize_spatial(est, grid, config, a, t, j);
  est.valid = true;
  return est;
}

} // namespace decomp
