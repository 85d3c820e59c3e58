#include "decompound/lepskii.hpp"

#include <algorithm>
#include <cmath>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

double eta_lower_bound(double p, double theta_h) {
  if (p == 1.0) return 2.0 / (1.0 - theta_h);
  if (std::isinf(p)) return 1.0;
  return 0.0;
}

int pilot_level(double t, double eta_prime, int j_max) {
  const double logs = std::pow(std::log(std::max(t, std::exp(1.0))), eta_prime);
  const int j = static_cast<int>(std::floor(std::log2(t / logs)));
  return std::clamp(j, 1, j_max);
}

double tau_auto_from_workspace(const detail::SpectralWorkspace& ws,
                               const EstimatorConfig& config,
                               const LepskiiConfig& lcfg, double eta_prime) {
  const int pilot_j = pilot_level(ws.t, eta_prime, ws.j_band);
  const DensityEstimate pilot =
      detail::estimate_from_workspace(ws, config, pilot_j);
  if (!pilot.valid || !(pilot.lambda_hat > 0.0)) return lcfg.tau_fallback;
  const double norm = lp_norm(pilot.values, pilot.spacing(), config.p);
  return lcfg.c_lambda_weight / std::sqrt(pilot.lambda_hat) +
         lcfg.c_ms * std::max(1.0, norm);
}

} // namespace

double LepskiiConfig::resolved_eta(double p, double theta_h) const {
  if (eta > 0.0) return eta;
  return eta_lower_bound(p, theta_h) + 0.5;
}

double LepskiiConfig::resolved_eta_prime(double p, double theta_h) const {
  if (eta_prime > 0.0) return eta_prime;
  return resolved_eta(p, theta_h) + 1.5;
}

void LepskiiConfig::validate(double p, double theta_h) const {
  if (eta < 0.0)
    throw ConfigError("eta must be positive (0 selects the default)");
  if (eta > 0.0 && !(eta > eta_lower_bound(p, theta_h)))
    throw ConfigError("eta is below the admissible bound for this p");
  if (eta_prime < 0.0)
    throw ConfigError("eta_prime must be positive (0 selects the default)");
  if (eta_prime > 0.0 && !(eta_prime > resolved_eta(p, theta_h) + 1.0))
    throw ConfigError("eta_prime must exceed eta + 1");
  if (tau && !(*tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (!(c_lambda_weight >= 0.0) || !(c_ms >= 0.0))
    throw ConfigError("tau constants must be >= 0");
  if (c_lambda_weight == 0.0 && c_ms == 0.0)
    throw ConfigError("tau constants must not both be 0");
  if (!(tau_fallback > 0.0)) throw ConfigError("tau_fallback must be > 0");
}

std::vector<int> j_grid(double t, double p, double eta) {
  (void)p;
  if (!(t > 0.0)) throw ConfigError("t must be > 0");
  if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
  const double logs = std::pow(std::log(std::max(t, std::exp(1.0))), eta);
  const int j_max =
      std::max(1, static_cast<int>(std::floor(std::log2(t / logs))));
  std::vector<int> grid(static_cast<std::size_t>(j_max));
  for (int j = 1; j <= j_max; ++j) grid[static_cast<std::size_t>(j - 1)] = j;
  return grid;
}

double two_pl(int l, double p, double t) {
  if (l < 1) throw ConfigError("l must be >= 1");
  if (!(t > 0.0)) throw ConfigError("t must be > 0");
  const double base = std::ldexp(1.0, l);
  if (std::isinf(p)) return base * (1.0 + l + std::log(t));
  return base;
}

double lp_norm(const std::vector<double>& values, double spacing, double p) {
  if (!(p >= 1.0)) throw ConfigError("p must lie in [1, inf]");
  if (std::isinf(p)) {
    double best = 0.0;
    for (double v : values) best = std::max(best, std::abs(v));
    return best;
  }
  if (!(spacing > 0.0)) throw ConfigError("spacing must be > 0");
  double sum = 0.0;
  for (double v : values) sum += std::pow(std::abs(v), p);
  return std::pow(sum * spacing, 1.0 / p);
}

double tau_auto(const IncrementSample& sample, const EstimatorConfig& config,
                const LepskiiConfig& lcfg) {
  config.validate();
  const double theta_h = config.resolved_theta_h();
  lcfg.validate(config.p, theta_h);
  const double t = static_cast<double>(sample.n) * sample.delta;
  const double eta = lcfg.resolved_eta(config.p, theta_h);
  const auto js = j_grid(t, config.p, eta);
  const auto ws = detail::build_workspace(sample, config, js.back());
  return tau_auto_from_workspace(ws, config, lcfg,
                                 lcfg.resolved_eta_prime(config.p, theta_h));
}

SelectionTrace select_j(const IncrementSample& sample,
                        const EstimatorConfig& config,
                        const LepskiiConfig& lcfg) {
  config.validate();
  const double theta_h = config.resolved_theta_h();
  lcfg.validate(config.p, theta_h);

  const double t = static_cast<double>(sample.n) * sample.delta;
  const double eta = lcfg.resolved_eta(config.p, theta_h);

  SelectionTrace trace;
  trace.j_values = j_grid(t, config.p, eta);
  trace.t = t;
  trace.p = config.p;

  const auto ws = detail::build_workspace(sample, config,
                                          trace.j_values.back());
  trace.estimates.reserve(trace.j_values.size());
  for (int j : trace.j_values)
    trace.estimates.push_back(detail::estimate_from_workspace(ws, config, j));

  trace.tau_used =
      lcfg.tau ? *lcfg.tau
               : tau_auto_from_workspace(
                     ws, config, lcfg,
                     lcfg.resolved_eta_prime(config.p, theta_h));

  const std::size_t count = trace.j_values.size();
  trace.pairwise_stats.assign(count, std::vector<double>(count, 0.0));
  const double dx = ws.grid.dx;
  std::vector<double> diff(static_cast<std::size_t>(ws.grid.x_points));
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      const auto& va = trace.estimates[a].values;
      const auto& vb = trace.estimates[b].values;
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = va[i] - vb[i];
      const double norm = lp_norm(diff, dx, config.p);
      trace.pairwise_stats[a][b] = norm;
      trace.pairwise_stats[b][a] = norm;
    }
  }

  // Ascend the grid; j_max is accepted vacuously, matching the empty-set
  // fallback of the balancing rule.
  trace.j_hat = trace.j_values.back();
  for (std::size_t a = 0; a < count; ++a) {
    bool accepted = true;
    for (std::size_t b = a + 1; b < count; ++b) {
      const double threshold =
          trace.tau_used *
          std::sqrt(two_pl(trace.j_values[b], config.p, t) / t);
      if (trace.pairwise_stats[a][b] > threshold) {
        accepted = false;
        break;
      }
    }
    if (accepted) {
      trace.j_hat = trace.j_values[a];
      break;
    }
  }
  return trace;
}

} // namespace decomp
