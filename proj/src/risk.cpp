#include "decompound/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

//! Index-sharded loop; results land in preallocated slots, so the outcome
//! does not depend on the worker count. The first worker exception is
//! rethrown after the join.
void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

double quantile_nearest_rank(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const auto count = static_cast<double>(sorted.size());
  auto idx = static_cast<std::size_t>(
      std::max(0.0, std::ceil(q * count) - 1.0));
  idx = std::min(idx, sorted.size() - 1);
  return sorted[idx];
}

double error_vs_truth(const DensityEstimate& est,
                      const CompoundPoissonModel& model, double p) {
  std::vector<double> diff(est.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = est.values[i] - true_levy_density(model, est.xs[i]);
  return lp_norm(diff, est.spacing(), p);
}

void validate_selection(const JSelection& sel, const EstimatorConfig& config) {
  switch (sel.mode) {
    case JSelection::Mode::Fixed:
      if (sel.j < 0) throw ConfigError("j must be >= 0");
      break;
    case JSelection::Mode::Oracle:
      if (!(sel.s > 0.0)) throw ConfigError("s must be > 0");
      break;
    case JSelection::Mode::Adaptive:
      if (sel.population)
        throw ConfigError("adaptive selection needs empirical input");
      sel.lepskii.validate(config.p, config.resolved_theta_h());
      break;
  }
}

void aggregate(RiskReport& report) {
  const auto reps = static_cast<double>(report.errors.size());
  double sum = 0.0;
  for (double e : report.errors) sum += e;
  report.mean = sum / reps;
  if (report.errors.size() >= 2) {
    double ss = 0.0;
    for (double e : report.errors) {
      const double d = e - report.mean;
      ss += d * d;
    }
    report.std_error = std::sqrt(ss / (reps - 1.0)) / std::sqrt(reps);
  } else {
    report.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  report.q50 = quantile_nearest_rank(report.errors, 0.5);
  report.q90 = quantile_nearest_rank(report.errors, 0.9);
}

} // namespace

RiskReport mc_risk(const CompoundPoissonModel& model,
                   const EstimatorConfig& config, const JSelection& sel,
                   std::int64_t n, int reps, std::uint64_t seed,
                   int threads) {
  model.validate();
  config.validate();
  validate_selection(sel, config);
  if (n <= 0) throw ConfigError("n must be > 0");
  if (reps < 1) throw ConfigError("reps must be >= 1");

  RiskReport report;
  report.lambda = model.lambda;
  report.delta = model.delta;
  report.n = n;
  report.t = static_cast<double>(n) * model.delta;
  report.t_lambda = model.lambda * report.t;
  report.p = config.p;
  report.reps = reps;
  report.errors.assign(static_cast<std::size_t>(reps), 0.0);

  int fixed_j = sel.j;
  if (sel.mode == JSelection::Mode::Oracle)
    fixed_j = choose_j_oracle(report.t_lambda, sel.s, config.p);

  report.invalid_flags.assign(static_cast<std::size_t>(reps), 0);

  if (sel.population) {
    const auto est = estimate_population(model, config, fixed_j, n);
    const double err = error_vs_truth(est, model, config.p);
    std::fill(report.errors.begin(), report.errors.end(), err);
    if (!est.valid)
      std::fill(report.invalid_flags.begin(), report.invalid_flags.end(), 1);
    report.invalid_rate = est.valid ? 0.0 : 1.0;
    aggregate(report);
    return report;
  }

  parallel_for(reps, threads, [&](int r) {
    const auto sample = sample_increments(model, n, seed + static_cast<std::uint64_t>(r));
    DensityEstimate est;
    if (sel.mode == JSelection::Mode::Adaptive) {
      auto trace = select_j(sample, config, sel.lepskii);
      const auto it = std::find(trace.j_values.begin(), trace.j_values.end(),
                                trace.j_hat);
      est = std::move(
          trace.estimates[static_cast<std::size_t>(it - trace.j_values.begin())]);
    } else {
      est = estimate_fixed_j(sample, config, fixed_j);
    }
    report.errors[static_cast<std::size_t>(r)] =
        error_vs_truth(est, model, config.p);
    report.invalid_flags[static_cast<std::size_t>(r)] = est.valid ? 0 : 1;
  });

  int invalid_count = 0;
  for (std::uint8_t f : report.invalid_flags) invalid_count += f;
  report.invalid_rate = static_cast<double>(invalid_count) / reps;
  aggregate(report);
  return report;
}

RateFit rate_fit(const std::vector<RiskReport>& reports) {
  if (reports.size() < 3)
    throw InsufficientPoints("rate fit needs at least 3 reports");

  RateFit fit;
  fit.points.reserve(reports.size());
  std::vector<double> xs;
  for (const auto& report : reports) {
    if (!(report.t_lambda > 0.0))
      throw ConfigError("t_lambda must be > 0 to fit a rate");
    if (!(report.mean > 0.0))
      throw ConfigError("mean risk must be > 0 to fit a rate");
    fit.points.emplace_back(std::log(report.t_lambda), std::log(report.mean));
    xs.push_back(fit.points.back().first);
  }
  std::sort(xs.begin(), xs.end());
  if (std::unique(xs.begin(), xs.end()) - xs.begin() < 3)
    throw InsufficientPoints("rate fit needs 3 distinct t_lambda values");

  const auto count = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : fit.points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / count);
  return fit;
}

std::vector<RiskReport> regime_sweep(const JumpDensity& jump, double lambda,
                                     double t_fixed,
                                     const std::vector<double>& deltas,
                                     const EstimatorConfig& config,
                                     const JSelection& sel, int reps,
                                     std::uint64_t seed, int threads) {
  if (deltas.empty()) throw ConfigError("deltas must be nonempty");
  if (!(t_fixed > 0.0)) throw ConfigError("t must be > 0");

  std::vector<RiskReport> reports;
  reports.reserve(deltas.size());
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    const auto n = static_cast<std::int64_t>(std::llround(t_fixed / delta));
    if (n < 1 || std::abs(static_cast<double>(n) * delta - t_fixed) >
                     1e-9 * std::max(1.0, t_fixed))
      throw ConfigError("every delta must divide t into a whole number of "
                        "increments");
    CompoundPoissonModel model;
    model.lambda = lambda;
    model.jump = jump;
    model.delta = delta;
    reports.push_back(mc_risk(model, config, sel, n, reps, seed, threads));
  }
  return reports;
}

FluctuationStats ecf_fluctuation_stats(const CompoundPoissonModel& model,
                                       std::int64_t n, double xi_prime,
                                       double delta_exp, int reps,
                                       std::uint64_t seed, int threads) {
  model.validate();
  if (n <= 0) throw ConfigError("n must be > 0");
  if (!(xi_prime > 0.0)) throw ConfigError("xi_prime must be > 0");
  if (!(delta_exp > 0.0)) throw ConfigError("delta_exp must be > 0");
  if (reps < 1) throw ConfigError("reps must be >= 1");

  FluctuationStats stats;
  stats.xi_prime = xi_prime;
  stats.delta_exp = delta_exp;
  stats.n = n;
  stats.t_lambda = model.lambda * static_cast<double>(n) * model.delta;
  stats.reps = reps;
  stats.raw_sup.assign(static_cast<std::size_t>(reps), 0.0);
  stats.normalized.assign(static_cast<std::size_t>(reps), 0.0);

  const double step = 1.0 / 16.0;
  const int k_max = static_cast<int>(std::ceil(16.0 * xi_prime - 1e-9));
  const auto grid = symmetric_grid(step, k_max);
  std::vector<std::complex<double>> phi(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k)
    phi[static_cast<std::size_t>(k)] = true_cf(model, step * k);

  // |phi_hat - phi| is even in xi, so the nonnegative half carries the sup.
  const double norm_scale =
      std::sqrt(stats.t_lambda *
                std::pow(std::log(std::exp(1.0) + xi_prime),
                         1.0 + 2.0 * delta_exp));
  parallel_for(reps, threads, [&](int r) {
    const auto sample = sample_increments(model, n, seed + static_cast<std::uint64_t>(r));
    const auto hat = ecf(sample, grid);
    const std::size_t c = hat.center();
    double sup = 0.0;
    for (int k = 0; k <= k_max; ++k)
      sup = std::max(sup, std::abs(hat.values[c + static_cast<std::size_t>(k)] -
                                   phi[static_cast<std::size_t>(k)]));
    stats.raw_sup[static_cast<std::size_t>(r)] = static_cast<double>(n) * sup;
    stats.normalized[static_cast<std::size_t>(r)] =
        stats.raw_sup[static_cast<std::size_t>(r)] / norm_scale;
  });

  double mean_raw = 0.0, mean_norm = 0.0;
  for (int r = 0; r < reps; ++r) {
    mean_raw += stats.raw_sup[static_cast<std::size_t>(r)];
    mean_norm += stats.normalized[static_cast<std::size_t>(r)];
  }
  mean_raw /= reps;
  mean_norm /= reps;
  stats.mean_normalized = mean_norm;
  stats.q50_normalized = quantile_nearest_rank(stats.normalized, 0.5);
  stats.q90_normalized = quantile_nearest_rank(stats.normalized, 0.9);

  const double pivot = 2.0 * mean_raw + std::sqrt(32.0 * stats.t_lambda);
  int exceed = 0;
  for (double raw : stats.raw_sup)
    if (raw > pivot) ++exceed;
  stats.exceed_frequency = static_cast<double>(exceed) / reps;
  return stats;
}

} // namespace decomp
