#include "decompound/compound_poisson.hpp"

#include <cmath>
#include <random>

#include "decompound/errors.hpp"

namespace decomp {

void CompoundPoissonModel::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("model.lambda must be > 0");
  if (!(delta > 0.0)) throw ConfigError("model.delta must be > 0");
}

IncrementSample sample_increments(const CompoundPoissonModel& model,
                                  std::int64_t n, std::uint64_t seed) {
  model.validate();
  if (n < 1) throw ConfigError("sample size n must be >= 1");

  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::int64_t> count(model.lambda * model.delta);

  IncrementSample sample;
  sample.values.resize(static_cast<std::size_t>(n));
  sample.delta = model.delta;
  sample.n = n;
  for (auto& z : sample.values) {
    std::int64_t jumps = count(rng);
    if (jumps == 0) {
      z = 0.0;
      ++sample.n_zero;
      continue;
    }
    double acc = 0.0;
    for (std::int64_t i = 0; i < jumps; ++i) acc += model.jump.sample(rng);
    z = acc;
  }
  return sample;
}

void recount_zeros(IncrementSample& sample) {
  sample.n = static_cast<std::int64_t>(sample.values.size());
  sample.n_zero = 0;
  for (double z : sample.values)
    if (z == 0.0) ++sample.n_zero;
}

std::complex<double> true_cf(const CompoundPoissonModel& model, double xi) {
  return std::exp(model.delta * model.lambda * (model.jump.cf(xi) - 1.0));
}

double true_levy_density(const CompoundPoissonModel& model, double x) {
  return model.lambda * model.jump.pdf(x);
}

} // namespace decomp
