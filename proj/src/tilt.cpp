#include "fmrg/tilt.hpp"

#include <cmath>
#include <string>

namespace fmrg {

TiltSamples tilt_sampler(const Target& target, const Reward& r, double lambda, std::size_t n, std::uint64_t seed) {
  if (!(lambda >= 0.0)) throw ConfigError("tilt: lambda must be >= 0");
  if (n < 1) throw ConfigError("tilt: n must be >= 1");
  TiltSamples out;
  if (lambda == 0.0) {
    out.samples = std::visit([&](const auto& t) { return sample_target(t, n, seed); }, target);
    out.ess = static_cast<double>(n);
    return out;
  }
  if (const auto* quad = dynamic_cast<const QuadraticReward*>(&r)) {
    if (const auto* g = std::get_if<GaussianTarget>(&target)) {
      out.samples = sample_target(tilt_closed_form_gaussian(*g, quad->center(), lambda), n, seed);
    } else if (const auto* m = std::get_if<GaussianMixtureTarget>(&target)) {
      out.samples = sample_target(tilt_closed_form_gmm(*m, quad->center(), lambda), n, seed);
    } else {
      const auto mix = std::get<DegenerateGaussianTarget>(target).as_mixture();
      out.samples = sample_target(tilt_closed_form_gmm(mix, quad->center(), lambda), n, seed);
    }
    out.ess = static_cast<double>(n);
    return out;
  }

  // Importance resampling with proposal rho1.
  std::vector<Vector> proposals = std::visit([&](const auto& t) { return sample_target(t, n, seed); }, target);
  std::vector<double> logw(n);
  for (std::size_t i = 0; i < n; ++i) logw[i] = lambda * r.value(proposals[i]);
  const double lse = log_sum_exp(logw);
  std::vector<double> w(n);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(logw[i] - lse);
    sum_sq += w[i] * w[i];
  }
  out.ess = 1.0 / sum_sq;
  out.closed_form = false;
  if (out.ess < 0.01 * static_cast<double>(n))
    throw DegenerateTilt("tilt: effective sample size " + std::to_string(out.ess) + " below 1% of " +
                         std::to_string(n));
  CounterRng rng(seed, n);
  const double u0 = rng.uniform() / static_cast<double>(n);
  out.samples.reserve(n);
  double cum = w[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (u > cum && j + 1 < n) cum += w[++j];
    out.samples.push_back(proposals[j]);
  }
  return out;
}

WeightedMoments importance_moments(const std::vector<double>& values, const std::vector<double>& log_weights) {
  const std::size_t n = values.size();
  if (n == 0 || log_weights.size() != n) throw ConfigError("importance_moments: size mismatch");
  const double lse = log_sum_exp(log_weights);
  std::vector<double> w(n);
  double mean = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(log_weights[i] - lse);
    mean += w[i] * values[i];
    sum_sq += w[i] * w[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += w[i] * (values[i] - mean) * (values[i] - mean);
  double mean_v = 0.0, var_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = values[i] - mean;
    mean_v += w[i] * w[i] * dev * dev;
    const double dv = dev * dev - var;
    var_v += w[i] * w[i] * dv * dv;
  }
  return {mean, std::sqrt(mean_v), var, std::sqrt(var_v), 1.0 / sum_sq};
}

}  // namespace fmrg
