#pragma once

#include "fmrg/rewards.hpp"
#include "fmrg/targets.hpp"

#include <cstdint>
#include <vector>

namespace fmrg {

class DegenerateTilt : public Error {
 public:
  using Error::Error;
};

struct TiltSamples {
  std::vector<Vector> samples;
  double ess = 0.0;  // effective sample size of the proposal weights (n when exact)
  bool closed_form = true;
};

// Samples from rho_tilt ~ exp(lambda r) rho1: closed form for quadratic
// rewards on Gaussian / mixture / degenerate targets, importance resampling
// from rho1 otherwise.
TiltSamples tilt_sampler(const Target& target, const Reward& r, double lambda, std::size_t n, std::uint64_t seed);

// Self-normalized importance estimate of one coordinate's mean and variance,
// with delta-method standard errors.
struct WeightedMoments {
  double mean;
  double mean_se;
  double var;
  double var_se;
  double ess;
};

WeightedMoments importance_moments(const std::vector<double>& values, const std::vector<double>& log_weights);

}  // namespace fmrg
