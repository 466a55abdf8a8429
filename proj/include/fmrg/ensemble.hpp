#pragma once

#include "fmrg/config.hpp"
#include "fmrg/theory.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fmrg {

// Terminal states of every particle, in particle-index order.
struct EnsembleRun {
  std::vector<Vector> terminals;
  std::vector<double> rewards;
  std::size_t nfe = 0;  // per trajectory, identical across particles
};

// Moments are averaged over coordinates; standard errors are batch means
// over 100 contiguous batches of particles.
struct EnsembleSummary {
  std::string method;
  double lambda = 0.0;
  double t_stop = 1.0;
  std::size_t n_steps = 0;
  int n_opt = 1;
  bool reuse = false;
  std::size_t nfe = 0;
  std::size_t particles = 0;

  double emp_mean = 0.0;
  double emp_mean_se = 0.0;
  double emp_var = 0.0;
  double emp_var_se = 0.0;
  double emp_reward = 0.0;
  double emp_reward_se = 0.0;

  // Present only when the closed-form theory covers the configuration.
  std::optional<TerminalPrediction> prediction;
};

inline constexpr std::size_t kBatches = 100;

// Particle i starts from N(0, I) drawn on stream i of cfg.seed. The particle
// range is split into contiguous chunks, one per thread.
EnsembleRun simulate_ensemble(const ExperimentConfig& cfg, unsigned threads = 1);

EnsembleSummary summarize(const ExperimentConfig& cfg, const EnsembleRun& run);

EnsembleSummary run_ensemble(const ExperimentConfig& cfg, unsigned threads = 1);

// Closed-form prediction for a d-dimensional isotropic Gaussian with a
// quadratic reward, applied coordinatewise: mean and variance are averaged
// over coordinates, the expected reward is summed. nullopt when the
// configuration has no closed form.
std::optional<TerminalPrediction> theory_prediction(const ExperimentConfig& cfg, int d);

struct BatchStats {
  double mean;
  double mean_se;
  double var;
  double var_se;
};

// Mean and variance of xs with batch-means standard errors.
BatchStats batch_moments(const std::vector<double>& xs, std::size_t batches = kBatches);

}  // namespace fmrg
