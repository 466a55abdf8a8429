#pragma once

#include "fmrg/guidance.hpp"
#include "fmrg/rewards.hpp"
#include "fmrg/targets.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fmrg {

using Rows = std::vector<std::vector<double>>;

struct ComponentSpec {
  double weight = 1.0;
  std::vector<double> mean;
  Rows cov;

  bool operator==(const ComponentSpec&) const = default;
};

struct TargetSpec {
  std::string kind = "gaussian";  // gaussian | gmm | degenerate
  std::vector<double> mu1{0.0};
  double sigma1 = 1.0;
  std::vector<ComponentSpec> components;
  Rows basis;  // d rows of k entries
  double sigma_par = 1.0;
  double sigma_perp = 1e-3;

  bool operator==(const TargetSpec&) const = default;
};

struct RewardPartSpec {
  double weight = 1.0;
  std::string kind = "quadratic";
  std::vector<double> a;
  Rows A;
  std::vector<double> y;

  bool operator==(const RewardPartSpec&) const = default;
};

struct RewardSpec {
  std::string kind = "quadratic";  // quadratic | linear | composite
  std::vector<double> a{1.0};
  Rows A;
  std::vector<double> y;
  std::vector<RewardPartSpec> parts;

  bool operator==(const RewardSpec&) const = default;
};

struct InverseSpec {
  int nfe = 6;
  std::uint64_t truth_seed = 7;
  double eta_fmrg_e = 1.0;
  double eta_fmrg_j = 1.0;
  double eta_flowdps = 1.0;
  double eta_flowchef = 0.1;
  std::string schedule_fmrg_e = "paper-e";
  std::string schedule_fmrg_j = "paper-j";

  bool operator==(const InverseSpec&) const = default;
};

// One field per config key. The file grammar is described in README.md.
struct ExperimentConfig {
  TargetSpec target;
  RewardSpec reward;
  std::string method = "fmrg-j";

  double eta = 0.0;
  std::string schedule = "constant";
  int n_opt = 1;
  int steps = 100;
  std::vector<double> knots;  // overrides steps when non-empty
  double t_stop = 1.0;
  bool reuse = false;
  int warmup_k = 1;
  double warmup_fraction = 0.5;
  double renoise_c = 0.0;
  double renoise_start = 1.0;
  int seed_opt_steps = 0;

  double flow_substeps = 1000.0;

  std::uint64_t particles = 1000;
  std::uint64_t seed = 0;

  std::string out_dir = "out";

  std::vector<double> sweep_lambdas;
  std::vector<std::string> sweep_methods;
  std::vector<double> earlystop_t_stops;
  std::vector<double> slope_lambdas;
  double slope_t = 0.3;
  double slope_x = 0.7;
  InverseSpec inverse;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

Target build_target(const ExperimentConfig& cfg);
std::shared_ptr<const Reward> build_reward(const ExperimentConfig& cfg);
// Guidance settings with the variant implied by the method name.
GuidanceConfig build_guidance(const ExperimentConfig& cfg);

const std::vector<std::string>& known_methods();

}  // namespace fmrg
