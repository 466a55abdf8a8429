#pragma once

#include "fmrg/flow_map.hpp"
#include "fmrg/rewards.hpp"
#include "fmrg/rng.hpp"
#include "fmrg/time_grid.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fmrg {

enum class GradientVariant { jacobian, euclidean };

// How the per-interval update coefficient is formed. For an interval of
// width dt whose gradient is taken at t (next grid knot t+):
//   constant: eta * dt
//   paper_e:  eta * t * (1 - t+)
//   paper_j:  eta * dt, with the signal rescaled to the step velocity norm
// Each of the n_opt sub-steps uses the coefficient divided by n_opt.
enum class LambdaSchedule { constant, paper_e, paper_j };

std::string to_string(GradientVariant v);
std::string to_string(LambdaSchedule s);
GradientVariant parse_variant(const std::string& s);
LambdaSchedule parse_schedule(const std::string& s);

struct GuidanceConfig {
  GradientVariant variant = GradientVariant::jacobian;
  double eta = 0.0;
  LambdaSchedule schedule = LambdaSchedule::constant;
  int n_opt = 1;
  TimeGrid grid = TimeGrid::uniform(100);
  double t_stop = 1.0;
  bool reuse_endpoint = false;
  int warmup_k = 1;
  double warmup_fraction = 0.5;
  double renoise_c = 0.0;
  // Renoising applies at guided knots t_k >= renoise_start (and t_k > 0).
  double renoise_start = 1.0;
  int seed_opt_steps = 0;

  void validate() const;
};

// Knots where guided steps start and end: the grid up to t_stop, with t_stop
// inserted when it is not a grid knot. The last guided knot is always < 1;
// the remainder [last, 1] is the unguided terminal jump.
std::vector<double> guided_knots(const GuidanceConfig& cfg);

// Flow-map evaluations for a run without warmup or renoising.
std::size_t nominal_nfe(const GuidanceConfig& cfg);

struct Evaluations {
  std::size_t nfe = 0;
  std::size_t reward_evals = 0;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vector> states;
  // controls[k] is the effective control on [times[k], times[k+1]].
  std::vector<Vector> controls;
  std::size_t nfe = 0;
  std::size_t reward_evals = 0;
  std::size_t guided_steps = 0;
  std::size_t winner = 0;
  Vector terminal;
  double terminal_reward = 0.0;
};

struct RunOptions {
  bool record_path = true;
  // Noise source for renoising; required when renoise_c > 0.
  CounterRng* rng = nullptr;
};

// Unscaled signal at (t, x): grad X_{t,1}^T grad r(X_{t,1}) or grad r(X_{t,1}).
Vector greedy_guidance_signal(const FlowMap& map, const Reward& r, double t, const Vector& x,
                              GradientVariant variant);

struct GradientContext {
  double t;              // time at which the signal is taken
  double dt;             // width of the interval being updated
  double t_plus;         // next grid knot after t
  double velocity_norm;  // |v_{t,t+}(x)| for the normalized schedule
};

double update_coefficient(const GuidanceConfig& cfg, const GradientContext& ctx);

Vector multi_gradient_update(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                             const GradientContext& ctx, const Vector& x, Evaluations* ev = nullptr);

struct StepResult {
  Vector state;
  Vector control;
};

StepResult operator_split_step(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg, double t_k,
                               double t_next, const Vector& x, Evaluations* ev = nullptr);

Vector stochastic_renoise(const FlowMap& map, double t, double t_next, const Vector& x, double c,
                          const Vector& noise, Evaluations* ev = nullptr);

TrajectoryRecord run_guided_trajectory(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                                       const Vector& x0, const RunOptions& opts = {});

// Runs every start through ceil(warmup_fraction * N_guided) guided steps,
// scores each by r(X_{t,1}(x_t)) and continues only the best one.
TrajectoryRecord warmup_select(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                               const std::vector<Vector>& starts, const RunOptions& opts = {});

}  // namespace fmrg
