#pragma once

#include "fmrg/flow_map.hpp"
#include "fmrg/guidance.hpp"
#include "fmrg/rewards.hpp"
#include "fmrg/targets.hpp"
#include "fmrg/velocity.hpp"

#include <string>

namespace fmrg {

// Rewards are maximized throughout, so every baseline moves along +grad r
// evaluated at the Euler endpoint estimate x + (1 - t) b_t(x).

// lambda (I + (1 - t) grad b_t(x))^T grad r(xhat1)
Vector dps_signal(const VelocityField& b, const Reward& r, double t, const Vector& x, double lambda);

// Euler step plus weight * (I + (1 - t) grad b)^T grad r(xhat1).
Vector dps_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double weight);

// Euler step plus (1 - t) t_next (xhat1_opt - xhat1), where xhat1_opt takes
// n_opt ascent steps of size eta on r starting at xhat1.
Vector flowdps_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double eta,
                    int n_opt = 1);

// Euler step plus s_prime * grad r(xhat1).
Vector flowchef_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x,
                     double s_prime);

// Euler step plus t_next * c_t * grad r(xhat1).
Vector mpgd_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double c_t);

enum class Baseline { dps, flowdps, flowchef, mpgd, seed_opt, lqr_exact };

std::string to_string(Baseline m);

struct BaselineContext {
  const VelocityField& velocity;
  const FlowMap* map = nullptr;              // seed_opt
  const GaussianTarget* gaussian = nullptr;  // lqr_exact
};

// cfg.eta is the method weight (DPS constant, FlowDPS eta, FlowChef s', MPGD c,
// LQR lambda); cfg.grid and cfg.t_stop shape the Euler / RK4 grid. Guidance
// acts on intervals that start before t_stop.
TrajectoryRecord run_baseline_trajectory(Baseline method, const BaselineContext& ctx, const Reward& r,
                                         const GuidanceConfig& cfg, const Vector& x0,
                                         const RunOptions& opts = {});

}  // namespace fmrg
