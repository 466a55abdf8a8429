#include "fmrg/baselines.hpp"

#include "fmrg/lqr.hpp"

#include <cmath>
#include <string>

namespace fmrg {

namespace {

struct EulerParts {
  Vector euler;  // x + dt b_t(x)
  Vector xhat1;  // x + (1 - t) b_t(x)
  Vector drift;  // b_t(x)
};

EulerParts euler_parts(const VelocityField& b, double t, double t_next, const Vector& x) {
  Vector v = b.eval(t, x);
  Vector step = x + (t_next - t) * v;
  Vector xhat = x + (1.0 - t) * v;
  return {std::move(step), std::move(xhat), std::move(v)};
}

Vector flowdps_increment(const Reward& r, const Vector& xhat1, double t, double t_next, double eta, int n_opt,
                         std::size_t* reward_evals) {
  Vector opt = xhat1;
  for (int j = 0; j < n_opt; ++j) {
    opt += eta * r.grad(opt);
    if (reward_evals) ++*reward_evals;
  }
  return (1.0 - t) * t_next * (opt - xhat1);
}

}  // namespace

std::string to_string(Baseline m) {
  switch (m) {
    case Baseline::dps: return "dps";
    case Baseline::flowdps: return "flowdps";
    case Baseline::flowchef: return "flowchef";
    case Baseline::mpgd: return "mpgd";
    case Baseline::seed_opt: return "seedopt";
    case Baseline::lqr_exact: return "lqr";
  }
  return "unknown";
}

Vector dps_signal(const VelocityField& b, const Reward& r, double t, const Vector& x, double lambda) {
  const Vector v = b.eval(t, x);
  const Vector xhat1 = x + (1.0 - t) * v;
  const Vector g = r.grad(xhat1);
  return lambda * (g + (1.0 - t) * b.jacobian_transpose_times(t, x, g));
}

Vector dps_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double weight) {
  const EulerParts p = euler_parts(b, t, t_next, x);
  const Vector g = r.grad(p.xhat1);
  return p.euler + weight * (g + (1.0 - t) * b.jacobian_transpose_times(t, x, g));
}

Vector flowdps_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double eta,
                    int n_opt) {
  if (!(t < t_next)) throw ConfigError("flowdps_step needs t < t_next");
  if (n_opt < 1) throw ConfigError("flowdps_step needs n_opt >= 1");
  const EulerParts p = euler_parts(b, t, t_next, x);
  return p.euler + flowdps_increment(r, p.xhat1, t, t_next, eta, n_opt, nullptr);
}

Vector flowchef_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x,
                     double s_prime) {
  if (!(t < t_next)) throw ConfigError("flowchef_step needs t < t_next");
  const EulerParts p = euler_parts(b, t, t_next, x);
  return p.euler + s_prime * r.grad(p.xhat1);
}

Vector mpgd_step(const VelocityField& b, const Reward& r, double t, double t_next, const Vector& x, double c_t) {
  if (!(t < t_next)) throw ConfigError("mpgd_step needs t < t_next");
  const EulerParts p = euler_parts(b, t, t_next, x);
  return p.euler + t_next * c_t * r.grad(p.xhat1);
}

namespace {

std::vector<double> baseline_knots(const GuidanceConfig& cfg) {
  std::vector<double> out;
  bool inserted = cfg.t_stop >= 1.0;
  for (double t : cfg.grid.knots()) {
    if (!inserted && t > cfg.t_stop - 1e-12) {
      if (std::abs(t - cfg.t_stop) > 1e-12) out.push_back(cfg.t_stop);
      inserted = true;
    }
    out.push_back(t);
  }
  return out;
}

TrajectoryRecord euler_baseline(Baseline method, const VelocityField& b, const Reward& r, const GuidanceConfig& cfg,
                                const Vector& x0, const RunOptions& opts) {
  const std::vector<double> knots = baseline_knots(cfg);
  TrajectoryRecord rec;
  Vector x = x0;
  if (opts.record_path) {
    rec.times.push_back(0.0);
    rec.states.push_back(x);
  }
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double t = knots[k];
    const double tn = knots[k + 1];
    const EulerParts p = euler_parts(b, t, tn, x);
    ++rec.nfe;
    Vector next = p.euler;
    if (t < cfg.t_stop - 1e-12) {
      ++rec.guided_steps;
      switch (method) {
        case Baseline::dps: {
          const Vector g = r.grad(p.xhat1);
          ++rec.reward_evals;
          next += cfg.eta * (g + (1.0 - t) * b.jacobian_transpose_times(t, x, g));
          break;
        }
        case Baseline::flowdps:
          next += flowdps_increment(r, p.xhat1, t, tn, cfg.eta, cfg.n_opt, &rec.reward_evals);
          break;
        case Baseline::flowchef:
          next += cfg.eta * r.grad(p.xhat1);
          ++rec.reward_evals;
          break;
        case Baseline::mpgd:
          next += tn * cfg.eta * r.grad(p.xhat1);
          ++rec.reward_evals;
          break;
        default: throw ConfigError("not an Euler baseline");
      }
    }
    if (!next.allFinite())
      throw NumericalFailure(to_string(method) + ": non-finite state at knot " + std::to_string(k + 1));
    if (opts.record_path) {
      rec.controls.push_back((next - p.euler) / (tn - t));
      rec.times.push_back(tn);
      rec.states.push_back(next);
    }
    x = std::move(next);
  }
  rec.terminal_reward = r.value(x);
  ++rec.reward_evals;
  rec.terminal = std::move(x);
  return rec;
}

TrajectoryRecord lqr_baseline(const GaussianTarget& target, const VelocityField& b, const Reward& r,
                              const GuidanceConfig& cfg, const Vector& x0, const RunOptions& opts) {
  const auto* quad = dynamic_cast<const QuadraticReward*>(&r);
  if (!quad) throw ConfigError("lqr baseline needs a quadratic reward");
  const Vector& a = quad->center();
  const double lambda = cfg.eta;
  const double t_stop = cfg.t_stop;
  auto control = [&](double t, const Vector& y) -> Vector {
    if (t > t_stop + 1e-12) return Vector::Zero(y.size());
    return lqr_exact_control(target, a, lambda, t, y);
  };
  const std::vector<double> knots = baseline_knots(cfg);
  TrajectoryRecord rec;
  Vector x = x0;
  if (opts.record_path) {
    rec.times.push_back(0.0);
    rec.states.push_back(x);
  }
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double t = knots[k];
    const double h = knots[k + 1] - t;
    const bool guided = t < t_stop - 1e-12;
    // Inside an interval the control is either on throughout or off throughout.
    auto f = [&](double tau, const Vector& y) -> Vector {
      Vector v = b.eval(tau, y);
      if (guided) v += lqr_exact_control(target, a, lambda, tau, y);
      return v;
    };
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = f(t + h, x + h * k3);
    rec.nfe += 4;
    if (guided) ++rec.guided_steps;
    if (opts.record_path) rec.controls.push_back(guided ? control(t, x) : Vector(Vector::Zero(x.size())));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw NumericalFailure("lqr: non-finite state at knot " + std::to_string(k + 1));
    if (opts.record_path) {
      rec.times.push_back(knots[k + 1]);
      rec.states.push_back(x);
    }
  }
  rec.terminal_reward = r.value(x);
  ++rec.reward_evals;
  rec.terminal = std::move(x);
  return rec;
}

}  // namespace

TrajectoryRecord run_baseline_trajectory(Baseline method, const BaselineContext& ctx, const Reward& r,
                                         const GuidanceConfig& cfg, const Vector& x0, const RunOptions& opts) {
  cfg.validate();
  switch (method) {
    case Baseline::dps:
    case Baseline::flowdps:
    case Baseline::flowchef:
    case Baseline::mpgd:
      return euler_baseline(method, ctx.velocity, r, cfg, x0, opts);
    case Baseline::seed_opt: {
      if (!ctx.map) throw ConfigError("seed optimization needs a flow map");
      // Guidance only at t = 0, then one unguided jump X_{0,1}.
      GuidanceConfig seed = cfg;
      seed.grid = TimeGrid::uniform(1);
      seed.t_stop = 1.0;
      seed.variant = GradientVariant::jacobian;
      seed.seed_opt_steps = cfg.seed_opt_steps > 0 ? cfg.seed_opt_steps : 1;
      seed.reuse_endpoint = false;
      seed.warmup_k = 1;
      seed.renoise_c = 0.0;
      return run_guided_trajectory(*ctx.map, r, seed, x0, opts);
    }
    case Baseline::lqr_exact:
      if (!ctx.gaussian) throw ConfigError("lqr baseline needs a Gaussian target");
      return lqr_baseline(*ctx.gaussian, ctx.velocity, r, cfg, x0, opts);
  }
  throw ConfigError("unknown baseline");
}

}  // namespace fmrg
