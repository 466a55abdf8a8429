#include "fmrg/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fmrg {

std::string to_string(GradientVariant v) { return v == GradientVariant::jacobian ? "jacobian" : "euclidean"; }

std::string to_string(LambdaSchedule s) {
  switch (s) {
    case LambdaSchedule::constant: return "constant";
    case LambdaSchedule::paper_e: return "paper-e";
    case LambdaSchedule::paper_j: return "paper-j";
  }
  return "constant";
}

GradientVariant parse_variant(const std::string& s) {
  if (s == "jacobian" || s == "J") return GradientVariant::jacobian;
  if (s == "euclidean" || s == "E") return GradientVariant::euclidean;
  throw ConfigError("unknown gradient variant '" + s + "'");
}

LambdaSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return LambdaSchedule::constant;
  if (s == "paper-e") return LambdaSchedule::paper_e;
  if (s == "paper-j") return LambdaSchedule::paper_j;
  throw ConfigError("unknown lambda schedule '" + s + "'");
}

void GuidanceConfig::validate() const {
  if (!(t_stop > 0.0 && t_stop <= 1.0)) throw ConfigError("t_stop must lie in (0, 1]");
  if (n_opt < 1) throw ConfigError("n_opt must be >= 1");
  if (warmup_k < 1) throw ConfigError("warmup_k must be >= 1");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("warmup_fraction must lie in [0, 1]");
  if (!(renoise_c >= 0.0 && renoise_c <= 1.0)) throw ConfigError("renoise_c must lie in [0, 1]");
  if (seed_opt_steps < 0) throw ConfigError("seed_opt_steps must be >= 0");
  if (!std::isfinite(eta)) throw ConfigError("eta must be finite");
}

std::vector<double> guided_knots(const GuidanceConfig& cfg) {
  cfg.validate();
  const auto& k = cfg.grid.knots();
  std::vector<double> out;
  for (double t : k) {
    if (t >= 1.0) break;
    if (t > cfg.t_stop - 1e-12) break;
    out.push_back(t);
  }
  if (cfg.t_stop < 1.0) {
    if (out.size() > 1 && std::abs(out.back() - cfg.t_stop) <= 1e-12) out.back() = cfg.t_stop;
    else out.push_back(cfg.t_stop);
  }
  return out;
}

std::size_t nominal_nfe(const GuidanceConfig& cfg) {
  const std::size_t g = guided_knots(cfg).size() - 1;
  const std::size_t n = static_cast<std::size_t>(cfg.n_opt);
  const std::size_t per_step = cfg.reuse_endpoint ? n : 1 + n;
  // Seed steps under the normalized schedule also evaluate X_{0,1} for the velocity norm.
  const std::size_t per_seed = cfg.schedule == LambdaSchedule::paper_j ? n + 1 : n;
  return static_cast<std::size_t>(cfg.seed_opt_steps) * per_seed + g * per_step + 1;
}

namespace {

struct SignalEval {
  Vector signal;
  Vector endpoint;
};

SignalEval signal_with_endpoint(const FlowMap& map, const Reward& r, double t, const Vector& x,
                                GradientVariant variant, Evaluations* ev) {
  if (ev) {
    ++ev->nfe;
    ++ev->reward_evals;
  }
  if (variant == GradientVariant::jacobian) {
    Pullback pb = map.pullback(t, 1.0, x, [&](const Vector& e) { return r.grad(e); });
    return {std::move(pb.cotangent), std::move(pb.endpoint)};
  }
  Vector e = map.eval(t, 1.0, x);
  Vector g = r.grad(e);
  return {std::move(g), std::move(e)};
}

Vector gradient_updates(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                        const GradientContext& ctx, GradientVariant variant, const Vector& x0,
                        const SignalEval* first, Evaluations* ev) {
  const double coef = update_coefficient(cfg, ctx) / static_cast<double>(cfg.n_opt);
  Vector x = x0;
  for (int j = 0; j < cfg.n_opt; ++j) {
    Vector u = (j == 0 && first) ? first->signal : signal_with_endpoint(map, r, ctx.t, x, variant, ev).signal;
    if (cfg.schedule == LambdaSchedule::paper_j) {
      const double n = u.norm();
      u = n > 0.0 ? Vector(u * (ctx.velocity_norm / n)) : Vector(Vector::Zero(x.size()));
    }
    x += coef * u;
    if (!x.allFinite())
      throw NumericalFailure("gradient update: non-finite state at sub-step " + std::to_string(j) +
                             " (t = " + std::to_string(ctx.t) + ")");
  }
  return x;
}

void check_finite(const Vector& x, std::size_t knot) {
  if (!x.allFinite()) throw NumericalFailure("guided trajectory: non-finite state at knot " + std::to_string(knot));
}

// Stateful walk along the guided knots; shared by plain runs and warmup.
class GuidedRun {
 public:
  GuidedRun(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg, const RunOptions& opts)
      : map_(map), r_(r), cfg_(cfg), opts_(opts), knots_(guided_knots(cfg)) {}

  std::size_t guided_steps() const { return knots_.size() - 1; }
  double time() const { return knots_[k_]; }
  const Vector& state() const { return x_; }
  const Evaluations& evaluations() const { return ev_; }

  void start(const Vector& x0) {
    x_ = x0;
    check_finite(x_, 0);
    push(0.0, x_);
    if (cfg_.seed_opt_steps > 0) {
      const double t1 = knots_.size() > 1 ? knots_[1] : 1.0;
      for (int i = 0; i < cfg_.seed_opt_steps; ++i) {
        GradientContext ctx{0.0, t1, cfg_.grid.next_after(0.0), 0.0};
        if (cfg_.schedule == LambdaSchedule::paper_j) {
          const Vector e = map_.eval(0.0, 1.0, x_);
          ++ev_.nfe;
          ctx.velocity_norm = (e - x_).norm();
        }
        x_ = gradient_updates(map_, r_, cfg_, ctx, GradientVariant::jacobian, x_, nullptr, &ev_);
      }
      check_finite(x_, 0);
      if (opts_.record_path) states_.back() = x_;
    }
  }

  void advance(std::size_t k_end) {
    k_end = std::min(k_end, guided_steps());
    for (; k_ < k_end; ++k_) {
      const double tk = knots_[k_];
      const double tn = knots_[k_ + 1];
      if (cfg_.renoise_c > 0.0 && tk > 0.0 && tk >= cfg_.renoise_start) {
        if (!opts_.rng) throw ConfigError("renoising requires a noise source");
        const Vector eps = opts_.rng->normal_vector(static_cast<int>(x_.size()));
        x_ = stochastic_renoise(map_, tk, tn, x_, cfg_.renoise_c, eps, &ev_);
      }
      StepResult step = operator_split_step(map_, r_, cfg_, tk, tn, x_, &ev_);
      x_ = std::move(step.state);
      check_finite(x_, k_ + 1);
      if (opts_.record_path) controls_.push_back(std::move(step.control));
      push(tn, x_);
    }
  }

  double score() {
    ++ev_.nfe;
    ++ev_.reward_evals;
    return r_.value(map_.eval(time(), 1.0, x_));
  }

  void absorb(const Evaluations& other) {
    ev_.nfe += other.nfe;
    ev_.reward_evals += other.reward_evals;
  }

  TrajectoryRecord finish() {
    const double tg = time();
    Vector x1 = map_.eval(tg, 1.0, x_);
    ++ev_.nfe;
    check_finite(x1, knots_.size());
    if (opts_.record_path) controls_.push_back(Vector::Zero(x1.size()));
    push(1.0, x1);
    TrajectoryRecord rec;
    rec.terminal_reward = r_.value(x1);
    ++ev_.reward_evals;
    rec.times = std::move(times_);
    rec.states = std::move(states_);
    rec.controls = std::move(controls_);
    rec.nfe = ev_.nfe;
    rec.reward_evals = ev_.reward_evals;
    rec.guided_steps = guided_steps();
    rec.terminal = std::move(x1);
    return rec;
  }

 private:
  void push(double t, const Vector& x) {
    if (!opts_.record_path) return;
    times_.push_back(t);
    states_.push_back(x);
  }

  const FlowMap& map_;
  const Reward& r_;
  const GuidanceConfig& cfg_;
  RunOptions opts_;
  std::vector<double> knots_;
  std::size_t k_ = 0;
  Vector x_;
  Evaluations ev_;
  std::vector<double> times_;
  std::vector<Vector> states_;
  std::vector<Vector> controls_;
};

}  // namespace

Vector greedy_guidance_signal(const FlowMap& map, const Reward& r, double t, const Vector& x,
                              GradientVariant variant) {
  return signal_with_endpoint(map, r, t, x, variant, nullptr).signal;
}

double update_coefficient(const GuidanceConfig& cfg, const GradientContext& ctx) {
  switch (cfg.schedule) {
    case LambdaSchedule::constant: return cfg.eta * ctx.dt;
    case LambdaSchedule::paper_e: return cfg.eta * ctx.t * (1.0 - ctx.t_plus);
    case LambdaSchedule::paper_j: return cfg.eta * ctx.dt;
  }
  return 0.0;
}

Vector multi_gradient_update(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                             const GradientContext& ctx, const Vector& x, Evaluations* ev) {
  if (cfg.n_opt < 1) throw ConfigError("n_opt must be >= 1");
  return gradient_updates(map, r, cfg, ctx, cfg.variant, x, nullptr, ev);
}

StepResult operator_split_step(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg, double t_k,
                               double t_next, const Vector& x, Evaluations* ev) {
  if (!(t_k < t_next)) throw ConfigError("operator_split_step needs t_k < t_next");
  const double dt = t_next - t_k;
  GradientContext ctx{t_next, dt, cfg.grid.next_after(t_next), 0.0};
  Vector xt;
  std::optional<SignalEval> first;
  if (cfg.reuse_endpoint) {
    // One lookahead at (t_k, x) serves both the step and the first sub-step.
    first = signal_with_endpoint(map, r, t_k, x, cfg.variant, ev);
    xt = linearized_step(t_k, t_next, x, first->endpoint);
    ctx.velocity_norm = (first->endpoint - x).norm() / (1.0 - t_k);
  } else {
    xt = map.eval(t_k, t_next, x);
    if (ev) ++ev->nfe;
    ctx.velocity_norm = (xt - x).norm() / dt;
  }
  Vector out = gradient_updates(map, r, cfg, ctx, cfg.variant, xt, first ? &*first : nullptr, ev);
  Vector u = (out - xt) / dt;
  return {std::move(out), std::move(u)};
}

Vector stochastic_renoise(const FlowMap& map, double t, double t_next, const Vector& x, double c,
                          const Vector& noise, Evaluations* ev) {
  if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("renoise mixing must lie in [0, 1]");
  if (c == 0.0) return x;
  if (!(t_next > t)) throw ConfigError("stochastic_renoise needs t_next > t");
  const Vector v = (map.eval(t, t_next, x) - x) / (t_next - t);
  if (ev) ++ev->nfe;
  const Vector x1 = x + (1.0 - t) * v;
  const Vector x0 = x - t * v;
  const Vector x0_mixed = (1.0 - c) * x0 + c * noise;
  return (1.0 - t) * x0_mixed + t * x1;
}

TrajectoryRecord run_guided_trajectory(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                                       const Vector& x0, const RunOptions& opts) {
  GuidedRun run(map, r, cfg, opts);
  run.start(x0);
  run.advance(run.guided_steps());
  return run.finish();
}

TrajectoryRecord warmup_select(const FlowMap& map, const Reward& r, const GuidanceConfig& cfg,
                               const std::vector<Vector>& starts, const RunOptions& opts) {
  if (starts.empty()) throw ConfigError("warmup needs at least one start");
  if (starts.size() == 1) return run_guided_trajectory(map, r, cfg, starts.front(), opts);

  std::vector<GuidedRun> runs;
  runs.reserve(starts.size());
  for (std::size_t j = 0; j < starts.size(); ++j) runs.emplace_back(map, r, cfg, opts);
  const std::size_t total = runs.front().guided_steps();
  const auto warm = static_cast<std::size_t>(std::ceil(cfg.warmup_fraction * static_cast<double>(total) - 1e-12));

  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t j = 0; j < runs.size(); ++j) {
    runs[j].start(starts[j]);
    runs[j].advance(warm);
    const double s = runs[j].score();
    if (j == 0 || s > best_score) {
      best = j;
      best_score = s;
    }
  }
  GuidedRun& winner = runs[best];
  for (std::size_t j = 0; j < runs.size(); ++j)
    if (j != best) winner.absorb(runs[j].evaluations());
  winner.advance(total);
  TrajectoryRecord rec = winner.finish();
  rec.winner = best;
  return rec;
}

}  // namespace fmrg
