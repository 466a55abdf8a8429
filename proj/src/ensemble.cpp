#include "fmrg/ensemble.hpp"

#include "fmrg/baselines.hpp"
#include "fmrg/flow_map.hpp"
#include "fmrg/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace fmrg {

namespace {

std::optional<Baseline> baseline_of(const std::string& m) {
  if (m == "dps") return Baseline::dps;
  if (m == "flowdps") return Baseline::flowdps;
  if (m == "flowchef") return Baseline::flowchef;
  if (m == "mpgd") return Baseline::mpgd;
  if (m == "seedopt") return Baseline::seed_opt;
  if (m == "lqr") return Baseline::lqr_exact;
  return std::nullopt;
}

struct Problem {
  Target target;
  std::shared_ptr<const Reward> reward;
  GuidanceConfig guidance;
  std::shared_ptr<const VelocityField> velocity;
  std::unique_ptr<FlowMap> map;
  std::optional<Baseline> baseline;
  int dim;

  explicit Problem(const ExperimentConfig& cfg)
      : target(build_target(cfg)),
        reward(build_reward(cfg)),
        guidance(build_guidance(cfg)),
        velocity(make_velocity(target)),
        map(make_flow_map(target, cfg.flow_substeps)),
        baseline(baseline_of(cfg.method)),
        dim(target_dim(target)) {}
};

TrajectoryRecord run_particle(const ExperimentConfig& cfg, const Problem& p, std::size_t i) {
  CounterRng rng(cfg.seed, i);
  RunOptions opts;
  opts.record_path = false;
  opts.rng = &rng;

  if (cfg.method == "unguided") {
    TrajectoryRecord rec;
    rec.terminal = p.map->eval(0.0, 1.0, rng.normal_vector(p.dim));
    rec.nfe = 1;
    return rec;
  }
  if (p.baseline) {
    const auto* g = std::get_if<GaussianTarget>(&p.target);
    BaselineContext ctx{*p.velocity, p.map.get(), g};
    return run_baseline_trajectory(*p.baseline, ctx, *p.reward, p.guidance, rng.normal_vector(p.dim), opts);
  }
  std::vector<Vector> starts;
  for (int k = 0; k < std::max(1, cfg.warmup_k); ++k) starts.push_back(rng.normal_vector(p.dim));
  return warmup_select(*p.map, *p.reward, p.guidance, starts, opts);
}

}  // namespace

EnsembleRun simulate_ensemble(const ExperimentConfig& cfg, unsigned threads) {
  const auto n = static_cast<std::size_t>(cfg.particles);
  if (n == 0) throw ConfigError("ensemble needs at least one particle");
  Problem p(cfg);
  EnsembleRun out;

  if (cfg.method == "tilt") {
    TiltSamples ts = tilt_sampler(p.target, *p.reward, cfg.eta, n, cfg.seed);
    out.terminals = std::move(ts.samples);
    out.rewards.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.rewards[i] = p.reward->value(out.terminals[i]);
    out.nfe = 0;
    return out;
  }

  out.terminals.resize(n);
  out.rewards.resize(n);
  std::vector<std::size_t> nfe(n, 0);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(n, 1024))));
  std::vector<std::exception_ptr> errors(threads);

  auto work = [&](unsigned w) {
    const std::size_t lo = n * w / threads, hi = n * (w + 1) / threads;
    std::size_t i = lo;
    try {
      for (; i < hi; ++i) {
        TrajectoryRecord rec = run_particle(cfg, p, i);
        out.rewards[i] = p.reward->value(rec.terminal);
        out.terminals[i] = std::move(rec.terminal);
        nfe[i] = rec.nfe;
      }
    } catch (const NumericalFailure& e) {
      errors[w] = std::make_exception_ptr(NumericalFailure("particle " + std::to_string(i) + ": " + e.what()));
    } catch (const ConfigError& e) {
      errors[w] = std::make_exception_ptr(ConfigError("particle " + std::to_string(i) + ": " + e.what()));
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 1; i < n; ++i)
    if (nfe[i] != nfe[0])
      throw NumericalFailure("NFE differs across particles: particle " + std::to_string(i) + " used " +
                             std::to_string(nfe[i]) + ", particle 0 used " + std::to_string(nfe[0]));
  out.nfe = nfe[0];
  return out;
}

namespace {

enum class Theory { none, unguided, tilt, exact, greedy, early_stop };

Theory theory_kind(const ExperimentConfig& cfg) {
  if (cfg.target.kind != "gaussian" || cfg.reward.kind != "quadratic") return Theory::none;
  const std::string& m = cfg.method;
  if (m == "unguided") return Theory::unguided;
  if (m == "tilt") return Theory::tilt;
  if (m == "lqr" && cfg.t_stop >= 1.0) return Theory::exact;
  if (m == "fmrg-j" && cfg.schedule == "constant" && !cfg.reuse && cfg.warmup_k <= 1 && cfg.renoise_c == 0.0 &&
      cfg.seed_opt_steps == 0)
    return cfg.t_stop >= 1.0 ? Theory::greedy : Theory::early_stop;
  return Theory::none;
}

// Batch statistics of one coordinate: per-batch means and variances.
void add_batches(const std::vector<double>& xs, std::size_t b, double w, std::vector<double>& bm,
                 std::vector<double>& bv) {
  const std::size_t n = xs.size();
  for (std::size_t j = 0; j < b; ++j) {
    const std::size_t lo = n * j / b, hi = n * (j + 1) / b;
    const double m = static_cast<double>(hi - lo);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += xs[i];
    const double mean = s / m;
    double q = 0.0;
    for (std::size_t i = lo; i < hi; ++i) q += (xs[i] - mean) * (xs[i] - mean);
    bm[j] += w * mean;
    bv[j] += w * q / (m - 1.0);
  }
}

double standard_error(const std::vector<double>& v) {
  const double b = static_cast<double>(v.size());
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= b;
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / (b - 1.0) / b);
}

}  // namespace

BatchStats batch_moments(const std::vector<double>& xs, std::size_t batches) {
  const std::size_t n = xs.size();
  if (n == 0) throw ConfigError("batch_moments: empty sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n > 1 ? n - 1 : 1);

  const std::size_t b = std::min(batches, n / 2);
  if (b < 2) return {mean, NAN, var, NAN};
  std::vector<double> bm(b, 0.0), bv(b, 0.0);
  add_batches(xs, b, 1.0, bm, bv);
  return {mean, standard_error(bm), var, standard_error(bv)};
}

std::optional<TerminalPrediction> theory_prediction(const ExperimentConfig& cfg, int d) {
  const Theory kind = theory_kind(cfg);
  if (kind == Theory::none) return std::nullopt;
  const auto& mu = cfg.target.mu1;
  std::vector<double> a = cfg.reward.a;
  if (a.size() == 1 && d > 1) a.assign(static_cast<std::size_t>(d), a[0]);
  if (mu.size() != static_cast<std::size_t>(d) || a.size() != static_cast<std::size_t>(d)) return std::nullopt;
  const double s1 = cfg.target.sigma1, lambda = cfg.eta;

  TerminalPrediction out{TheoryMethod::greedy, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < static_cast<std::size_t>(d); ++k) {
    TerminalPrediction p{};
    switch (kind) {
      case Theory::unguided: p = predict_terminal(TheoryMethod::greedy, mu[k], s1, a[k], 0.0); break;
      case Theory::tilt: p = predict_terminal(TheoryMethod::tilt, mu[k], s1, a[k], lambda); break;
      case Theory::exact: p = predict_terminal(TheoryMethod::exact, mu[k], s1, a[k], lambda); break;
      case Theory::greedy: p = predict_terminal(TheoryMethod::greedy, mu[k], s1, a[k], lambda); break;
      case Theory::early_stop: p = predict_early_stop(mu[k], s1, a[k], lambda, cfg.t_stop); break;
      case Theory::none: break;
    }
    out.method = p.method;
    out.mean += p.mean / d;
    out.variance += p.variance / d;
    out.expected_reward += p.expected_reward;
  }
  return out;
}

EnsembleSummary summarize(const ExperimentConfig& cfg, const EnsembleRun& run) {
  const std::size_t n = run.terminals.size();
  if (n == 0) throw ConfigError("summarize: empty ensemble");
  const int d = static_cast<int>(run.terminals.front().size());

  EnsembleSummary s;
  s.method = cfg.method;
  s.lambda = cfg.eta;
  s.t_stop = cfg.t_stop;
  s.n_steps = cfg.knots.empty() ? static_cast<std::size_t>(cfg.steps) : cfg.knots.size() - 1;
  s.n_opt = cfg.n_opt;
  s.reuse = cfg.reuse;
  s.nfe = run.nfe;
  s.particles = n;

  const std::size_t b = std::min(kBatches, n / 2);
  std::vector<double> bm(b, 0.0), bv(b, 0.0), coord(n);
  for (int k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) coord[i] = run.terminals[i][k];
    const BatchStats st = batch_moments(coord, 1);
    s.emp_mean += st.mean / d;
    s.emp_var += st.var / d;
    if (b >= 2) add_batches(coord, b, 1.0 / d, bm, bv);
  }
  s.emp_mean_se = b >= 2 ? standard_error(bm) : NAN;
  s.emp_var_se = b >= 2 ? standard_error(bv) : NAN;
  const BatchStats r = batch_moments(run.rewards);
  s.emp_reward = r.mean;
  s.emp_reward_se = r.mean_se;
  s.prediction = theory_prediction(cfg, d);
  return s;
}

EnsembleSummary run_ensemble(const ExperimentConfig& cfg, unsigned threads) {
  return summarize(cfg, simulate_ensemble(cfg, threads));
}

}  // namespace fmrg
