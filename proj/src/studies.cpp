#include "fmrg/studies.hpp"

#include "fmrg/baselines.hpp"
#include "fmrg/flow_map.hpp"
#include "fmrg/guidance.hpp"
#include "fmrg/lqr.hpp"
#include "fmrg/theory.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace fmrg {

bool CheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void CheckReport::add(std::string name, double value, double tolerance) {
  checks.push_back({std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance});
}

std::vector<EnsembleSummary> lambda_sweep(const ExperimentConfig& cfg, unsigned threads) {
  if (cfg.sweep_lambdas.empty()) throw ConfigError("sweep.lambdas is empty");
  for (double l : cfg.sweep_lambdas)
    if (!(l >= 0.0)) throw ConfigError("sweep.lambdas must be non-negative");
  std::vector<std::string> methods = cfg.sweep_methods;
  if (methods.empty()) methods = {"greedy", "exact", "tilt"};

  std::vector<EnsembleSummary> out;
  for (const auto& name : methods) {
    for (double lambda : cfg.sweep_lambdas) {
      ExperimentConfig c = cfg;
      c.eta = lambda;
      if (name == "greedy") {
        c.method = "fmrg-j";
        c.schedule = "constant";
      } else if (name == "exact") {
        c.method = "lqr";
      } else {
        c.method = name;
      }
      out.push_back(run_ensemble(c, threads));
    }
  }
  return out;
}

std::vector<EnsembleSummary> early_stop_study(const ExperimentConfig& cfg, unsigned threads) {
  if (cfg.target.kind != "gaussian") throw ConfigError("early-stop study needs a Gaussian target");
  ExperimentConfig base = cfg;
  base.method = "fmrg-j";
  base.schedule = "constant";
  std::vector<EnsembleSummary> out;
  for (double ts : cfg.earlystop_t_stops) {
    if (!(ts > 0.0 && ts <= 1.0)) throw ConfigError("earlystop.t_stops must lie in (0, 1]");
    ExperimentConfig c = base;
    c.t_stop = ts;
    out.push_back(run_ensemble(c, threads));
  }
  ExperimentConfig c = base;
  c.t_stop = solve_t_stop(cfg.target.sigma1, cfg.eta);
  EnsembleSummary s = run_ensemble(c, threads);
  s.method = "fmrg-j-solved";
  out.push_back(std::move(s));
  return out;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ConfigError("fit_loglog: size mismatch");
  if (n < 3) throw ConfigError("fit_loglog: need at least 3 points");
  std::vector<double> lx(n), ly(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ConfigError("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i] / static_cast<double>(n);
    my += ly[i] / static_cast<double>(n);
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("fit_loglog: x values are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - intercept - slope * lx[i];
    ssr += e * e;
  }
  const double dof = static_cast<double>(n - 2);
  const double se = std::sqrt(ssr / dof / sxx);
  const double q = boost::math::quantile(boost::math::students_t(dof), 0.975);
  return {slope, intercept, se, slope - q * se, slope + q * se};
}

SlopeResult scaling_slope(const ExperimentConfig& cfg) {
  if (cfg.target.kind != "gaussian" || cfg.target.mu1.size() != 1)
    throw ConfigError("slope study needs a 1-D Gaussian target");
  if (cfg.reward.kind != "quadratic") throw ConfigError("slope study needs a quadratic reward");
  if (cfg.slope_lambdas.size() < 6) throw ConfigError("slope study needs at least 6 lambda values");

  const GaussianTarget target(Vector::Constant(1, cfg.target.mu1[0]), cfg.target.sigma1);
  const AnalyticGaussianFlowMap map(target);
  const QuadraticReward reward(Vector::Constant(1, cfg.reward.a.at(0)));
  const Vector x = Vector::Constant(1, cfg.slope_x);
  const double t = cfg.slope_t;

  const Vector signal = greedy_guidance_signal(map, reward, t, x, GradientVariant::jacobian);
  const Vector dv1 = first_order_value_grad(map, reward, t, x);

  SlopeResult out;
  for (double lambda : cfg.slope_lambdas) {
    if (!(lambda > 0.0)) throw ConfigError("slope.lambdas must be positive");
    const Vector u_star = lqr_exact_control(target, reward.center(), lambda, t, x);
    const Vector diff = u_star - lambda * signal;
    const double gap = diff.norm();
    const double corrected = (diff + lambda * lambda * dv1).norm();
    if (gap < 1e-13 || corrected < 1e-13)
      throw NumericalFailure("slope study: gap below 1e-13 at lambda = " + std::to_string(lambda) +
                             "; the lambda grid is too small");
    out.lambdas.push_back(lambda);
    out.gaps.push_back(gap);
    out.corrected_gaps.push_back(corrected);
  }
  out.raw = fit_loglog(out.lambdas, out.gaps);
  out.corrected = fit_loglog(out.lambdas, out.corrected_gaps);
  return out;
}

namespace {

double rel_residual(const Vector& got, const Vector& want) {
  return (got - want).lpNorm<Eigen::Infinity>() / std::max(1.0, want.lpNorm<Eigen::Infinity>());
}

double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Matrix random_spd(CounterRng& rng, int d) {
  Matrix l(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) l(i, j) = 0.5 * rng.normal();
  return l * l.transpose() + 0.1 * Matrix::Identity(d, d);
}

Target random_target(CounterRng& rng, bool mixture) {
  if (!mixture) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 4);
    return GaussianTarget(rng.normal_vector(d), uniform(rng, 0.3, 2.5));
  }
  const int d = 2;
  const double w = uniform(rng, 0.2, 0.8);
  std::vector<GaussianComponent> comps;
  comps.push_back({w, 2.0 * rng.normal_vector(d), random_spd(rng, d)});
  comps.push_back({1.0 - w, 2.0 * rng.normal_vector(d), random_spd(rng, d)});
  return GaussianMixtureTarget(std::move(comps));
}

std::unique_ptr<Reward> random_reward(CounterRng& rng, int d) {
  if (rng.uniform() < 0.5) return std::make_unique<QuadraticReward>(rng.normal_vector(d));
  const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<unsigned>(d));
  Matrix a(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return std::make_unique<LinearMeasurementReward>(a, rng.normal_vector(m));
}

}  // namespace

CheckReport reduction_check(std::uint64_t seed, std::size_t cases, double tolerance) {
  double dps = 0.0, dps_step_res = 0.0, flowdps = 0.0, flowchef = 0.0, mpgd = 0.0, pmean = 0.0;
  const auto schedule = InterpolantSchedule::linear();
  for (std::size_t c = 0; c < cases; ++c) {
    CounterRng rng(seed, c);
    const Target target = random_target(rng, c % 2 == 1);
    const int d = target_dim(target);
    const std::shared_ptr<const VelocityField> b = make_velocity(target);
    const EulerFlowMap euler(b);
    const auto r = random_reward(rng, d);
    const double t = uniform(rng, 0.02, 0.95);
    const double t_next = t + uniform(rng, 0.01, 1.0) * (1.0 - t);
    const Vector x = 1.5 * rng.normal_vector(d);
    const double w = uniform(rng, 0.1, 2.0);

    const Vector sig_j = greedy_guidance_signal(euler, *r, t, x, GradientVariant::jacobian);
    const Vector sig_e = greedy_guidance_signal(euler, *r, t, x, GradientVariant::euclidean);
    const Vector base = euler_step(*b, t, t_next - t, x);

    dps = std::max(dps, rel_residual(dps_signal(*b, *r, t, x, w), w * sig_j));
    dps_step_res = std::max(dps_step_res, rel_residual(dps_step(*b, *r, t, t_next, x, w), base + w * sig_j));
    flowdps = std::max(flowdps, rel_residual(flowdps_step(*b, *r, t, t_next, x, w),
                                             base + (1.0 - t) * t_next * w * sig_e));
    flowchef = std::max(flowchef, rel_residual(flowchef_step(*b, *r, t, t_next, x, w), base + w * sig_e));
    mpgd = std::max(mpgd, rel_residual(mpgd_step(*b, *r, t, t_next, x, w), base + t_next * w * sig_e));
    pmean = std::max(pmean, (posterior_mean(*b, schedule, t, x) - euler_step(*b, t, 1.0 - t, x)).lpNorm<Eigen::Infinity>());
  }
  CheckReport rep;
  rep.add("dps signal = lambda * Euler-substituted FMRG-J signal", dps, tolerance);
  rep.add("dps step = Euler step + weight * Euler-substituted FMRG-J signal", dps_step_res, tolerance);
  rep.add("flowdps step = Euler step + (1-t) t_next eta * Euler-substituted FMRG-E signal", flowdps, tolerance);
  rep.add("flowchef step = Euler step + s' * Euler-substituted FMRG-E signal", flowchef, tolerance);
  rep.add("mpgd step = Euler step + t_next c * Euler-substituted FMRG-E signal", mpgd, tolerance);
  rep.add("posterior mean = Euler step to t = 1", pmean, 0.0);
  return rep;
}

namespace {

// Sixth-order central difference of f at z.
template <class F>
Vector derivative7(F f, double z, double h) {
  return (f(z + 3.0 * h) - f(z - 3.0 * h) - 9.0 * (f(z + 2.0 * h) - f(z - 2.0 * h)) +
          45.0 * (f(z + h) - f(z - h))) /
         (60.0 * h);
}

struct AxiomTolerances {
  double semigroup;
  double lagrangian;
  double eulerian;
  double perturbation;
};

void axiom_suite(CheckReport& rep, const std::string& label, const FlowMap& map, const VelocityField& b,
                 CounterRng& rng, int samples, const AxiomTolerances& tol) {
  const int d = map.dim();
  double jump = 0.0, jump_jac = 0.0, semi = 0.0, round_trip = 0.0, lag = 0.0, eul = 0.0;
  double jac_fd = 0.0, vjp_jac = 0.0, vjp_fd = 0.0, pert = 0.0;
  for (int i = 0; i < samples; ++i) {
    double s = uniform(rng, 0.05, 0.6), u = uniform(rng, 0.05, 0.95), t = uniform(rng, 0.4, 0.95);
    if (s > u) std::swap(s, u);
    if (u > t) std::swap(u, t);
    if (s > u) std::swap(s, u);
    const Vector x = rng.normal_vector(d);
    const Vector v = rng.normal_vector(d);

    jump = std::max(jump, (map.eval(t, t, x) - x).norm());
    jump_jac = std::max(jump_jac, (map.jacobian(t, t, x) - Matrix::Identity(d, d)).norm());
    semi = std::max(semi, check_semigroup(map, s, u, t, x));
    round_trip = std::max(round_trip, (map.eval(t, s, map.eval(s, t, x)) - x).norm());

    const Vector xt = map.eval(s, t, x);
    const Vector dt_fd = derivative7([&](double z) { return map.eval(s, z, x); }, t, 2e-3);
    lag = std::max(lag, rel_residual(dt_fd, b.eval(t, xt)));
    const Vector ds_fd = derivative7([&](double z) { return map.eval(z, t, x); }, s, 2e-3);
    const Matrix j = map.jacobian(s, t, x);
    eul = std::max(eul, (ds_fd + j * b.eval(s, x)).norm() / std::max(1.0, ds_fd.norm()));

    const Matrix fd = finite_difference_flow_jacobian(map, s, t, x);
    jac_fd = std::max(jac_fd, (j - fd).norm() / j.norm());
    const Vector w = map.vjp(s, t, x, v);
    vjp_jac = std::max(vjp_jac, rel_residual(w, j.transpose() * v));
    const Vector wfd = fd.transpose() * v;
    vjp_fd = std::max(vjp_fd, (w - wfd).norm() / wfd.norm());

    // Constant control u: X^u_{s,t}(x) - X_{s,t}(x) = int_s^t grad X_{tau,t}(x^u_tau) u dtau.
    const Vector uc = 0.3 * rng.normal_vector(d);
    const ControlledVelocity bu(b, [&](double, const Vector&) { return uc; });
    auto path = [&](double tau) {
      const auto n = static_cast<std::size_t>(std::ceil(std::abs(tau - s) * 2000.0)) + 1;
      return rk4_integrate(bu, s, tau, x, n);
    };
    using Gauss = boost::math::quadrature::gauss<double, 20>;
    const double mid = 0.5 * (s + t), half = 0.5 * (t - s);
    Vector integral = Vector::Zero(d);
    for (std::size_t k = 0; k < Gauss::abscissa().size(); ++k) {
      for (double sign : {-1.0, 1.0}) {
        const double tau = mid + sign * half * Gauss::abscissa()[k];
        integral += half * Gauss::weights()[k] * (map.jacobian(tau, t, path(tau)) * uc);
      }
    }
    const Vector lhs = path(t) - xt;
    pert = std::max(pert, (lhs - integral).norm());
  }
  rep.add(label + ": jump condition X_{t,t}(x) = x", jump, 0.0);
  rep.add(label + ": jacobian at zero width = I", jump_jac, 0.0);
  rep.add(label + ": semigroup", semi, tol.semigroup);
  rep.add(label + ": backward round trip", round_trip, tol.semigroup);
  rep.add(label + ": Lagrangian equation (relative)", lag, tol.lagrangian);
  rep.add(label + ": Eulerian equation", eul, tol.eulerian);
  rep.add(label + ": Eulerian perturbation identity", pert, tol.perturbation);
  rep.add(label + ": jacobian vs finite differences (relative)", jac_fd, 1e-4);
  rep.add(label + ": vjp vs jacobian transpose", vjp_jac, 1e-8);
  rep.add(label + ": vjp vs finite differences (relative)", vjp_fd, 1e-4);
}

}  // namespace

CheckReport flow_map_axioms(std::uint64_t seed) {
  CheckReport rep;
  CounterRng rng(seed, 0);

  Vector mu(2);
  mu << 0.5, -1.0;
  const GaussianTarget gauss(mu, 2.0);
  const AnalyticGaussianFlowMap analytic(gauss);
  const GaussianVelocity gv(gauss);
  axiom_suite(rep, "analytic gaussian", analytic, gv, rng, 20, {1e-10, 1e-10, 1e-10, 1e-4});

  Matrix s0(2, 2), s1(2, 2);
  s0 << 0.3, 0.1, 0.1, 0.2;
  s1 << 0.25, -0.05, -0.05, 0.4;
  Vector m0(2), m1(2);
  m0 << -1.5, 0.5;
  m1 << 1.2, -0.8;
  GaussianMixtureTarget gmm({{0.4, m0, s0}, {0.6, m1, s1}});
  auto velocity = std::make_shared<const GmmVelocity>(gmm);
  const NumericFlowMap numeric(velocity, 1000.0);
  axiom_suite(rep, "numeric mixture", numeric, *velocity, rng, 4, {1e-4, 1e-4, 1e-3, 1e-4});

  // The numeric map wrapping a Gaussian velocity against the closed form.
  const NumericFlowMap wrapped(std::make_shared<const GaussianVelocity>(gauss), 1000.0);
  double agree = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double s = uniform(rng, 0.0, 0.5), t = uniform(rng, 0.5, 1.0);
    const Vector x = rng.normal_vector(2);
    agree = std::max(agree, (wrapped.eval(s, t, x) - analytic.eval(s, t, x)).norm());
  }
  rep.add("numeric gaussian map vs closed form", agree, 1e-6);
  return rep;
}

double tangent_attenuation(const DegenerateGaussianTarget& target, double t, const Vector& x) {
  const AnalyticGaussianFlowMap map(target.mu1, target.covariance());
  const int d = target.dim(), k = static_cast<int>(target.basis.cols());
  const Matrix q = Eigen::HouseholderQR<Matrix>(target.basis).householderQ();
  double par = std::numeric_limits<double>::infinity(), perp = 0.0;
  for (int j = 0; j < d; ++j) {
    const Vector v = q.col(j);
    const double n = map.vjp(t, 1.0, x, v).norm();
    if (j < k) par = std::min(par, n);
    else perp = std::max(perp, n);
  }
  return perp / par;
}

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

InverseReport toy_inverse_problem(const ExperimentConfig& cfg, unsigned threads) {
  if (cfg.target.kind != "gmm") throw ConfigError("inverse problem needs a gmm target");
  const auto gmm = std::get<GaussianMixtureTarget>(build_target(cfg));
  const int d = gmm.dim();
  CounterRng truth_rng(derive_seed(cfg.inverse.truth_seed, 0x1a7e), 0);

  InverseReport rep;
  rep.truth = draw(gmm, truth_rng);
  rep.y = rep.truth[0];

  ExperimentConfig base = cfg;
  base.reward = RewardSpec{};
  base.reward.kind = "linear";
  base.reward.A = {std::vector<double>(static_cast<std::size_t>(d), 0.0)};
  base.reward.A[0][0] = 1.0;
  base.reward.y = {rep.y};
  base.knots.clear();
  base.t_stop = 1.0;
  base.n_opt = 1;
  base.warmup_k = 1;
  base.renoise_c = 0.0;
  base.seed_opt_steps = 0;
  base.steps = cfg.inverse.nfe;

  auto run = [&](const std::string& label, ExperimentConfig c) {
    const LinearMeasurementReward r(Matrix::Identity(1, d), Vector::Constant(1, rep.y));
    const EnsembleRun e = simulate_ensemble(c, threads);
    std::vector<double> err(e.terminals.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < e.terminals.size(); ++i) {
      err[i] = r.residual_sq(e.terminals[i]);
      ll += gmm.log_density(e.terminals[i]) / static_cast<double>(e.terminals.size());
    }
    rep.rows.push_back({label, e.nfe, median(err), ll});
  };

  ExperimentConfig c = base;
  c.method = "unguided";
  run("unguided", c);

  // With the endpoint reused, steps - 1 guided steps plus the terminal jump
  // use exactly `steps` evaluations.
  c = base;
  c.method = "fmrg-e";
  c.reuse = true;
  c.eta = cfg.inverse.eta_fmrg_e;
  c.schedule = cfg.inverse.schedule_fmrg_e;
  run("fmrg-e", c);

  c = base;
  c.method = "fmrg-j";
  c.reuse = true;
  c.eta = cfg.inverse.eta_fmrg_j;
  c.schedule = cfg.inverse.schedule_fmrg_j;
  run("fmrg-j", c);

  c = base;
  c.method = "flowdps";
  c.eta = cfg.inverse.eta_flowdps;
  run("flowdps", c);

  c = base;
  c.method = "flowchef";
  c.eta = cfg.inverse.eta_flowchef;
  run("flowchef", c);

  for (const auto& row : rep.rows)
    if (row.method != "unguided" && row.nfe != static_cast<std::size_t>(cfg.inverse.nfe))
      throw NumericalFailure("inverse problem: " + row.method + " used " + std::to_string(row.nfe) +
                             " evaluations instead of " + std::to_string(cfg.inverse.nfe));
  return rep;
}

}  // namespace fmrg
