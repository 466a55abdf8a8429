#include "fmrg/config.hpp"
#include "fmrg/ensemble.hpp"
#include "fmrg/report.hpp"
#include "fmrg/studies.hpp"
#include "fmrg/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using fmrg::CheckResult;
using fmrg::ExperimentConfig;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> particles;
  unsigned threads = 1;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : fmrg::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.particles) {
    if (*o.particles == 0) throw fmrg::ConfigError("--particles must be >= 1");
    cfg.particles = *o.particles;
  }
  return cfg;
}

std::vector<CheckResult> prediction_checks(const std::vector<fmrg::EnsembleSummary>& rows) {
  std::vector<CheckResult> out;
  for (const auto& r : rows) {
    if (!r.prediction) continue;
    const std::string tag = r.method + " lambda=" + std::to_string(r.lambda) + " t_stop=" + std::to_string(r.t_stop);
    const double dv = std::abs(r.emp_var - r.prediction->variance) / r.prediction->variance;
    const double dm = std::abs(r.emp_mean - r.prediction->mean);
    out.push_back({tag + ": variance relative error", dv, 0.02, dv <= 0.02});
    out.push_back({tag + ": mean absolute error", dm, 0.02, dm <= 0.02});
  }
  return out;
}

void print_rows(const std::vector<fmrg::EnsembleSummary>& rows) {
  std::cout << fmrg::to_csv(rows);
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    std::printf("%s  %-72s %.3e (tol %.1e)\n", c.passed ? "ok  " : "FAIL", c.name.c_str(), c.value, c.tolerance);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_table(const Options& o, const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(o);
  std::vector<fmrg::EnsembleSummary> rows;
  if (name == "run") rows.push_back(fmrg::run_ensemble(cfg, o.threads));
  else if (name == "sweep") rows = fmrg::lambda_sweep(cfg, o.threads);
  else rows = fmrg::early_stop_study(cfg, o.threads);
  const auto checks = name == "run" ? std::vector<CheckResult>{} : prediction_checks(rows);
  fmrg::write_file(cfg.out_dir + "/" + name + ".csv", fmrg::to_csv(rows));
  fmrg::write_file(cfg.out_dir + "/" + name + ".json", fmrg::json_summary(cfg, name, seconds_since(t0), checks));
  print_rows(rows);
  print_checks(checks);
  return 0;
}

int cmd_slope(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(o);
  const fmrg::SlopeResult s = fmrg::scaling_slope(cfg);
  std::string csv = "lambda,gap,corrected_gap\n";
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", s.lambdas[i], s.gaps[i], s.corrected_gaps[i]);
    csv += buf;
  }
  const std::vector<CheckResult> checks = {
      {"slope of |u_lqr - u_J| within [1.9, 2.1]", std::abs(s.raw.slope - 2.0), 0.1,
       s.raw.slope >= 1.9 && s.raw.slope <= 2.1},
      {"corrected slope >= 2.8", 2.8 - s.corrected.slope, 0.0, s.corrected.slope >= 2.8},
  };
  nlohmann::ordered_json extra;
  extra["slope"] = {{"value", s.raw.slope}, {"ci95", {s.raw.ci_low, s.raw.ci_high}}};
  extra["corrected_slope"] = {{"value", s.corrected.slope}, {"ci95", {s.corrected.ci_low, s.corrected.ci_high}}};
  fmrg::write_file(cfg.out_dir + "/slope.csv", csv);
  fmrg::write_file(cfg.out_dir + "/slope.json", fmrg::json_summary(cfg, "slope", seconds_since(t0), checks, extra.dump()));
  std::cout << csv;
  std::printf("slope %.6f [%.6f, %.6f]  corrected %.6f [%.6f, %.6f]\n", s.raw.slope, s.raw.ci_low, s.raw.ci_high,
              s.corrected.slope, s.corrected.ci_low, s.corrected.ci_high);
  print_checks(checks);
  return 0;
}

int cmd_verify(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(o);
  std::vector<CheckResult> checks = fmrg::reduction_check(cfg.seed).checks;
  for (auto& c : fmrg::flow_map_axioms(cfg.seed).checks) checks.push_back(std::move(c));

  double back = 0.0;
  for (double s1 : {0.5, 1.0, 2.0})
    for (double lambda : {0.01, 0.1, 0.75, 1.0, 5.0}) {
      const double ts = fmrg::solve_t_stop(s1, lambda);
      const double exact = fmrg::predict_terminal(fmrg::TheoryMethod::exact, 0.0, s1, 0.0, lambda).variance;
      back = std::max(back, std::abs(fmrg::early_stop_variance(s1, lambda, ts) - exact));
    }
  checks.push_back({"solve_t_stop back-substitution", back, 1e-10, back <= 1e-10});

  fmrg::write_file(cfg.out_dir + "/verify.json", fmrg::json_summary(cfg, "verify", seconds_since(t0), checks));
  print_checks(checks);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  std::cout << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
  return ok ? 0 : 4;
}

int cmd_inverse(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load(o);
  const fmrg::InverseReport rep = fmrg::toy_inverse_problem(cfg, o.threads);
  std::vector<CheckResult> checks;
  const double base = rep.rows.front().median_error;
  for (const auto& r : rep.rows) {
    if (r.method == "unguided") continue;
    checks.push_back({r.method + ": median error below unguided", r.median_error - base, 0.0, r.median_error < base});
  }
  nlohmann::ordered_json extra;
  extra["truth"] = std::vector<double>(rep.truth.data(), rep.truth.data() + rep.truth.size());
  extra["y"] = rep.y;
  const std::string csv = fmrg::inverse_csv(rep);
  fmrg::write_file(cfg.out_dir + "/inverse.csv", csv);
  fmrg::write_file(cfg.out_dir + "/inverse.json",
                   fmrg::json_summary(cfg, "inverse", seconds_since(t0), checks, extra.dump()));
  std::cout << csv;
  print_checks(checks);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fmrg_lab: flow map reward guidance experiments on analytic targets"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed override");
  app.add_option("--out", o.out, "output directory override");
  app.add_option("--particles", o.particles, "particle count override");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 256u));

  std::string chosen;
  for (const char* name : {"run", "sweep", "earlystop", "slope", "verify", "inverse"}) {
    static const std::map<std::string, std::string> help = {
        {"run", "one ensemble"},
        {"sweep", "lambda sweep over greedy / exact / tilt"},
        {"earlystop", "early-stopping study with the solved t_stop row"},
        {"slope", "optimality-gap scaling slope"},
        {"verify", "reduction identities and flow-map invariant suite"},
        {"inverse", "toy inverse problem at matched NFE"}};
    app.add_subcommand(name, help.at(name))->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (chosen == "run" || chosen == "sweep" || chosen == "earlystop") return cmd_table(o, chosen);
    if (chosen == "slope") return cmd_slope(o);
    if (chosen == "verify") return cmd_verify(o);
    if (chosen == "inverse") return cmd_inverse(o);
  } catch (const fmrg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fmrg::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
