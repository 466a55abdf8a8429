#include "fmrg/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace fmrg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s.empty()) throw ConfigError(key + ": expected a number");
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(d))
    throw ConfigError(key + ": cannot parse number '" + s + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError(key + ": cannot parse integer '" + s + "'");
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s.empty() || s[0] == '-') throw ConfigError(key + ": expected a non-negative integer");
  char* end = nullptr;
  errno = 0;
  const unsigned long long i = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError(key + ": cannot parse integer '" + s + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& p : split(v, ',')) out.push_back(to_double(key, p));
  return out;
}

Rows to_rows(const std::string& key, const std::string& v) {
  Rows out;
  if (trim(v).empty()) return out;
  for (const auto& r : split(v, ';')) out.push_back(to_list(key, r));
  return out;
}

std::vector<std::string> to_strings(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (auto& p : split(v, ',')) out.push_back(p);
  return out;
}

std::string fmt(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

std::string fmt(const Rows& rows) {
  std::string s;
  for (std::size_t i = 0; i < rows.size(); ++i) s += (i ? "; " : "") + fmt(rows[i]);
  return s;
}

std::string fmt(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"target.kind", [](auto& c, auto&, auto& v) { c.target.kind = v; }},
      {"target.mu1", [](auto& c, auto& k, auto& v) { c.target.mu1 = to_list(k, v); }},
      {"target.sigma1", [](auto& c, auto& k, auto& v) { c.target.sigma1 = to_double(k, v); }},
      {"target.basis", [](auto& c, auto& k, auto& v) { c.target.basis = to_rows(k, v); }},
      {"target.sigma_par", [](auto& c, auto& k, auto& v) { c.target.sigma_par = to_double(k, v); }},
      {"target.sigma_perp", [](auto& c, auto& k, auto& v) { c.target.sigma_perp = to_double(k, v); }},
      {"reward.kind", [](auto& c, auto&, auto& v) { c.reward.kind = v; }},
      {"reward.a", [](auto& c, auto& k, auto& v) { c.reward.a = to_list(k, v); }},
      {"reward.A", [](auto& c, auto& k, auto& v) { c.reward.A = to_rows(k, v); }},
      {"reward.y", [](auto& c, auto& k, auto& v) { c.reward.y = to_list(k, v); }},
      {"method.name", [](auto& c, auto&, auto& v) { c.method = v; }},
      {"guidance.eta", [](auto& c, auto& k, auto& v) { c.eta = to_double(k, v); }},
      {"guidance.schedule", [](auto& c, auto&, auto& v) { c.schedule = v; }},
      {"guidance.n_opt", [](auto& c, auto& k, auto& v) { c.n_opt = static_cast<int>(to_int(k, v)); }},
      {"guidance.steps", [](auto& c, auto& k, auto& v) { c.steps = static_cast<int>(to_int(k, v)); }},
      {"guidance.knots", [](auto& c, auto& k, auto& v) { c.knots = to_list(k, v); }},
      {"guidance.t_stop", [](auto& c, auto& k, auto& v) { c.t_stop = to_double(k, v); }},
      {"guidance.reuse_endpoint", [](auto& c, auto& k, auto& v) { c.reuse = to_bool(k, v); }},
      {"guidance.warmup_k", [](auto& c, auto& k, auto& v) { c.warmup_k = static_cast<int>(to_int(k, v)); }},
      {"guidance.warmup_fraction", [](auto& c, auto& k, auto& v) { c.warmup_fraction = to_double(k, v); }},
      {"guidance.renoise_c", [](auto& c, auto& k, auto& v) { c.renoise_c = to_double(k, v); }},
      {"guidance.renoise_start", [](auto& c, auto& k, auto& v) { c.renoise_start = to_double(k, v); }},
      {"guidance.seed_opt_steps",
       [](auto& c, auto& k, auto& v) { c.seed_opt_steps = static_cast<int>(to_int(k, v)); }},
      {"flow.substeps", [](auto& c, auto& k, auto& v) { c.flow_substeps = to_double(k, v); }},
      {"ensemble.particles", [](auto& c, auto& k, auto& v) { c.particles = to_u64(k, v); }},
      {"ensemble.seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"sweep.lambdas", [](auto& c, auto& k, auto& v) { c.sweep_lambdas = to_list(k, v); }},
      {"sweep.methods", [](auto& c, auto&, auto& v) { c.sweep_methods = to_strings(v); }},
      {"earlystop.t_stops", [](auto& c, auto& k, auto& v) { c.earlystop_t_stops = to_list(k, v); }},
      {"slope.lambdas", [](auto& c, auto& k, auto& v) { c.slope_lambdas = to_list(k, v); }},
      {"slope.t", [](auto& c, auto& k, auto& v) { c.slope_t = to_double(k, v); }},
      {"slope.x", [](auto& c, auto& k, auto& v) { c.slope_x = to_double(k, v); }},
      {"inverse.nfe", [](auto& c, auto& k, auto& v) { c.inverse.nfe = static_cast<int>(to_int(k, v)); }},
      {"inverse.truth_seed", [](auto& c, auto& k, auto& v) { c.inverse.truth_seed = to_u64(k, v); }},
      {"inverse.eta_fmrg_e", [](auto& c, auto& k, auto& v) { c.inverse.eta_fmrg_e = to_double(k, v); }},
      {"inverse.eta_fmrg_j", [](auto& c, auto& k, auto& v) { c.inverse.eta_fmrg_j = to_double(k, v); }},
      {"inverse.eta_flowdps", [](auto& c, auto& k, auto& v) { c.inverse.eta_flowdps = to_double(k, v); }},
      {"inverse.eta_flowchef", [](auto& c, auto& k, auto& v) { c.inverse.eta_flowchef = to_double(k, v); }},
      {"inverse.schedule_fmrg_e", [](auto& c, auto&, auto& v) { c.inverse.schedule_fmrg_e = v; }},
      {"inverse.schedule_fmrg_j", [](auto& c, auto&, auto& v) { c.inverse.schedule_fmrg_j = v; }},
  };
  return table;
}

template <class T>
T& at_index(std::vector<T>& v, std::size_t i) {
  if (i >= 64) throw ConfigError("component index too large");
  if (v.size() <= i) v.resize(i + 1);
  return v[i];
}

void validate(const ExperimentConfig& c) {
  const auto& m = known_methods();
  if (std::find(m.begin(), m.end(), c.method) == m.end()) throw ConfigError("unknown method '" + c.method + "'");
  for (const auto& s : c.sweep_methods)
    if (std::find(m.begin(), m.end(), s) == m.end() && s != "greedy" && s != "exact")
      throw ConfigError("unknown sweep method '" + s + "'");
  parse_schedule(c.schedule);
  parse_schedule(c.inverse.schedule_fmrg_e);
  parse_schedule(c.inverse.schedule_fmrg_j);
  if (c.target.kind != "gaussian" && c.target.kind != "gmm" && c.target.kind != "degenerate")
    throw ConfigError("unknown target kind '" + c.target.kind + "'");
  if (c.reward.kind != "quadratic" && c.reward.kind != "linear" && c.reward.kind != "composite")
    throw ConfigError("unknown reward kind '" + c.reward.kind + "'");
  if (c.steps < 1) throw ConfigError("guidance.steps must be >= 1");
  if (c.particles < 1) throw ConfigError("ensemble.particles must be >= 1");
  if (!(c.flow_substeps > 0.0)) throw ConfigError("flow.substeps must be > 0");
  if (c.inverse.nfe < 2) throw ConfigError("inverse.nfe must be >= 2");
}

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"fmrg-j",   "fmrg-e",  "dps", "flowdps", "flowchef",
                                             "mpgd",     "seedopt", "lqr", "tilt",    "unguided"};
  return m;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::map<std::size_t, double> component_std;
  static const std::regex comp_re(R"(target\.component\.(\d+)\.(weight|mean|cov|std))");
  static const std::regex part_re(R"(reward\.part\.(\d+)\.(weight|kind|a|A|y))");

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

    std::smatch m;
    if (auto it = setters().find(key); it != setters().end()) {
      it->second(cfg, key, value);
    } else if (std::regex_match(key, m, comp_re)) {
      const std::size_t i = std::stoul(m[1].str());
      auto& comp = at_index(cfg.target.components, i);
      const std::string field = m[2].str();
      if (field == "weight") comp.weight = to_double(key, value);
      else if (field == "mean") comp.mean = to_list(key, value);
      else if (field == "cov") comp.cov = to_rows(key, value);
      else component_std[i] = to_double(key, value);
    } else if (std::regex_match(key, m, part_re)) {
      const std::size_t i = std::stoul(m[1].str());
      auto& part = at_index(cfg.reward.parts, i);
      const std::string field = m[2].str();
      if (field == "weight") part.weight = to_double(key, value);
      else if (field == "kind") part.kind = value;
      else if (field == "a") part.a = to_list(key, value);
      else if (field == "A") part.A = to_rows(key, value);
      else part.y = to_list(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  for (const auto& [i, sd] : component_std) {
    auto& comp = cfg.target.components[i];
    if (!comp.cov.empty()) throw ConfigError("component " + std::to_string(i) + ": both cov and std given");
    const std::size_t d = comp.mean.size();
    comp.cov.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t k = 0; k < d; ++k) comp.cov[k][k] = sd * sd;
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  kv("target.kind", c.target.kind);
  kv("target.mu1", fmt(c.target.mu1));
  kv("target.sigma1", fmt(c.target.sigma1));
  kv("target.basis", fmt(c.target.basis));
  kv("target.sigma_par", fmt(c.target.sigma_par));
  kv("target.sigma_perp", fmt(c.target.sigma_perp));
  for (std::size_t i = 0; i < c.target.components.size(); ++i) {
    const std::string p = "target.component." + std::to_string(i) + ".";
    kv(p + "weight", fmt(c.target.components[i].weight));
    kv(p + "mean", fmt(c.target.components[i].mean));
    kv(p + "cov", fmt(c.target.components[i].cov));
  }
  kv("reward.kind", c.reward.kind);
  kv("reward.a", fmt(c.reward.a));
  kv("reward.A", fmt(c.reward.A));
  kv("reward.y", fmt(c.reward.y));
  for (std::size_t i = 0; i < c.reward.parts.size(); ++i) {
    const std::string p = "reward.part." + std::to_string(i) + ".";
    kv(p + "weight", fmt(c.reward.parts[i].weight));
    kv(p + "kind", c.reward.parts[i].kind);
    kv(p + "a", fmt(c.reward.parts[i].a));
    kv(p + "A", fmt(c.reward.parts[i].A));
    kv(p + "y", fmt(c.reward.parts[i].y));
  }
  kv("method.name", c.method);
  kv("guidance.eta", fmt(c.eta));
  kv("guidance.schedule", c.schedule);
  kv("guidance.n_opt", std::to_string(c.n_opt));
  kv("guidance.steps", std::to_string(c.steps));
  kv("guidance.knots", fmt(c.knots));
  kv("guidance.t_stop", fmt(c.t_stop));
  kv("guidance.reuse_endpoint", c.reuse ? "true" : "false");
  kv("guidance.warmup_k", std::to_string(c.warmup_k));
  kv("guidance.warmup_fraction", fmt(c.warmup_fraction));
  kv("guidance.renoise_c", fmt(c.renoise_c));
  kv("guidance.renoise_start", fmt(c.renoise_start));
  kv("guidance.seed_opt_steps", std::to_string(c.seed_opt_steps));
  kv("flow.substeps", fmt(c.flow_substeps));
  kv("ensemble.particles", std::to_string(c.particles));
  kv("ensemble.seed", std::to_string(c.seed));
  kv("output.dir", c.out_dir);
  kv("sweep.lambdas", fmt(c.sweep_lambdas));
  kv("sweep.methods", fmt(c.sweep_methods));
  kv("earlystop.t_stops", fmt(c.earlystop_t_stops));
  kv("slope.lambdas", fmt(c.slope_lambdas));
  kv("slope.t", fmt(c.slope_t));
  kv("slope.x", fmt(c.slope_x));
  kv("inverse.nfe", std::to_string(c.inverse.nfe));
  kv("inverse.truth_seed", std::to_string(c.inverse.truth_seed));
  kv("inverse.eta_fmrg_e", fmt(c.inverse.eta_fmrg_e));
  kv("inverse.eta_fmrg_j", fmt(c.inverse.eta_fmrg_j));
  kv("inverse.eta_flowdps", fmt(c.inverse.eta_flowdps));
  kv("inverse.eta_flowchef", fmt(c.inverse.eta_flowchef));
  kv("inverse.schedule_fmrg_e", c.inverse.schedule_fmrg_e);
  kv("inverse.schedule_fmrg_j", c.inverse.schedule_fmrg_j);
  return o.str();
}

namespace {

Vector to_vector(const std::vector<double>& v, const std::string& what) {
  if (v.empty()) throw ConfigError(what + " is empty");
  check_dim(static_cast<int>(v.size()));
  Vector out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

Matrix to_matrix(const Rows& rows, const std::string& what) {
  if (rows.empty() || rows.front().empty()) throw ConfigError(what + " is empty");
  const std::size_t cols = rows.front().size();
  check_dim(static_cast<int>(rows.size()));
  check_dim(static_cast<int>(cols));
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return m;
}

std::shared_ptr<const Reward> make_simple_reward(const std::string& kind, const std::vector<double>& a,
                                                 const Rows& A, const std::vector<double>& y, int d,
                                                 const std::string& where) {
  if (kind == "quadratic") {
    Vector center = to_vector(a, where + ".a");
    if (center.size() == 1 && d > 1) center = Vector::Constant(d, center[0]);
    if (center.size() != d) throw ConfigError(where + ".a: dimension mismatch with target");
    return std::make_shared<QuadraticReward>(center);
  }
  if (kind == "linear") {
    Matrix m = to_matrix(A, where + ".A");
    if (m.cols() != d) throw ConfigError(where + ".A: column count must equal target dimension");
    return std::make_shared<LinearMeasurementReward>(m, to_vector(y, where + ".y"));
  }
  throw ConfigError(where + ": unknown reward kind '" + kind + "'");
}

}  // namespace

Target build_target(const ExperimentConfig& cfg) {
  const auto& t = cfg.target;
  if (t.kind == "gaussian") return GaussianTarget(to_vector(t.mu1, "target.mu1"), t.sigma1);
  if (t.kind == "degenerate")
    return DegenerateGaussianTarget(to_vector(t.mu1, "target.mu1"), to_matrix(t.basis, "target.basis"), t.sigma_par,
                                    t.sigma_perp);
  if (t.kind == "gmm") {
    std::vector<GaussianComponent> comps;
    for (std::size_t i = 0; i < t.components.size(); ++i) {
      const auto& c = t.components[i];
      const std::string where = "target.component." + std::to_string(i);
      comps.push_back({c.weight, to_vector(c.mean, where + ".mean"), to_matrix(c.cov, where + ".cov")});
    }
    if (comps.empty()) throw ConfigError("gmm target needs target.component.* entries");
    return GaussianMixtureTarget(std::move(comps));
  }
  throw ConfigError("unknown target kind '" + t.kind + "'");
}

std::shared_ptr<const Reward> build_reward(const ExperimentConfig& cfg) {
  const int d = target_dim(build_target(cfg));
  const auto& r = cfg.reward;
  if (r.kind != "composite") return make_simple_reward(r.kind, r.a, r.A, r.y, d, "reward");
  std::vector<CompositeReward::Part> parts;
  for (std::size_t i = 0; i < r.parts.size(); ++i) {
    const auto& p = r.parts[i];
    parts.emplace_back(p.weight, make_simple_reward(p.kind, p.a, p.A, p.y, d, "reward.part." + std::to_string(i)));
  }
  return std::make_shared<CompositeReward>(std::move(parts));
}

GuidanceConfig build_guidance(const ExperimentConfig& cfg) {
  GuidanceConfig g;
  g.variant = cfg.method == "fmrg-e" ? GradientVariant::euclidean : GradientVariant::jacobian;
  g.eta = cfg.eta;
  g.schedule = parse_schedule(cfg.schedule);
  g.n_opt = cfg.n_opt;
  g.grid = cfg.knots.empty() ? TimeGrid::uniform(static_cast<std::size_t>(cfg.steps)) : TimeGrid(cfg.knots);
  g.t_stop = cfg.t_stop;
  g.reuse_endpoint = cfg.reuse;
  g.warmup_k = cfg.warmup_k;
  g.warmup_fraction = cfg.warmup_fraction;
  g.renoise_c = cfg.renoise_c;
  g.renoise_start = cfg.renoise_start;
  g.seed_opt_steps = cfg.seed_opt_steps;
  g.validate();
  return g;
}

}  // namespace fmrg
