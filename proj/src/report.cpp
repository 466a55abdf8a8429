#include "fmrg/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef FMRG_GIT_DESCRIBE
#define FMRG_GIT_DESCRIBE "unknown"
#endif

namespace fmrg {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string csv_header() {
  return "method,lambda,t_stop,n_steps,n_opt,reuse,nfe,emp_mean,emp_mean_se,emp_var,emp_var_se,emp_reward,"
         "emp_reward_se,pred_mean,pred_var,pred_reward";
}

std::string csv_row(const EnsembleSummary& s) {
  std::ostringstream o;
  o << s.method << ',' << num(s.lambda) << ',' << num(s.t_stop) << ',' << s.n_steps << ',' << s.n_opt << ','
    << (s.reuse ? "true" : "false") << ',' << s.nfe << ',' << num(s.emp_mean) << ',' << num(s.emp_mean_se) << ','
    << num(s.emp_var) << ',' << num(s.emp_var_se) << ',' << num(s.emp_reward) << ',' << num(s.emp_reward_se) << ',';
  if (s.prediction)
    o << num(s.prediction->mean) << ',' << num(s.prediction->variance) << ',' << num(s.prediction->expected_reward);
  else
    o << ",,";
  return o.str();
}

std::string to_csv(const std::vector<EnsembleSummary>& rows) {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) out += csv_row(r) + "\n";
  return out;
}

std::string inverse_csv(const InverseReport& rep) {
  std::string out = "method,nfe,median_error,mean_loglik\n";
  for (const auto& r : rep.rows)
    out += r.method + "," + std::to_string(r.nfe) + "," + num(r.median_error) + "," + num(r.mean_loglik) + "\n";
  return out;
}

const char* git_describe() { return FMRG_GIT_DESCRIBE; }

std::string json_summary(const ExperimentConfig& cfg, const std::string& command, double wall_seconds,
                         const std::vector<CheckResult>& assertions, const std::string& extra) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["git_describe"] = git_describe();
  j["wall_seconds"] = wall_seconds;

  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    echo[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = echo;

  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& a : assertions) {
    list.push_back({{"name", a.name}, {"value", a.value}, {"tolerance", a.tolerance}, {"passed", a.passed}});
    all = all && a.passed;
  }
  j["assertions"] = list;
  j["passed"] = all;

  const auto more = nlohmann::ordered_json::parse(extra);
  if (more.is_object())
    for (auto it = more.begin(); it != more.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
  if (!f) throw Error("write failed for '" + path + "'");
}

}  // namespace fmrg
