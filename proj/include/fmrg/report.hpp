#pragma once

#include "fmrg/config.hpp"
#include "fmrg/ensemble.hpp"
#include "fmrg/studies.hpp"

#include <string>
#include <vector>

namespace fmrg {

// method,lambda,t_stop,n_steps,n_opt,reuse,nfe,emp_mean,emp_mean_se,emp_var,
// emp_var_se,emp_reward,emp_reward_se,pred_mean,pred_var,pred_reward
std::string csv_header();
std::string csv_row(const EnsembleSummary& s);
std::string to_csv(const std::vector<EnsembleSummary>& rows);

std::string inverse_csv(const InverseReport& rep);

const char* git_describe();

// Config echo, git describe string, wall-clock seconds and one entry per
// assertion. `extra` is merged in as additional top-level fields when it
// holds a JSON object.
std::string json_summary(const ExperimentConfig& cfg, const std::string& command, double wall_seconds,
                         const std::vector<CheckResult>& assertions, const std::string& extra = "{}");

// Creates parent directories as needed.
void write_file(const std::string& path, const std::string& content);

}  // namespace fmrg
