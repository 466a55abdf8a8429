#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmrg {

// Targets in this lab never exceed 16 dimensions, so vectors and matrices
// carry a fixed upper bound and live on the stack.
inline constexpr int kMaxDim = 16;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateSchedule : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void check_dim(int d) {
  if (d < 1 || d > kMaxDim)
    throw ConfigError("state dimension " + std::to_string(d) + " outside [1, " +
                      std::to_string(kMaxDim) + "]");
}

}  // namespace fmrg
