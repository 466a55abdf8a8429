#pragma once

#include "fmrg/types.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace fmrg {

struct RewardEval {
  double value;
  Vector grad;
};

class Reward {
 public:
  virtual ~Reward() = default;
  virtual RewardEval evaluate(const Vector& x) const = 0;
  double value(const Vector& x) const { return evaluate(x).value; }
  Vector grad(const Vector& x) const { return evaluate(x).grad; }
};

// r(x) = -|x - a|^2
class QuadraticReward final : public Reward {
 public:
  explicit QuadraticReward(Vector a) : a_(std::move(a)) {}
  RewardEval evaluate(const Vector& x) const override;
  const Vector& center() const { return a_; }

 private:
  Vector a_;
};

// r(x) = -|A x - y|^2
class LinearMeasurementReward final : public Reward {
 public:
  LinearMeasurementReward(Matrix a, Vector y);
  RewardEval evaluate(const Vector& x) const override;
  double residual_sq(const Vector& x) const { return -evaluate(x).value; }

 private:
  Matrix a_;
  Vector y_;
};

class CompositeReward final : public Reward {
 public:
  using Part = std::pair<double, std::shared_ptr<const Reward>>;
  explicit CompositeReward(std::vector<Part> parts);
  RewardEval evaluate(const Vector& x) const override;

 private:
  std::vector<Part> parts_;
};

Vector finite_difference_reward_grad(const Reward& r, const Vector& x, double h = 1e-5);

}  // namespace fmrg
