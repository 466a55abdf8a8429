#include "fmrg/rewards.hpp"

namespace fmrg {

RewardEval QuadraticReward::evaluate(const Vector& x) const {
  const Vector diff = x - a_;
  return {-diff.squaredNorm(), -2.0 * diff};
}

LinearMeasurementReward::LinearMeasurementReward(Matrix a, Vector y)
    : a_(std::move(a)), y_(std::move(y)) {
  if (a_.rows() != y_.size()) throw ConfigError("measurement: A rows must match y length");
  check_dim(static_cast<int>(a_.cols()));
  check_dim(static_cast<int>(a_.rows()));
}

RewardEval LinearMeasurementReward::evaluate(const Vector& x) const {
  if (x.size() != a_.cols()) throw ConfigError("measurement: state dimension mismatch");
  const Vector res = a_ * x - y_;
  Vector g = -2.0 * (a_.transpose() * res);
  return {-res.squaredNorm(), std::move(g)};
}

CompositeReward::CompositeReward(std::vector<Part> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw ConfigError("composite reward needs at least one part");
  for (const auto& p : parts_)
    if (!p.second) throw ConfigError("composite reward part is null");
}

RewardEval CompositeReward::evaluate(const Vector& x) const {
  RewardEval out{0.0, Vector::Zero(x.size())};
  for (const auto& [w, r] : parts_) {
    const RewardEval e = r->evaluate(x);
    out.value += w * e.value;
    out.grad += w * e.grad;
  }
  return out;
}

Vector finite_difference_reward_grad(const Reward& r, const Vector& x, double h) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (r.value(xp) - r.value(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace fmrg
