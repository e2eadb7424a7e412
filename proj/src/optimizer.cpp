#include "netad/optimizer.hpp"

#include <cmath>

#include "netad/errors.hpp"

namespace netad {

void Optimizer::step(std::span<ParamTensor* const> params) {
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (ParamTensor* p : params) {
      auto value = p->value.values();
      const auto grad = p->grad.values();
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const ParamTensor* p : params) {
      first_moment_.emplace_back(p->value.rows(), p->value.cols());
      second_moment_.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (first_moment_.size() != params.size()) {
    throw ContractViolation("optimizer called with a different parameter list");
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto value = params[k]->value.values();
    const auto grad = params[k]->grad.values();
    auto m = first_moment_[k].values();
    auto v = second_moment_[k].values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace netad
