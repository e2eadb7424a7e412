#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netad/matrix.hpp"

namespace netad {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Applies one update from the accumulated gradients. The parameter list must
// be passed in the same order on every call; moment buffers are matched by
// position.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  void step(std::span<ParamTensor* const> params);
  std::size_t steps_taken() const noexcept { return steps_; }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
};

}  // namespace netad
