#pragma once

#include <cstddef>
#include <vector>

#include "helprank/numkernel/tape.hpp"

namespace helprank::trainer {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<numkernel::Parameter*> params, AdamConfig config = {});

  /// One update from the accumulated p->grad, at learning rate lr.
  void step(double lr);
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  std::vector<numkernel::Parameter*> params_;
  AdamConfig config_;
  std::vector<numkernel::Matrix> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace helprank::trainer
