#pragma once

#include "biasprobe/nn/parameter.hpp"

namespace biasprobe::nn {

struct AdamConfig {
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam over a fixed parameter list. Moments live in the parameters; the
// optimizer only owns the step counter.
class Adam {
 public:
  Adam(ParameterList params, AdamConfig config);

  void step();
  void zero_grad() { zero_grads(params_); }
  void set_learning_rate(float lr) { config_.learning_rate = lr; }
  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  ParameterList params_;
  AdamConfig config_;
  long t_ = 0;
};

}  // namespace biasprobe::nn
