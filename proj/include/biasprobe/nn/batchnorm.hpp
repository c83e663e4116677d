#pragma once

#include <string>
#include <vector>

#include "biasprobe/nn/parameter.hpp"
#include "biasprobe/tensor.hpp"

namespace biasprobe::nn {

// Batch normalization that always normalizes with the statistics of the
// current batch (no running averages), so evaluation behaves exactly like
// training and a model is a pure function of its parameters.
class BatchNorm {
 public:
  struct Cache {
    Tensor xhat;
    std::vector<float> inv_std;
  };

  BatchNorm(const std::string& name, int channels, float eps = 1e-5f);

  Tensor forward(const Tensor& x, Cache* cache) const;
  Tensor backward(const Tensor& dy, const Cache& cache, bool param_grads);

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  const Parameter& gamma() const { return gamma_; }
  const Parameter& beta() const { return beta_; }

 private:
  int channels_;
  float eps_;
  Parameter gamma_;
  Parameter beta_;
};

}  // namespace biasprobe::nn
