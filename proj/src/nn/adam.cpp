#include "biasprobe/nn/adam.hpp"

#include <cmath>

#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::nn {

Adam::Adam(ParameterList params, AdamConfig config)
    : params_(std::move(params)), config_(config) {}

void Adam::step() {
  ++t_;
  const simd::AdamArgs args{
      config_.learning_rate,
      config_.beta1,
      config_.beta2,
      config_.eps,
      static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta1), static_cast<double>(t_))),
      static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta2), static_cast<double>(t_))),
  };
  const auto& k = simd::kernels();
  for (Parameter* p : params_)
    k.adam_step(p->value.size(), p->value.data(), p->grad.data(),
                p->adam_m.data(), p->adam_v.data(), args);
}

}  // namespace biasprobe::nn
