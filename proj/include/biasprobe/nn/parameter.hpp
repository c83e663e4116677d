#pragma once

#include <string>
#include <vector>

#include "biasprobe/tensor.hpp"

namespace biasprobe::nn {

// A trainable tensor together with its gradient and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Shape shape)
      : name(std::move(name)),
        value(shape),
        grad(shape),
        adam_m(shape),
        adam_v(shape) {}

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->grad.zero();
}

inline std::size_t count_values(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

}  // namespace biasprobe::nn
