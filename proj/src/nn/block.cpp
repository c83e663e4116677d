#include "biasprobe/nn/block.hpp"

#include <cmath>

namespace biasprobe::nn {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Block::Block(const std::string& name, ConvConfig conv, bool norm, Activation act,
             float leaky_slope)
    : name_(name), conv_(name, conv), act_(act), slope_(leaky_slope) {
  if (norm) norm_.emplace(name + ".norm", conv.out_channels);
}

Tensor Block::forward(const Tensor& x, Tape* tape) const {
  Tensor y = conv_.forward(x);
  if (norm_) y = norm_->forward(y, tape ? &tape->norm : nullptr);
  float* v = y.data();
  const std::size_t n = y.size();
  switch (act_) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0f ? v[i] : 0.0f;
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0f ? v[i] : v[i] * slope_;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
      break;
  }
  if (tape) {
    tape->input = x;
    tape->output = y;
  }
  return y;
}

Tensor Block::backward(const Tensor& dy, const Tape& tape, bool param_grads) {
  Tensor g = dy;
  float* d = g.data();
  const float* out = tape.output.data();
  const std::size_t n = g.size();
  switch (act_) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) if (!(out[i] > 0.0f)) d[i] = 0.0f;
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) if (!(out[i] > 0.0f)) d[i] *= slope_;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) d[i] *= 1.0f - out[i] * out[i];
      break;
  }
  if (norm_) g = norm_->backward(g, tape.norm, param_grads);
  return conv_.backward(tape.input, g, param_grads);
}

ParameterList Block::parameters() {
  ParameterList out{&conv_.weight()};
  if (conv_.bias()) out.push_back(conv_.bias());
  if (norm_) {
    out.push_back(&norm_->gamma());
    out.push_back(&norm_->beta());
  }
  return out;
}

std::vector<const Parameter*> Block::parameters() const {
  std::vector<const Parameter*> out{&conv_.weight()};
  if (conv_.bias()) out.push_back(conv_.bias());
  if (norm_) {
    out.push_back(&norm_->gamma());
    out.push_back(&norm_->beta());
  }
  return out;
}

}  // namespace biasprobe::nn
