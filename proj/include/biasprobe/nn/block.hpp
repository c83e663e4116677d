#pragma once

#include <optional>
#include <string>

#include "biasprobe/nn/batchnorm.hpp"
#include "biasprobe/nn/conv.hpp"

namespace biasprobe::nn {

enum class Activation { identity, relu, leaky_relu, tanh };

std::string_view activation_name(Activation a);

// conv -> [batchnorm] -> activation. Every generator and discriminator level
// is one of these.
class Block {
 public:
  struct Tape {
    Tensor input;
    BatchNorm::Cache norm;
    Tensor output;
  };

  Block(const std::string& name, ConvConfig conv, bool norm, Activation act,
        float leaky_slope = 0.2f);

  Tensor forward(const Tensor& x, Tape* tape) const;
  Tensor backward(const Tensor& dy, const Tape& tape, bool param_grads);

  ParameterList parameters();
  std::vector<const Parameter*> parameters() const;

  const std::string& name() const { return name_; }
  const ConvLayer& conv() const { return conv_; }
  ConvLayer& conv() { return conv_; }
  bool has_norm() const { return norm_.has_value(); }
  Activation activation() const { return act_; }

 private:
  std::string name_;
  ConvLayer conv_;
  std::optional<BatchNorm> norm_;
  Activation act_;
  float slope_;
};

}  // namespace biasprobe::nn
