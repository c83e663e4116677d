#pragma once

#include <functional>
#include <string>
#include <vector>

#include "biasprobe/models/generator_spec.hpp"
#include "biasprobe/models/graph.hpp"
#include "biasprobe/nn/block.hpp"

namespace biasprobe::models {

// Receives every layer's output during a forward pass, in graph order.
using ActivationSink = std::function<void(const LayerDescriptor&, const Tensor&)>;

class Generator {
 public:
  struct Tape {
    std::vector<nn::Block::Tape> down;
    nn::Block::Tape middle;
    std::vector<nn::Block::Tape> up;
  };

  explicit Generator(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }
  const ArchitectureGraph& graph() const { return graph_; }

  // x: B x 3 x R x R in [-1, 1]. Output has the same shape, values in [-1, 1].
  Tensor forward(const Tensor& x, Tape* tape = nullptr,
                 const ActivationSink& sink = {}) const;
  // Returns dL/dx.
  Tensor backward(const Tensor& dy, const Tape& tape, bool param_grads = true);

  nn::ParameterList parameters();
  std::vector<const nn::Parameter*> parameters() const;
  std::size_t parameter_count() const;

  // Convolution block behind a graph layer (not the input layer).
  const nn::Block& block(const std::string& layer_name) const;

 private:
  GeneratorSpec spec_;
  ArchitectureGraph graph_;
  std::vector<nn::Block> down_;
  std::vector<nn::Block> middle_;
  std::vector<nn::Block> up_;
};

}  // namespace biasprobe::models
