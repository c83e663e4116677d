#pragma once

#include <vector>

#include "biasprobe/models/graph.hpp"
#include "biasprobe/nn/block.hpp"

namespace biasprobe::models {

// PatchGAN: four stride-2 conv blocks and a 3x3 single-channel head. Input is
// the channel concatenation of condition and candidate (6 channels); output is
// an (R/16) x (R/16) map of logits.
class Discriminator {
 public:
  static constexpr int kInputChannels = 6;

  struct Tape {
    std::vector<nn::Block::Tape> blocks;
  };

  Discriminator(int resolution, int base_channels);

  int resolution() const { return resolution_; }
  int base_channels() const { return base_channels_; }
  int patch_size() const;
  const ArchitectureGraph& graph() const { return graph_; }

  Tensor forward(const Tensor& x, Tape* tape = nullptr) const;
  Tensor backward(const Tensor& dlogits, const Tape& tape, bool param_grads = true);

  nn::ParameterList parameters();
  std::vector<const nn::Parameter*> parameters() const;

 private:
  int resolution_;
  int base_channels_;
  ArchitectureGraph graph_;
  std::vector<nn::Block> blocks_;
};

}  // namespace biasprobe::models
