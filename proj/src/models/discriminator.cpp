#include "biasprobe/models/discriminator.hpp"

#include <string>

#include "biasprobe/error.hpp"
#include "biasprobe/nn/conv.hpp"

namespace biasprobe::models {

Discriminator::Discriminator(int resolution, int base_channels)
    : resolution_(resolution), base_channels_(base_channels) {
  if (resolution < 16)
    throw ModelError("discriminator resolution " + std::to_string(resolution) +
                     " is too small for four stride-2 blocks (need >= 16)");
  if (base_channels <= 0) throw ModelError("discriminator base_channels must be positive");

  graph_.layers.push_back(LayerDescriptor{"input", "input", LayerKind::input, kInputChannels,
                                          kInputChannels, resolution, std::nullopt, 0, 0,
                                          false, false, false, "identity"});
  int channels = kInputChannels;
  int extent = resolution;
  for (int k = 1; k <= 4; ++k) {
    const int out = base_channels << (k - 1);
    const bool norm = k > 1;
    const std::string name = "patch" + std::to_string(k);
    extent = nn::conv_out_extent(extent, 4, 2, 1);
    blocks_.emplace_back(name, nn::ConvConfig{channels, out, 4, 2, 1, 0, false, !norm}, norm,
                         nn::Activation::leaky_relu);
    graph_.layers.push_back(LayerDescriptor{name, name, LayerKind::conv_down, channels, out,
                                            extent, std::nullopt, 4, 2, false, !norm, norm,
                                            "leaky_relu"});
    channels = out;
  }
  blocks_.emplace_back("head", nn::ConvConfig{channels, 1, 3, 1, 1, 0, false, true}, false,
                       nn::Activation::identity);
  graph_.layers.push_back(LayerDescriptor{"head", "head", LayerKind::output, channels, 1, extent,
                                          std::nullopt, 3, 1, false, true, false, "identity"});
}

int Discriminator::patch_size() const { return graph_.layers.back().spatial_size; }

Tensor Discriminator::forward(const Tensor& x, Tape* tape) const {
  const Shape s = x.shape();
  if (s.c != kInputChannels)
    throw ModelError("discriminator expects 6 input channels (condition + candidate), got " +
                     std::to_string(s.c));
  if (s.h != resolution_ || s.w != resolution_)
    throw ModelError("discriminator expects " + std::to_string(resolution_) + "x" +
                     std::to_string(resolution_) + " input, got " + s.str());
  if (tape) tape->blocks.assign(blocks_.size(), {});
  Tensor h = blocks_[0].forward(x, tape ? &tape->blocks[0] : nullptr);
  for (std::size_t i = 1; i < blocks_.size(); ++i)
    h = blocks_[i].forward(h, tape ? &tape->blocks[i] : nullptr);
  return h;
}

Tensor Discriminator::backward(const Tensor& dlogits, const Tape& tape, bool param_grads) {
  if (tape.blocks.size() != blocks_.size())
    throw ModelError("discriminator backward called with an incomplete tape");
  Tensor g = dlogits;
  for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(g, tape.blocks[i], param_grads);
  return g;
}

nn::ParameterList Discriminator::parameters() {
  nn::ParameterList out;
  for (auto& b : blocks_)
    for (auto* p : b.parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> Discriminator::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& b : blocks_)
    for (const auto* p : b.parameters()) out.push_back(p);
  return out;
}

}  // namespace biasprobe::models
