#include "biasprobe/models/generator.hpp"

#include <string>

#include "biasprobe/error.hpp"
#include "biasprobe/nn/conv.hpp"

namespace biasprobe::models {
namespace {

std::string down_name(int k) { return "down" + std::to_string(k); }
std::string up_name(int j) { return "up" + std::to_string(j); }

}  // namespace

Generator::Generator(GeneratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int depth = spec_.depth;
  const int io = spec_.io_channels;

  // Spatial extent after each down-level; extent[0] is the input.
  std::vector<int> extent(depth + 1);
  extent[0] = spec_.input_resolution;
  for (int k = 1; k <= depth; ++k) extent[k] = nn::conv_out_extent(extent[k - 1], 4, 2, 1);

  graph_.layers.push_back(LayerDescriptor{"input", "input", LayerKind::input, io, io,
                                          extent[0], std::nullopt, 0, 0, false, false,
                                          false, "identity"});

  int channels = io;
  for (int k = 1; k <= depth; ++k) {
    const int out = spec_.channel_schedule[k - 1];
    const bool norm = k > 1;
    const bool bias = !norm;
    down_.emplace_back(down_name(k),
                       nn::ConvConfig{channels, out, 4, 2, 1, 0, false, bias}, norm,
                       nn::Activation::leaky_relu);
    graph_.layers.push_back(LayerDescriptor{down_name(k), "decoder " + std::to_string(k),
                                            LayerKind::conv_down, channels, out, extent[k],
                                            std::nullopt, 4, 2, false, bias, norm, "leaky_relu"});
    channels = out;
  }

  middle_.emplace_back("middle", nn::ConvConfig{channels, channels, 3, 1, 1, 0, false, false},
                       true, nn::Activation::relu);
  graph_.layers.push_back(LayerDescriptor{"middle", "middle", LayerKind::middle, channels,
                                          channels, extent[depth], std::nullopt, 3, 1, false,
                                          false, true, "relu"});

  for (int j = 1; j <= depth; ++j) {
    const int source = spec_.skip_source_level(j);
    const bool skip = spec_.skip_mask[j - 1];
    const int in = channels + (skip ? spec_.channel_schedule[source - 1] : 0);
    const bool last = j == depth;
    const int out = last ? io : spec_.channel_schedule[depth - j - 1];
    const int target = extent[depth - j];
    const int output_padding = target - 2 * extent[depth - j + 1];
    const nn::ConvConfig conv{in, out, 4, 2, 1, output_padding, true, last};
    up_.emplace_back(up_name(j), conv, !last, last ? nn::Activation::tanh : nn::Activation::relu);
    graph_.layers.push_back(LayerDescriptor{
        up_name(j), "encoder " + std::to_string(j), last ? LayerKind::output : LayerKind::conv_up,
        in, out, target, skip ? std::optional<std::string>(down_name(source)) : std::nullopt, 4,
        2, true, last, !last, last ? "tanh" : "relu"});
    channels = out;
  }
}

Tensor Generator::forward(const Tensor& x, Tape* tape, const ActivationSink& sink) const {
  const Shape s = x.shape();
  if (s.c != spec_.io_channels || s.h != spec_.input_resolution || s.w != spec_.input_resolution)
    throw ModelError("generator expects Bx3x" + std::to_string(spec_.input_resolution) + "x" +
                     std::to_string(spec_.input_resolution) + " input, got " + s.str());
  const int depth = spec_.depth;
  if (tape) {
    tape->down.assign(depth, {});
    tape->up.assign(depth, {});
  }
  if (sink) sink(graph_.layers[0], x);

  std::vector<Tensor> down_out(depth);
  const Tensor* current = &x;
  for (int k = 0; k < depth; ++k) {
    down_out[k] = down_[k].forward(*current, tape ? &tape->down[k] : nullptr);
    if (sink) sink(graph_.layers[1 + k], down_out[k]);
    current = &down_out[k];
  }
  Tensor h = middle_[0].forward(*current, tape ? &tape->middle : nullptr);
  if (sink) sink(graph_.layers[1 + depth], h);

  for (int j = 1; j <= depth; ++j) {
    Tensor in = spec_.skip_mask[j - 1]
                    ? concat_channels(h, down_out[spec_.skip_source_level(j) - 1])
                    : std::move(h);
    h = up_[j - 1].forward(in, tape ? &tape->up[j - 1] : nullptr);
    if (sink) sink(graph_.layers[1 + depth + j], h);
  }
  return h;
}

Tensor Generator::backward(const Tensor& dy, const Tape& tape, bool param_grads) {
  const int depth = spec_.depth;
  if (static_cast<int>(tape.down.size()) != depth || static_cast<int>(tape.up.size()) != depth)
    throw ModelError("generator backward called with an incomplete tape");

  // Gradients flowing into each down-level output through skip edges.
  std::vector<Tensor> skip_grad(depth);
  Tensor g = dy;
  for (int j = depth; j >= 1; --j) {
    Tensor gin = up_[j - 1].backward(g, tape.up[j - 1], param_grads);
    if (spec_.skip_mask[j - 1]) {
      const int source = spec_.skip_source_level(j);
      const int main_channels = tape.up[j - 1].input.shape().c - tape.down[source - 1].output.shape().c;
      Tensor main;
      split_channels(gin, main_channels, &main, &skip_grad[source - 1]);
      g = std::move(main);
    } else {
      g = std::move(gin);
    }
  }
  g = middle_[0].backward(g, tape.middle, param_grads);
  for (int k = depth; k >= 1; --k) {
    if (!skip_grad[k - 1].empty()) {
      float* d = g.data();
      const float* s = skip_grad[k - 1].data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += s[i];
    }
    g = down_[k - 1].backward(g, tape.down[k - 1], param_grads);
  }
  return g;
}

nn::ParameterList Generator::parameters() {
  nn::ParameterList out;
  for (auto* group : {&down_, &middle_, &up_})
    for (auto& b : *group)
      for (auto* p : b.parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> Generator::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto* group : {&down_, &middle_, &up_})
    for (const auto& b : *group)
      for (const auto* p : b.parameters()) out.push_back(p);
  return out;
}

std::size_t Generator::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

const nn::Block& Generator::block(const std::string& layer_name) const {
  for (const auto* group : {&down_, &middle_, &up_})
    for (const auto& b : *group)
      if (b.name() == layer_name) return b;
  throw ModelError("generator has no convolution layer named '" + layer_name + "'");
}

}  // namespace biasprobe::models
