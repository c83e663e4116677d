#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace biasprobe::models {

enum class LayerKind { input, conv_down, middle, conv_up, output };

std::string_view layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerDescriptor {
  std::string name;
  // Alternative label under which the layer appears in the original analysis
  // figures, where the down path is called the decoder and the up path the
  // encoder ("down3" <-> "decoder 3", "up5" <-> "encoder 5").
  std::string alias;
  LayerKind kind = LayerKind::input;
  int in_channels = 0;
  int out_channels = 0;
  int spatial_size = 0;
  std::optional<std::string> skip_source;
  int kernel = 0;
  int stride = 0;
  bool transposed = false;
  bool has_bias = false;
  bool has_norm = false;
  std::string activation;

  bool has_filter() const { return kind != LayerKind::input; }
  bool operator==(const LayerDescriptor&) const = default;
};

// Forward-ordered layer list of a realized network.
struct ArchitectureGraph {
  std::vector<LayerDescriptor> layers;

  const LayerDescriptor& layer(const std::string& name) const;
  const LayerDescriptor* find(const std::string& name) const;
  int skip_edge_count() const;
  bool operator==(const ArchitectureGraph&) const = default;
};

void to_json(nlohmann::json& j, const LayerDescriptor& d);
void from_json(const nlohmann::json& j, LayerDescriptor& d);
void to_json(nlohmann::json& j, const ArchitectureGraph& g);
void from_json(const nlohmann::json& j, ArchitectureGraph& g);

}  // namespace biasprobe::models
