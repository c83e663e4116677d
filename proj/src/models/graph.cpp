#include "biasprobe/models/graph.hpp"

#include <string>

#include "biasprobe/error.hpp"

namespace biasprobe::models {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return "input";
    case LayerKind::conv_down: return "conv_down";
    case LayerKind::middle: return "middle";
    case LayerKind::conv_up: return "conv_up";
    case LayerKind::output: return "output";
  }
  return "input";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (LayerKind k : {LayerKind::input, LayerKind::conv_down, LayerKind::middle,
                      LayerKind::conv_up, LayerKind::output})
    if (layer_kind_name(k) == name) return k;
  throw ModelError("unknown layer kind '" + std::string(name) + "'");
}

const LayerDescriptor* ArchitectureGraph::find(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

const LayerDescriptor& ArchitectureGraph::layer(const std::string& name) const {
  if (const auto* l = find(name)) return *l;
  throw ModelError("graph has no layer named '" + name + "'");
}

int ArchitectureGraph::skip_edge_count() const {
  int n = 0;
  for (const auto& l : layers) n += l.skip_source.has_value() ? 1 : 0;
  return n;
}

void to_json(nlohmann::json& j, const LayerDescriptor& d) {
  j = nlohmann::json{{"name", d.name},
                     {"alias", d.alias},
                     {"kind", layer_kind_name(d.kind)},
                     {"in_channels", d.in_channels},
                     {"out_channels", d.out_channels},
                     {"spatial_size", d.spatial_size},
                     {"skip_source", d.skip_source ? nlohmann::json(*d.skip_source) : nlohmann::json()},
                     {"kernel", d.kernel},
                     {"stride", d.stride},
                     {"transposed", d.transposed},
                     {"has_bias", d.has_bias},
                     {"has_norm", d.has_norm},
                     {"activation", d.activation}};
}

void from_json(const nlohmann::json& j, LayerDescriptor& d) {
  d.name = j.at("name").get<std::string>();
  d.alias = j.value("alias", "");
  d.kind = parse_layer_kind(j.at("kind").get<std::string>());
  d.in_channels = j.at("in_channels").get<int>();
  d.out_channels = j.at("out_channels").get<int>();
  d.spatial_size = j.at("spatial_size").get<int>();
  if (j.contains("skip_source") && !j.at("skip_source").is_null())
    d.skip_source = j.at("skip_source").get<std::string>();
  else
    d.skip_source.reset();
  d.kernel = j.value("kernel", 0);
  d.stride = j.value("stride", 0);
  d.transposed = j.value("transposed", false);
  d.has_bias = j.value("has_bias", false);
  d.has_norm = j.value("has_norm", false);
  d.activation = j.value("activation", "");
}

void to_json(nlohmann::json& j, const ArchitectureGraph& g) { j = nlohmann::json{{"layers", g.layers}}; }

void from_json(const nlohmann::json& j, ArchitectureGraph& g) {
  g.layers = j.at("layers").get<std::vector<LayerDescriptor>>();
}

}  // namespace biasprobe::models
