#include "biasprobe/instrumentation/filter_analysis.hpp"

#include <algorithm>
#include <limits>

#include "biasprobe/error.hpp"
#include "biasprobe/instrumentation/pca.hpp"

namespace biasprobe::instrumentation {

FilterBank extract_filters(const models::Generator& generator, const std::string& layer_name) {
  const auto* desc = generator.graph().find(layer_name);
  if (!desc) throw InstrumentationError("no layer '" + layer_name + "' in generator graph");
  if (!desc->has_filter()) throw InstrumentationError("layer '" + layer_name + "' has no convolution kernel");
  const nn::ConvLayer& conv = generator.block(layer_name).conv();
  const Tensor& w = conv.weight().value;
  const Shape& s = w.shape();

  FilterBank bank;
  bank.layer_name = layer_name;
  bank.height = s.h;
  bank.width = s.w;
  // Regular conv weights are [out, in, k, k]; transposed conv weights [in, out, k, k].
  const bool transposed = desc->transposed;
  bank.in_channels = transposed ? s.n : s.c;
  bank.out_channels = transposed ? s.c : s.n;
  bank.values.resize(s.numel());
  for (int a = 0; a < s.n; ++a)
    for (int b = 0; b < s.c; ++b)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const int in = transposed ? a : b;
          const int out = transposed ? b : a;
          bank.values[((static_cast<std::size_t>(y) * s.w + x) * bank.in_channels + in) * bank.out_channels + out] =
              w.at(a, b, y, x);
        }
  return bank;
}

int FilterScatter::outlier_count() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.is_outlier; }));
}

int FilterScatter::outlier_count(int model_index) const {
  return static_cast<int>(std::count_if(points.begin(), points.end(), [&](const auto& p) {
    return p.is_outlier && p.model_index == model_index;
  }));
}

FilterScatter filter_analysis(const std::vector<FilterBank>& banks, int reference_index,
                              const FilterAnalysisOptions& options) {
  if (static_cast<int>(banks.size()) != kFilterAuditModels) {
    throw InstrumentationError("filter analysis needs exactly " + std::to_string(kFilterAuditModels) + " models, got " +
                               std::to_string(banks.size()));
  }
  if (reference_index < 0 || reference_index >= kFilterAuditModels) {
    throw InstrumentationError("reference model index out of range");
  }
  const FilterBank& first = banks.front();
  for (const auto& b : banks) {
    if (b.layer_name != first.layer_name || b.height != first.height || b.width != first.width ||
        b.in_channels != first.in_channels || b.out_channels != first.out_channels) {
      throw InstrumentationError("filter shapes differ across models at layer '" + first.layer_name + "'");
    }
  }

  const int hw = first.height * first.width;
  const int out = first.out_channels;
  // One row per filter (model-major), one column per kernel position.
  Matrix points(static_cast<std::size_t>(kFilterAuditModels) * out, hw);
  for (int m = 0; m < kFilterAuditModels; ++m) {
    const FilterBank& b = banks[m];
    for (int y = 0; y < b.height; ++y)
      for (int x = 0; x < b.width; ++x)
        for (int o = 0; o < out; ++o) {
          double s = 0.0;
          for (int i = 0; i < b.in_channels; ++i) s += b.at(y, x, i, o);
          points(static_cast<std::size_t>(m) * out + o, y * b.width + x) = s / b.in_channels;
        }
  }
  PcaResult pca = pca_top_k(points, 1);

  FilterScatter scatter;
  scatter.layer_name = first.layer_name;
  scatter.explained_ratio = pca.explained_ratio.front();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int o = 0; o < out; ++o) {
    const double v = pca.projections(static_cast<std::size_t>(reference_index) * out + o, 0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double margin = options.margin * (hi - lo);
  scatter.reference_low = lo - margin;
  scatter.reference_high = hi + margin;
  for (int m = 0; m < kFilterAuditModels; ++m)
    for (int o = 0; o < out; ++o) {
      const double v = pca.projections(static_cast<std::size_t>(m) * out + o, 0);
      scatter.points.push_back({m, o, v, v < scatter.reference_low || v > scatter.reference_high});
    }
  return scatter;
}

FilterScatter filter_analysis(const std::vector<const models::Generator*>& models, const std::string& layer_name,
                              int reference_index, const FilterAnalysisOptions& options) {
  if (static_cast<int>(models.size()) != kFilterAuditModels) {
    throw InstrumentationError("filter analysis needs exactly " + std::to_string(kFilterAuditModels) + " models, got " +
                               std::to_string(models.size()));
  }
  const auto* ref_layer = models.front()->graph().find(layer_name);
  for (const auto* m : models) {
    const auto* l = m->graph().find(layer_name);
    if (!l || !ref_layer || !(*l == *ref_layer) || !(m->graph() == models.front()->graph())) {
      throw InstrumentationError("model graphs do not match at layer '" + layer_name + "'");
    }
  }
  std::vector<FilterBank> banks;
  for (const auto* m : models) banks.push_back(extract_filters(*m, layer_name));
  return filter_analysis(banks, reference_index, options);
}

std::vector<std::string> filter_layers(const models::ArchitectureGraph& graph) {
  std::vector<std::string> names;
  for (const auto& l : graph.layers)
    if (l.has_filter()) names.push_back(l.name);
  return names;
}

void to_json(nlohmann::json& j, const FilterScatter& s) {
  j = {{"layer", s.layer_name},
       {"reference_interval", {s.reference_low, s.reference_high}},
       {"explained_ratio", s.explained_ratio},
       {"points", nlohmann::json::array()}};
  for (const auto& p : s.points) {
    j["points"].push_back(
        {{"model", p.model_index}, {"filter", p.filter_index}, {"value", p.pca_value}, {"outlier", p.is_outlier}});
  }
}

void from_json(const nlohmann::json& j, FilterScatter& s) {
  s.layer_name = j.at("layer");
  s.reference_low = j.at("reference_interval").at(0);
  s.reference_high = j.at("reference_interval").at(1);
  s.explained_ratio = j.at("explained_ratio");
  s.points.clear();
  for (const auto& p : j.at("points")) s.points.push_back({p.at("model"), p.at("filter"), p.at("value"), p.at("outlier")});
}

}  // namespace biasprobe::instrumentation
