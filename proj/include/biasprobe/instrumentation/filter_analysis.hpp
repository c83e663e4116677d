#pragma once

#include <string>
#include <vector>

#include "biasprobe/models/generator.hpp"
#include "json.hpp"

namespace biasprobe::instrumentation {

inline constexpr int kFilterAuditModels = 6;

// Convolution kernel of one layer in [height][width][in][out] order; `in`
// and `out` are the layer's input and output channels for both regular and
// transposed convolutions.
struct FilterBank {
  std::string layer_name;
  int height = 0;
  int width = 0;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> values;

  double at(int h, int w, int i, int o) const {
    return values[((static_cast<std::size_t>(h) * width + w) * in_channels + i) * out_channels + o];
  }
};

FilterBank extract_filters(const models::Generator& generator, const std::string& layer_name);

struct FilterPoint {
  int model_index = 0;
  int filter_index = 0;
  double pca_value = 0.0;
  bool is_outlier = false;
};

struct FilterScatter {
  std::string layer_name;
  std::vector<FilterPoint> points;
  double reference_low = 0.0;
  double reference_high = 0.0;
  double explained_ratio = 0.0;

  int outlier_count() const;
  int outlier_count(int model_index) const;
};

struct FilterAnalysisOptions {
  // Each side of the reference [min, max] interval is widened by this
  // fraction of its width.
  double margin = 0.05;
};

// Averages each model's kernel over input channels, stacks every filter of
// all six models as a point in h*w space, takes the top principal component
// and flags points outside the reference model's (widened) range.
FilterScatter filter_analysis(const std::vector<FilterBank>& banks, int reference_index,
                              const FilterAnalysisOptions& options = {});
FilterScatter filter_analysis(const std::vector<const models::Generator*>& models, const std::string& layer_name,
                              int reference_index, const FilterAnalysisOptions& options = {});

// Every convolution layer of the generator graph, in forward order.
std::vector<std::string> filter_layers(const models::ArchitectureGraph& graph);

void to_json(nlohmann::json& j, const FilterScatter& s);
void from_json(const nlohmann::json& j, FilterScatter& s);

}  // namespace biasprobe::instrumentation
