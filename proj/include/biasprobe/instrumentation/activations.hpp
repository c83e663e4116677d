#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "biasprobe/dataset/probes.hpp"
#include "biasprobe/models/generator.hpp"
#include "biasprobe/tensor.hpp"

namespace biasprobe::instrumentation {

// Output of one graph layer over a probe set. The batch dimension indexes
// probe images in probe-set order.
struct ActivationDump {
  std::string model_id;
  std::string layer_name;
  std::string probe_id;
  Tensor tensor;
};

struct LayerVariance {
  std::string layer_name;
  double variance = 0.0;
};

struct LayerVarianceTrace {
  std::string model_id;
  std::string probe_set_id;
  std::vector<LayerVariance> entries;
};

// Runs every probe image through the generator one at a time (normalization
// sees single images, exactly as during evaluation) and returns one dump per
// graph layer in forward order.
std::vector<ActivationDump> capture(const models::Generator& generator, const dataset::ProbeSet& probes,
                                    const std::string& model_id);

// Population variance over every element of the dump.
double layer_variance(const ActivationDump& dump);
double layer_variance(const Tensor& t);

LayerVarianceTrace variance_trace(const std::vector<ActivationDump>& dumps);
LayerVarianceTrace variance_trace(const models::Generator& generator, const dataset::ProbeSet& probes,
                                  const std::string& model_id);

// <dir>/index.json {model_id, probe_set_id, layers:[{name, shape, dtype, file}]}
// plus one raw little-endian float32 file per layer.
void write_dumps(const std::filesystem::path& dir, const std::vector<ActivationDump>& dumps);
std::vector<ActivationDump> read_dumps(const std::filesystem::path& dir);

void to_json(nlohmann::json& j, const LayerVarianceTrace& t);
void from_json(const nlohmann::json& j, LayerVarianceTrace& t);

}  // namespace biasprobe::instrumentation
