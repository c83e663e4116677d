#include "biasprobe/instrumentation/activations.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "biasprobe/dataset/preprocess.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::instrumentation {

namespace fs = std::filesystem;

std::vector<ActivationDump> capture(const models::Generator& generator, const dataset::ProbeSet& probes,
                                    const std::string& model_id) {
  if (probes.images.empty()) throw InstrumentationError("capture: probe set '" + probes.id + "' is empty");
  const auto& layers = generator.graph().layers;
  std::set<std::string> names;
  for (const auto& l : layers) {
    if (!names.insert(l.name).second) throw InstrumentationError("capture: duplicate layer name '" + l.name + "'");
  }

  const int resolution = generator.spec().input_resolution;
  std::vector<std::vector<Tensor>> per_layer(layers.size());
  for (const auto& image : probes.images) {
    Tensor x = dataset::preprocess(image, resolution);
    std::size_t next = 0;
    generator.forward(x, nullptr, [&](const models::LayerDescriptor& d, const Tensor& t) {
      if (next >= layers.size() || layers[next].name != d.name) {
        throw InstrumentationError("capture: layer '" + d.name + "' reported out of graph order");
      }
      per_layer[next++].push_back(t);
    });
    if (next != layers.size()) throw InstrumentationError("capture: forward pass skipped layers");
  }

  std::vector<ActivationDump> dumps;
  dumps.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ActivationDump d;
    d.model_id = model_id;
    d.layer_name = layers[i].name;
    d.probe_id = probes.id;
    d.tensor = stack_batch(per_layer[i]);
    for (float v : d.tensor.values()) {
      if (!std::isfinite(v)) throw InstrumentationError("capture: non-finite activation in " + d.layer_name);
    }
    dumps.push_back(std::move(d));
  }
  return dumps;
}

double layer_variance(const Tensor& t) {
  if (t.empty()) throw InstrumentationError("layer_variance: empty tensor");
  const auto& k = simd::kernels();
  const double n = static_cast<double>(t.size());
  const double mean = k.sum(t.data(), t.size()) / n;
  return k.sum_sq_dev(t.data(), t.size(), mean) / n;
}

double layer_variance(const ActivationDump& dump) { return layer_variance(dump.tensor); }

LayerVarianceTrace variance_trace(const std::vector<ActivationDump>& dumps) {
  LayerVarianceTrace trace;
  if (!dumps.empty()) {
    trace.model_id = dumps.front().model_id;
    trace.probe_set_id = dumps.front().probe_id;
  }
  for (const auto& d : dumps) trace.entries.push_back({d.layer_name, layer_variance(d)});
  return trace;
}

LayerVarianceTrace variance_trace(const models::Generator& generator, const dataset::ProbeSet& probes,
                                  const std::string& model_id) {
  return variance_trace(capture(generator, probes, model_id));
}

namespace {

static_assert(std::endian::native == std::endian::little, "dump files are little-endian float32");

std::string dump_file_name(std::size_t index, const std::string& layer) {
  char prefix[8];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return prefix + layer + ".f32";
}

}  // namespace

void write_dumps(const fs::path& dir, const std::vector<ActivationDump>& dumps) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InstrumentationError("cannot create dump directory " + dir.string() + ": " + ec.message());
  nlohmann::json index;
  index["model_id"] = dumps.empty() ? "" : dumps.front().model_id;
  index["probe_set_id"] = dumps.empty() ? "" : dumps.front().probe_id;
  index["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < dumps.size(); ++i) {
    const auto& d = dumps[i];
    const std::string file = dump_file_name(i, d.layer_name);
    std::ofstream out(dir / file, std::ios::binary);
    out.write(reinterpret_cast<const char*>(d.tensor.data()),
              static_cast<std::streamsize>(d.tensor.size() * sizeof(float)));
    if (!out) throw InstrumentationError("failed writing " + (dir / file).string());
    const Shape& s = d.tensor.shape();
    index["layers"].push_back({{"name", d.layer_name}, {"shape", {s.n, s.c, s.h, s.w}}, {"dtype", "float32"},
                               {"file", file}});
  }
  std::ofstream(dir / "index.json") << index.dump(2) << '\n';
}

std::vector<ActivationDump> read_dumps(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw InstrumentationError("missing dump index " + (dir / "index.json").string());
  nlohmann::json index = nlohmann::json::parse(in);
  std::vector<ActivationDump> dumps;
  for (const auto& l : index.at("layers")) {
    if (l.at("dtype") != "float32") throw InstrumentationError("unsupported dump dtype in " + dir.string());
    auto dims = l.at("shape").get<std::vector<int>>();
    if (dims.size() != 4) throw InstrumentationError("dump shape must be 4-D");
    ActivationDump d;
    d.model_id = index.at("model_id");
    d.probe_id = index.at("probe_set_id");
    d.layer_name = l.at("name");
    d.tensor = Tensor(Shape{dims[0], dims[1], dims[2], dims[3]});
    std::ifstream f(dir / l.at("file").get<std::string>(), std::ios::binary);
    f.read(reinterpret_cast<char*>(d.tensor.data()), static_cast<std::streamsize>(d.tensor.size() * sizeof(float)));
    if (!f) throw InstrumentationError("truncated dump file for layer " + d.layer_name);
    dumps.push_back(std::move(d));
  }
  return dumps;
}

void to_json(nlohmann::json& j, const LayerVarianceTrace& t) {
  j = {{"model_id", t.model_id}, {"probe_set_id", t.probe_set_id}, {"entries", nlohmann::json::array()}};
  for (const auto& e : t.entries) j["entries"].push_back({{"layer", e.layer_name}, {"variance", e.variance}});
}

void from_json(const nlohmann::json& j, LayerVarianceTrace& t) {
  t.model_id = j.at("model_id");
  t.probe_set_id = j.at("probe_set_id");
  t.entries.clear();
  for (const auto& e : j.at("entries")) t.entries.push_back({e.at("layer"), e.at("variance")});
}

}  // namespace biasprobe::instrumentation
