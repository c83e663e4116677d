#include "biasprobe/models/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "biasprobe/error.hpp"
#include "json.hpp"

namespace biasprobe::models {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'B', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const fs::path& file) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ModelError("truncated parameter file " + file.string());
  return v;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ModelError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError("malformed JSON in " + file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw ModelError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void save_parameters(const fs::path& file, const std::vector<const nn::Parameter*>& params) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ModelError("cannot write " + file.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const nn::Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const Shape s = p->value.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put<std::int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(float) * p->value.size()));
  }
  if (!out) throw ModelError("failed writing " + file.string());
}

void load_parameters(const fs::path& file, const nn::ParameterList& params) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ModelError("cannot open " + file.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ModelError(file.string() + " is not a parameter file");
  if (get<std::uint32_t>(in, file) != kVersion)
    throw ModelError("unsupported parameter file version in " + file.string());
  const auto count = get<std::uint32_t>(in, file);
  if (count != params.size())
    throw ModelError(file.string() + " holds " + std::to_string(count) + " tensors, model has " +
                     std::to_string(params.size()));
  for (nn::Parameter* p : params) {
    const auto len = get<std::uint32_t>(in, file);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ModelError("truncated parameter file " + file.string());
    if (name != p->name)
      throw ModelError(file.string() + ": expected tensor '" + p->name + "', found '" + name + "'");
    Shape s;
    s.n = get<std::int32_t>(in, file);
    s.c = get<std::int32_t>(in, file);
    s.h = get<std::int32_t>(in, file);
    s.w = get<std::int32_t>(in, file);
    if (!(s == p->value.shape()))
      throw ModelError(file.string() + ": tensor '" + name + "' has shape " + s.str() +
                       ", model expects " + p->value.shape().str());
    if (!in.read(reinterpret_cast<char*>(p->value.data()),
                 static_cast<std::streamsize>(sizeof(float) * p->value.size())))
      throw ModelError("truncated parameter file " + file.string());
    p->grad.zero();
    p->adam_m.zero();
    p->adam_v.zero();
  }
}

void save_generator(const fs::path& dir, const Generator& g) {
  fs::create_directories(dir);
  save_parameters(dir / "params.bin", g.parameters());
  json j = g.graph();
  j["network"] = "generator";
  j["spec"] = g.spec();
  write_json(dir / "graph.json", j);
}

Generator load_generator(const fs::path& dir) {
  const json j = read_json(dir / "graph.json");
  if (j.value("network", "") != "generator")
    throw ModelError(dir.string() + " does not hold a generator checkpoint");
  Generator g(j.at("spec").get<GeneratorSpec>());
  if (!(g.graph() == j.get<ArchitectureGraph>()))
    throw ModelError(dir.string() + ": graph.json does not match the rebuilt generator");
  load_parameters(dir / "params.bin", g.parameters());
  return g;
}

void save_discriminator(const fs::path& dir, const Discriminator& d) {
  fs::create_directories(dir);
  save_parameters(dir / "params.bin", d.parameters());
  json j = d.graph();
  j["network"] = "discriminator";
  j["resolution"] = d.resolution();
  j["base_channels"] = d.base_channels();
  write_json(dir / "graph.json", j);
}

Discriminator load_discriminator(const fs::path& dir) {
  const json j = read_json(dir / "graph.json");
  if (j.value("network", "") != "discriminator")
    throw ModelError(dir.string() + " does not hold a discriminator checkpoint");
  Discriminator d(j.at("resolution").get<int>(), j.at("base_channels").get<int>());
  load_parameters(dir / "params.bin", d.parameters());
  return d;
}

std::string generator_role_dir(Role role) { return "G_" + std::string(role_name(role)); }
std::string discriminator_role_dir(Role role) { return "D_" + std::string(role_name(role)); }

fs::path epoch_dir(const fs::path& root, const std::string& role_dir, int epoch) {
  return root / role_dir / ("epoch_" + std::to_string(epoch));
}

void save_bundle(const fs::path& root, const ModelBundle& bundle, int epoch) {
  fs::create_directories(root);
  for (const auto& [role, g] : bundle.generators) save_generator(epoch_dir(root, generator_role_dir(role), epoch), g);
  for (const auto& [role, d] : bundle.discriminators)
    save_discriminator(epoch_dir(root, discriminator_role_dir(role), epoch), d);

  std::set<int> epochs;
  if (fs::exists(root / "bundle.json")) {
    for (int e : read_json(root / "bundle.json").value("epochs", std::vector<int>{})) epochs.insert(e);
  }
  epochs.insert(epoch);
  json roles = json::array();
  for (Role r : bundle.roles()) roles.push_back(role_name(r));
  write_json(root / "bundle.json",
             json{{"id", bundle.id},
                  {"kind", model_kind_name(bundle.kind)},
                  {"spec", bundle.spec},
                  {"init", nn::init_scheme_name(bundle.options.init)},
                  {"seed", bundle.options.seed},
                  {"discriminator_base_channels", bundle.options.discriminator_base_channels},
                  {"roles", roles},
                  {"epochs", std::vector<int>(epochs.begin(), epochs.end())}});
}

std::vector<int> saved_epochs(const fs::path& root) {
  return read_json(root / "bundle.json").value("epochs", std::vector<int>{});
}

ModelBundle load_bundle(const fs::path& root, int epoch) {
  const json j = read_json(root / "bundle.json");
  const auto epochs = j.value("epochs", std::vector<int>{});
  if (epochs.empty()) throw ModelError(root.string() + " has no saved epochs");
  if (epoch < 0) epoch = epochs.back();
  if (std::find(epochs.begin(), epochs.end(), epoch) == epochs.end())
    throw ModelError(root.string() + " has no checkpoint for epoch " + std::to_string(epoch));

  ModelBundle bundle;
  bundle.kind = parse_model_kind(j.at("kind").get<std::string>());
  bundle.id = j.at("id").get<std::string>();
  bundle.spec = j.at("spec").get<GeneratorSpec>();
  bundle.options.id = bundle.id;
  bundle.options.seed = j.value("seed", std::uint64_t{0});
  bundle.options.init = nn::parse_init_scheme(j.value("init", "normal"));
  bundle.options.discriminator_base_channels = j.value("discriminator_base_channels", 64);
  for (const auto& r : j.at("roles")) {
    const Role role = parse_role(r.get<std::string>());
    bundle.generators.emplace(role, load_generator(epoch_dir(root, generator_role_dir(role), epoch)));
    bundle.discriminators.emplace(role, load_discriminator(epoch_dir(root, discriminator_role_dir(role), epoch)));
  }
  return bundle;
}

}  // namespace biasprobe::models
