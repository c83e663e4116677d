#include "biasprobe/models/bundle.hpp"

#include <random>
#include <string>

#include "biasprobe/error.hpp"

namespace biasprobe::models {

std::string_view model_kind_name(ModelKind kind) {
  return kind == ModelKind::pairwise ? "pairwise" : "pix2pix";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "pix2pix") return ModelKind::pix2pix;
  if (name == "pairwise") return ModelKind::pairwise;
  throw ModelError("unknown model kind '" + std::string(name) + "'");
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::shared: return "shared";
    case Role::left: return "left";
    case Role::right: return "right";
  }
  return "shared";
}

Role parse_role(std::string_view name) {
  if (name == "shared") return Role::shared;
  if (name == "left") return Role::left;
  if (name == "right") return Role::right;
  throw ModelError("unknown model role '" + std::string(name) + "'");
}

std::vector<Role> ModelBundle::roles() const {
  std::vector<Role> out;
  for (const auto& [role, g] : generators) out.push_back(role);
  return out;
}

Generator& ModelBundle::generator(Role role) {
  auto it = generators.find(role);
  if (it == generators.end()) throw ModelError("bundle " + id + " has no " + std::string(role_name(role)) + " generator");
  return it->second;
}

const Generator& ModelBundle::generator(Role role) const {
  auto it = generators.find(role);
  if (it == generators.end()) throw ModelError("bundle " + id + " has no " + std::string(role_name(role)) + " generator");
  return it->second;
}

Discriminator& ModelBundle::discriminator(Role role) {
  auto it = discriminators.find(role);
  if (it == discriminators.end()) throw ModelError("bundle " + id + " has no " + std::string(role_name(role)) + " discriminator");
  return it->second;
}

const Discriminator& ModelBundle::discriminator(Role role) const {
  auto it = discriminators.find(role);
  if (it == discriminators.end()) throw ModelError("bundle " + id + " has no " + std::string(role_name(role)) + " discriminator");
  return it->second;
}

ModelBundle assemble(ModelKind kind, const GeneratorSpec& spec, const AssembleOptions& options) {
  spec.validate();
  ModelBundle bundle;
  bundle.kind = kind;
  bundle.spec = spec;
  bundle.options = options;
  bundle.id = options.id.empty() ? std::string(model_kind_name(kind)) : options.id;

  const std::vector<Role> roles = kind == ModelKind::pix2pix ? std::vector<Role>{Role::shared}
                                                             : std::vector<Role>{Role::left, Role::right};
  // One stream for the whole bundle: networks are initialized in a fixed
  // order, so the two pairwise generators receive independent draws.
  std::mt19937_64 rng(options.seed);
  for (Role role : roles) {
    auto [git, _g] = bundle.generators.emplace(role, Generator(spec));
    nn::initialize(git->second.parameters(), options.init, rng);
  }
  for (Role role : roles) {
    auto [dit, _d] = bundle.discriminators.emplace(
        role, Discriminator(spec.input_resolution, options.discriminator_base_channels));
    nn::initialize(dit->second.parameters(), options.init, rng);
  }
  return bundle;
}

}  // namespace biasprobe::models
