#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "biasprobe/models/discriminator.hpp"
#include "biasprobe/models/generator.hpp"
#include "biasprobe/nn/init.hpp"

namespace biasprobe::models {

enum class ModelKind { pix2pix, pairwise };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Generator/discriminator slots. Pix2Pix uses one shared generator for both
// side poses; Pairwise-GAN has an independent pair per side.
enum class Role { shared, left, right };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct AssembleOptions {
  std::uint64_t seed = 0;
  nn::InitScheme init = nn::InitScheme::normal;
  int discriminator_base_channels = 64;
  std::string id;
};

struct ModelBundle {
  ModelKind kind = ModelKind::pix2pix;
  std::string id;
  GeneratorSpec spec;
  AssembleOptions options;
  std::map<Role, Generator> generators;
  std::map<Role, Discriminator> discriminators;

  std::vector<Role> roles() const;
  Generator& generator(Role role);
  const Generator& generator(Role role) const;
  Discriminator& discriminator(Role role);
  const Discriminator& discriminator(Role role) const;
};

ModelBundle assemble(ModelKind kind, const GeneratorSpec& spec,
                     const AssembleOptions& options);

}  // namespace biasprobe::models
