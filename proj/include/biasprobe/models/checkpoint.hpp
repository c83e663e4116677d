#pragma once

#include <filesystem>
#include <vector>

#include "biasprobe/models/bundle.hpp"

namespace biasprobe::models {

// On-disk layout:
//   <root>/bundle.json
//   <root>/<G_role|D_role>/epoch_<n>/params.bin
//   <root>/<G_role|D_role>/epoch_<n>/graph.json
// params.bin: "BPRM", u32 version, u32 count, then per tensor
// u32 name length, name bytes, 4 x i32 shape, float32 values (little endian).

void save_parameters(const std::filesystem::path& file,
                     const std::vector<const nn::Parameter*>& params);
void load_parameters(const std::filesystem::path& file, const nn::ParameterList& params);

void save_generator(const std::filesystem::path& dir, const Generator& g);
Generator load_generator(const std::filesystem::path& dir);
void save_discriminator(const std::filesystem::path& dir, const Discriminator& d);
Discriminator load_discriminator(const std::filesystem::path& dir);

std::string generator_role_dir(Role role);
std::string discriminator_role_dir(Role role);
std::filesystem::path epoch_dir(const std::filesystem::path& root,
                                const std::string& role_dir, int epoch);

// Writes every network of the bundle for `epoch` and updates bundle.json.
void save_bundle(const std::filesystem::path& root, const ModelBundle& bundle, int epoch);
ModelBundle load_bundle(const std::filesystem::path& root, int epoch = -1);
// Epochs recorded in bundle.json, ascending.
std::vector<int> saved_epochs(const std::filesystem::path& root);

}  // namespace biasprobe::models
