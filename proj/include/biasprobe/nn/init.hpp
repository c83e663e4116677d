#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "biasprobe/nn/parameter.hpp"

namespace biasprobe::nn {

enum class InitScheme { normal, orthogonal };

InitScheme parse_init_scheme(std::string_view name);
std::string_view init_scheme_name(InitScheme scheme);

// Weights of rank-4 conv kernels follow `scheme`; normalization scales are
// drawn from N(1, 0.02) and every bias/shift starts at zero. Parameters are
// visited in list order so a seed fully determines the result.
void initialize(const ParameterList& params, InitScheme scheme,
                std::mt19937_64& rng);

}  // namespace biasprobe::nn
