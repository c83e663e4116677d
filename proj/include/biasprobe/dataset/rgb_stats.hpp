#pragma once

#include <map>
#include <optional>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/dataset/manifest.hpp"
#include "biasprobe/dataset/split.hpp"

namespace biasprobe::dataset {

enum class StatsRegion { whole, face_box };

// Mean over all pixels and channels of the region. face_box is the central
// 50% x 50% crop.
double image_mean(const Image& image, StatsRegion region);

// Per-attribute mean over every distinct image (side and front) referenced by
// the split. Attributes without images map to nullopt.
std::map<Attribute, std::optional<double>> image_rgb_stats(const FacePairManifest& manifest,
                                                           const TrainSplit& split,
                                                           StatsRegion region);

}  // namespace biasprobe::dataset
