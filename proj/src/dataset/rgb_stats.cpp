#include "biasprobe/dataset/rgb_stats.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "biasprobe/error.hpp"

namespace biasprobe::dataset {
namespace {

struct Box {
  int x0, y0, x1, y1;
};

Box region_box(const Image& image, StatsRegion region) {
  if (region == StatsRegion::whole) return {0, 0, image.width, image.height};
  const int x0 = image.width / 4;
  const int y0 = image.height / 4;
  return {x0, y0, x0 + std::max(1, image.width / 2), y0 + std::max(1, image.height / 2)};
}

struct Accumulator {
  std::uint64_t sum = 0;
  std::uint64_t count = 0;
};

void accumulate(const Image& image, StatsRegion region, Accumulator& acc) {
  const Box b = region_box(image, region);
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x)
      for (int c = 0; c < 3; ++c) acc.sum += image.at(x, y, c);
  acc.count += static_cast<std::uint64_t>(b.x1 - b.x0) * (b.y1 - b.y0) * 3;
}

}  // namespace

double image_mean(const Image& image, StatsRegion region) {
  if (image.empty()) throw DatasetError("image_mean of an empty image");
  Accumulator acc;
  accumulate(image, region, acc);
  return static_cast<double>(acc.sum) / static_cast<double>(acc.count);
}

std::map<Attribute, std::optional<double>> image_rgb_stats(const FacePairManifest& manifest,
                                                           const TrainSplit& split, StatsRegion region) {
  std::map<Attribute, Accumulator> groups;
  std::set<std::string> seen;
  for (const auto& pair_id : split.pair_ids) {
    const FacePair& p = manifest.pair(pair_id);
    for (const auto& record_id : {p.side_id, p.front_id}) {
      if (!seen.insert(record_id).second) continue;
      const FaceRecord& r = manifest.record(record_id);
      accumulate(read_png(r.image_path), region, groups[r.attribute]);
    }
  }
  std::map<Attribute, std::optional<double>> out{{Attribute::A, std::nullopt}, {Attribute::B, std::nullopt}};
  for (const auto& [attr, acc] : groups)
    if (acc.count > 0) out[attr] = static_cast<double>(acc.sum) / static_cast<double>(acc.count);
  return out;
}

}  // namespace biasprobe::dataset
