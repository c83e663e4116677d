#include "biasprobe/dataset/probes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "biasprobe/error.hpp"

namespace biasprobe::dataset {

std::string_view probe_kind_name(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::in_distribution: return "in_distribution";
    case ProbeKind::gaussian_noise: return "gaussian_noise";
    case ProbeKind::gray_ramp: return "gray_ramp";
  }
  return "gray_ramp";
}

ProbeKind parse_probe_kind(std::string_view name) {
  for (ProbeKind k : {ProbeKind::in_distribution, ProbeKind::gaussian_noise, ProbeKind::gray_ramp})
    if (probe_kind_name(k) == name) return k;
  throw DatasetError("unknown probe kind '" + std::string(name) + "'");
}

ProbeSet make_probe_set(ProbeKind kind, int resolution, std::uint64_t seed) {
  if (resolution <= 0) throw DatasetError("probe resolution must be positive");
  ProbeSet set;
  set.kind = kind;
  switch (kind) {
    case ProbeKind::gray_ramp:
      set.id = "gray_ramp";
      for (int level : kGrayRampLevels) {
        set.images.emplace_back(resolution, resolution, static_cast<std::uint8_t>(level));
        ProbeLabel label;
        label.id = "gray_" + std::to_string(level);
        label.gray_level = level;
        set.labels.push_back(label);
      }
      break;
    case ProbeKind::gaussian_noise: {
      set.id = "gaussian_noise_" + std::to_string(seed);
      for (int i = 0; i < kNoiseProbeCount; ++i) {
        const std::uint64_t image_seed = seed + static_cast<std::uint64_t>(i);
        std::mt19937_64 rng(image_seed);
        std::normal_distribution<double> normal(kNoiseMean, kNoiseStddev);
        Image img(resolution, resolution);
        for (auto& v : img.rgb) v = static_cast<std::uint8_t>(std::clamp(std::lround(normal(rng)), 0L, 255L));
        set.images.push_back(std::move(img));
        ProbeLabel label;
        label.id = "noise_" + std::to_string(i);
        label.noise_seed = image_seed;
        set.labels.push_back(label);
      }
      break;
    }
    case ProbeKind::in_distribution:
      throw DatasetError("in-distribution probes are built from a manifest; use make_in_distribution_probe_set");
  }
  return set;
}

ProbeSet make_in_distribution_probe_set(const FacePairManifest& manifest,
                                        const std::vector<std::string>& pair_ids) {
  ProbeSet set;
  set.kind = ProbeKind::in_distribution;
  set.id = "in_distribution";
  for (const auto& id : pair_ids) {
    const FacePair& p = manifest.pair(id);
    const FaceRecord& side = manifest.record(p.side_id);
    set.images.push_back(read_png(side.image_path));
    ProbeLabel label;
    label.id = p.id;
    label.record_id = p.front_id;
    label.attribute = side.attribute;
    label.pose = side.pose;
    set.labels.push_back(label);
  }
  return set;
}

ProbeSet make_frontal_probe_set(const FacePairManifest& manifest, const std::vector<std::string>& pair_ids) {
  ProbeSet set;
  set.kind = ProbeKind::in_distribution;
  set.id = "frontal_ground_truth";
  std::set<std::string> seen;
  for (const auto& id : pair_ids) {
    const FacePair& p = manifest.pair(id);
    if (!seen.insert(p.front_id).second) continue;
    const FaceRecord& front = manifest.record(p.front_id);
    set.images.push_back(read_png(front.image_path));
    ProbeLabel label;
    label.id = front.id;
    label.record_id = front.id;
    label.attribute = front.attribute;
    label.pose = Pose::front;
    set.labels.push_back(label);
  }
  return set;
}

}  // namespace biasprobe::dataset
