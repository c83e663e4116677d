#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/dataset/manifest.hpp"

namespace biasprobe::dataset {

enum class ProbeKind { in_distribution, gaussian_noise, gray_ramp };

std::string_view probe_kind_name(ProbeKind kind);
ProbeKind parse_probe_kind(std::string_view name);

inline constexpr int kGrayRampLevels[9] = {0, 32, 64, 96, 128, 160, 192, 224, 255};
inline constexpr int kNoiseProbeCount = 5;
inline constexpr double kNoiseMean = 127.5;
inline constexpr double kNoiseStddev = 42.5;

struct ProbeLabel {
  std::string id;
  std::optional<int> gray_level;
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::string> record_id;
  std::optional<Attribute> attribute;
  std::optional<Pose> pose;
};

struct ProbeSet {
  ProbeKind kind = ProbeKind::gray_ramp;
  std::string id;
  std::vector<Image> images;
  std::vector<ProbeLabel> labels;

  std::size_t size() const { return images.size(); }
};

// Structured out-of-distribution probes (gray ramp or gaussian noise).
ProbeSet make_probe_set(ProbeKind kind, int resolution, std::uint64_t seed);
// Side-pose images of the given pairs, labelled with ground-truth attribute.
ProbeSet make_in_distribution_probe_set(const FacePairManifest& manifest,
                                        const std::vector<std::string>& pair_ids);
// Frontal ground-truth images of the given pairs (deduplicated).
ProbeSet make_frontal_probe_set(const FacePairManifest& manifest,
                                const std::vector<std::string>& pair_ids);

}  // namespace biasprobe::dataset
