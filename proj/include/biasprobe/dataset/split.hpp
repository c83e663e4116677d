#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "biasprobe/dataset/manifest.hpp"
#include "json.hpp"

namespace biasprobe::dataset {

struct SplitSpec {
  std::string name;
  int ratio_majority = 5;
  int ratio_minority = 5;
  int majority_cap = 1;
  std::uint64_t seed = 0;
  Attribute majority_attribute = Attribute::A;

  void validate() const;
};

struct SplitCounts {
  int majority = 0;
  int minority = 0;
  bool operator==(const SplitCounts&) const = default;
};

// Majority count min(cap, available); minority ceil(majority * r_min / r_maj).
// When that exceeds the minority pool the majority shrinks to
// floor(available_minority * r_maj / r_min) and the minority is recomputed.
SplitCounts split_counts(int available_majority, int available_minority, const SplitSpec& spec);

struct TrainSplit {
  SplitSpec spec;
  int majority_count = 0;
  int minority_count = 0;
  // Majority ids first, then minority ids.
  std::vector<std::string> pair_ids;

  std::vector<std::string> majority_ids() const;
  std::vector<std::string> minority_ids() const;
};

TrainSplit build_split(const FacePairManifest& manifest, const SplitSpec& spec,
                       const std::set<std::string>& test_ids);

void to_json(nlohmann::json& j, const SplitSpec& s);
void from_json(const nlohmann::json& j, SplitSpec& s);
void to_json(nlohmann::json& j, const TrainSplit& s);
void from_json(const nlohmann::json& j, TrainSplit& s);

// Writes split_<name>.json next to the manifest and returns its path.
std::filesystem::path write_split(const FacePairManifest& manifest, const TrainSplit& split);
TrainSplit read_split(const std::filesystem::path& path);

}  // namespace biasprobe::dataset
