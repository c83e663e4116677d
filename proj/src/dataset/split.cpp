#include "biasprobe/dataset/split.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "biasprobe/error.hpp"

namespace biasprobe::dataset {
namespace fs = std::filesystem;

void SplitSpec::validate() const {
  if (ratio_majority < 0 || ratio_majority > 10 || ratio_minority < 0 || ratio_minority > 10)
    throw DatasetError("split '" + name + "': ratio terms must lie in [0,10]");
  if (ratio_majority + ratio_minority != 10)
    throw DatasetError("split '" + name + "': ratio terms must sum to 10");
  if (ratio_majority == 0) throw DatasetError("split '" + name + "': ratio_majority = 0 leaves the split undefined");
  if (majority_cap <= 0) throw DatasetError("split '" + name + "': majority_cap must be positive");
}

SplitCounts split_counts(int available_majority, int available_minority, const SplitSpec& spec) {
  spec.validate();
  const long r_maj = spec.ratio_majority;
  const long r_min = spec.ratio_minority;
  long majority = std::min<long>(spec.majority_cap, available_majority);
  if (r_min == 0) return SplitCounts{static_cast<int>(majority), 0};
  auto minority_for = [&](long maj) { return (maj * r_min + r_maj - 1) / r_maj; };
  long minority = minority_for(majority);
  if (minority > available_minority) {
    majority = (static_cast<long>(available_minority) * r_maj) / r_min;
    minority = std::min<long>(minority_for(majority), available_minority);
  }
  return SplitCounts{static_cast<int>(majority), static_cast<int>(minority)};
}

std::vector<std::string> TrainSplit::majority_ids() const {
  return {pair_ids.begin(), pair_ids.begin() + majority_count};
}

std::vector<std::string> TrainSplit::minority_ids() const {
  return {pair_ids.begin() + majority_count, pair_ids.end()};
}

TrainSplit build_split(const FacePairManifest& manifest, const SplitSpec& spec,
                       const std::set<std::string>& test_ids) {
  spec.validate();
  std::vector<std::string> majority_pool;
  std::vector<std::string> minority_pool;
  for (const auto& p : manifest.pairs()) {
    if (test_ids.count(p.id)) continue;
    (manifest.pair_attribute(p.id) == spec.majority_attribute ? majority_pool : minority_pool).push_back(p.id);
  }
  if (majority_pool.empty() && minority_pool.empty())
    throw DatasetError("split '" + spec.name + "': candidate pool is empty");
  if (majority_pool.empty())
    throw DatasetError("split '" + spec.name + "': no majority-attribute pairs available");

  const SplitCounts counts =
      split_counts(static_cast<int>(majority_pool.size()), static_cast<int>(minority_pool.size()), spec);

  // Shuffle from a canonical order so manifest row order does not matter.
  std::sort(majority_pool.begin(), majority_pool.end());
  std::sort(minority_pool.begin(), minority_pool.end());
  std::mt19937_64 rng(spec.seed);
  std::shuffle(majority_pool.begin(), majority_pool.end(), rng);
  std::shuffle(minority_pool.begin(), minority_pool.end(), rng);

  TrainSplit split;
  split.spec = spec;
  split.majority_count = counts.majority;
  split.minority_count = counts.minority;
  split.pair_ids.assign(majority_pool.begin(), majority_pool.begin() + counts.majority);
  split.pair_ids.insert(split.pair_ids.end(), minority_pool.begin(), minority_pool.begin() + counts.minority);
  return split;
}

void to_json(nlohmann::json& j, const SplitSpec& s) {
  j = nlohmann::json{{"name", s.name},
                     {"ratio_majority", s.ratio_majority},
                     {"ratio_minority", s.ratio_minority},
                     {"majority_cap", s.majority_cap},
                     {"seed", s.seed},
                     {"majority_attribute", attribute_name(s.majority_attribute)}};
}

void from_json(const nlohmann::json& j, SplitSpec& s) {
  s.name = j.at("name").get<std::string>();
  s.ratio_majority = j.at("ratio_majority").get<int>();
  s.ratio_minority = j.at("ratio_minority").get<int>();
  s.majority_cap = j.at("majority_cap").get<int>();
  s.seed = j.value("seed", std::uint64_t{0});
  s.majority_attribute = parse_attribute(j.value("majority_attribute", "A"));
}

void to_json(nlohmann::json& j, const TrainSplit& s) {
  j = nlohmann::json{{"spec", s.spec},
                     {"majority_count", s.majority_count},
                     {"minority_count", s.minority_count},
                     {"pair_ids", s.pair_ids}};
}

void from_json(const nlohmann::json& j, TrainSplit& s) {
  s.spec = j.at("spec").get<SplitSpec>();
  s.majority_count = j.at("majority_count").get<int>();
  s.minority_count = j.at("minority_count").get<int>();
  s.pair_ids = j.at("pair_ids").get<std::vector<std::string>>();
  if (static_cast<int>(s.pair_ids.size()) != s.majority_count + s.minority_count)
    throw DatasetError("split '" + s.spec.name + "': counts do not match pair_ids");
}

fs::path write_split(const FacePairManifest& manifest, const TrainSplit& split) {
  const fs::path dir = manifest.source().empty() ? fs::current_path() : manifest.source().parent_path();
  const fs::path file = dir / ("split_" + split.spec.name + ".json");
  std::ofstream out(file);
  if (!out) throw DatasetError("cannot write split file " + file.string());
  out << nlohmann::json(split).dump(2) << '\n';
  return file;
}

TrainSplit read_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open split file " + path.string());
  try {
    return nlohmann::json::parse(in).get<TrainSplit>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

}  // namespace biasprobe::dataset
