#include "biasprobe/evaluation/metrics.hpp"

namespace biasprobe::evaluation {

AttributeCounts count_attribute(const std::vector<LabelledResult>& results, Attribute attribute) {
  AttributeCounts c;
  for (const auto& r : results) {
    if (r.truth != attribute) continue;
    ++c.total;
    if (!r.result.face_detected) continue;
    ++c.detected;
    if (r.result.attribute == attribute) ++c.matched;
  }
  return c;
}

AttributeRates recovery_rate(const std::vector<LabelledResult>& results) {
  AttributeRates rates;
  for (Attribute a : {Attribute::A, Attribute::B}) {
    const AttributeCounts c = count_attribute(results, a);
    if (c.total > 0) rates.set(a, static_cast<double>(c.detected) / c.total);
  }
  return rates;
}

AttributeRates match_rate(const std::vector<LabelledResult>& results) {
  AttributeRates rates;
  for (Attribute a : {Attribute::A, Attribute::B}) {
    const AttributeCounts c = count_attribute(results, a);
    if (c.detected > 0) rates.set(a, static_cast<double>(c.matched) / c.detected);
  }
  return rates;
}

void to_json(nlohmann::json& j, const AttributeRates& r) {
  j = {{"A", r.a ? nlohmann::json(*r.a) : nlohmann::json(nullptr)},
       {"B", r.b ? nlohmann::json(*r.b) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, AttributeRates& r) {
  r = {};
  if (j.contains("A") && !j["A"].is_null()) r.a = j["A"].get<double>();
  if (j.contains("B") && !j["B"].is_null()) r.b = j["B"].get<double>();
}

}  // namespace biasprobe::evaluation
