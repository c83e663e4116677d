#pragma once

#include <optional>
#include <vector>

#include "biasprobe/evaluation/face_analysis.hpp"

namespace biasprobe::evaluation {

// One analysed output together with the attribute of the subject it came from.
struct LabelledResult {
  Attribute truth = Attribute::A;
  FaceAnalysisResult result;
};

struct AttributeCounts {
  int total = 0;
  int detected = 0;
  int matched = 0;
};

struct AttributeRates {
  std::optional<double> a;
  std::optional<double> b;

  std::optional<double> get(Attribute at) const { return at == Attribute::A ? a : b; }
  void set(Attribute at, std::optional<double> v) { (at == Attribute::A ? a : b) = v; }
  bool operator==(const AttributeRates&) const = default;
};

AttributeCounts count_attribute(const std::vector<LabelledResult>& results, Attribute attribute);

// Fraction of outputs with a detected face, per ground-truth attribute;
// absent for an empty group.
AttributeRates recovery_rate(const std::vector<LabelledResult>& results);
// Fraction of detected faces classified as the ground-truth attribute;
// absent when a group has no detected face.
AttributeRates match_rate(const std::vector<LabelledResult>& results);

void to_json(nlohmann::json& j, const AttributeRates& r);
void from_json(const nlohmann::json& j, AttributeRates& r);

}  // namespace biasprobe::evaluation
