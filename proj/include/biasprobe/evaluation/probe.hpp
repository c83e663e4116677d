#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biasprobe/dataset/probes.hpp"
#include "biasprobe/evaluation/metrics.hpp"
#include "biasprobe/models/bundle.hpp"

namespace biasprobe::evaluation {

// Per-probe outcome counts. `mixed` only occurs for pairwise bundles, when
// the two generators' outputs are classified differently.
struct ProbeTally {
  int output_a = 0;
  int output_b = 0;
  int mixed = 0;
  int no_face = 0;
  int failed = 0;

  int total() const { return output_a + output_b + mixed + no_face + failed; }
  ProbeTally& operator+=(const ProbeTally& o);
  bool operator==(const ProbeTally&) const = default;
};

// One classified generator output.
struct ImageResult {
  std::string probe_id;
  std::string role;  // generator role that produced the output
  int repeat = 0;
  std::optional<Attribute> truth;
  bool failed = false;
  FaceAnalysisResult result;
};

struct BiasReport {
  std::string model_id;
  std::string model_kind;
  std::string split_name;
  std::string probe_set_id;
  std::string probe_kind;
  int repeats = 1;
  AttributeRates recovery_rate;
  AttributeRates match_rate;
  std::map<std::string, AttributeCounts> counts;  // "A"/"B", repeat level
  // Probe id -> tally over every (probe, repeat) evaluation, and with the
  // repeats collapsed to one evaluation per probe.
  std::map<std::string, ProbeTally> tallies;
  std::map<std::string, ProbeTally> tallies_collapsed;
  std::vector<std::string> probe_order;
  long client_calls = 0;
  long client_failures = 0;
  long evaluations = 0;
  // Accuracy of the classifier on ground-truth frontal images, reported next
  // to match rates because classifier errors confound them.
  std::optional<AttributeRates> classifier_accuracy;
  std::vector<ImageResult> images;
};

void to_json(nlohmann::json& j, const ProbeTally& t);
void from_json(const nlohmann::json& j, ProbeTally& t);
void to_json(nlohmann::json& j, const AttributeCounts& c);
void from_json(const nlohmann::json& j, AttributeCounts& c);
void to_json(nlohmann::json& j, const ImageResult& r);
void from_json(const nlohmann::json& j, ImageResult& r);
void to_json(nlohmann::json& j, const BiasReport& r);
void from_json(const nlohmann::json& j, BiasReport& r);

struct ProbeOptions {
  int repeats = 10;
  std::string split_name;
  // Fraction of client calls that must succeed for a report to be produced.
  double min_success = 0.5;
};

// Runs each probe `repeats` times through the bundle and classifies every
// output. Pix2Pix routes everything through its single generator. Pairwise
// routes left-pose probes to G_left, right-pose probes to G_right and
// pose-less probes to both.
BiasReport probe_model(const models::ModelBundle& bundle, const dataset::ProbeSet& probes,
                       FaceAnalysisClient& client, const ProbeOptions& options = {});

// Per-attribute accuracy of the client on labelled images (detected and
// correctly classified over all).
AttributeRates classifier_accuracy(FaceAnalysisClient& client, const dataset::ProbeSet& labelled);

// Recomputes rates and tallies from `report.images`.
BiasReport recount(const BiasReport& report);

}  // namespace biasprobe::evaluation
