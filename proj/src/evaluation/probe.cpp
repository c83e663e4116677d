#include "biasprobe/evaluation/probe.hpp"

#include <set>

#include "biasprobe/dataset/preprocess.hpp"

namespace biasprobe::evaluation {

using models::ModelKind;
using models::Role;

ProbeTally& ProbeTally::operator+=(const ProbeTally& o) {
  output_a += o.output_a;
  output_b += o.output_b;
  mixed += o.mixed;
  no_face += o.no_face;
  failed += o.failed;
  return *this;
}

void to_json(nlohmann::json& j, const ProbeTally& t) {
  j = {{"output_A", t.output_a}, {"output_B", t.output_b}, {"mixed", t.mixed}, {"no_face", t.no_face},
       {"failed", t.failed}};
}

void from_json(const nlohmann::json& j, ProbeTally& t) {
  t.output_a = j.at("output_A");
  t.output_b = j.at("output_B");
  t.mixed = j.at("mixed");
  t.no_face = j.at("no_face");
  t.failed = j.at("failed");
}

void to_json(nlohmann::json& j, const AttributeCounts& c) {
  j = {{"total", c.total}, {"detected", c.detected}, {"matched", c.matched}};
}

void from_json(const nlohmann::json& j, AttributeCounts& c) {
  c.total = j.at("total");
  c.detected = j.at("detected");
  c.matched = j.at("matched");
}

void to_json(nlohmann::json& j, const ImageResult& r) {
  j = {{"probe", r.probe_id}, {"role", r.role}, {"repeat", r.repeat}, {"failed", r.failed}, {"result", r.result}};
  j["truth"] = r.truth ? nlohmann::json(std::string(dataset::attribute_name(*r.truth))) : nullptr;
}

void from_json(const nlohmann::json& j, ImageResult& r) {
  r.probe_id = j.at("probe");
  r.role = j.at("role");
  r.repeat = j.at("repeat");
  r.failed = j.at("failed");
  r.result = j.at("result").get<FaceAnalysisResult>();
  r.truth.reset();
  if (!j.at("truth").is_null()) r.truth = dataset::parse_attribute(j.at("truth").get<std::string>());
}

void to_json(nlohmann::json& j, const BiasReport& r) {
  j = {{"model_id", r.model_id},
       {"model_kind", r.model_kind},
       {"split_name", r.split_name},
       {"probe_set_id", r.probe_set_id},
       {"probe_kind", r.probe_kind},
       {"repeats", r.repeats},
       {"recovery_rate", r.recovery_rate},
       {"match_rate", r.match_rate},
       {"counts", r.counts},
       {"tallies", r.tallies},
       {"tallies_collapsed", r.tallies_collapsed},
       {"probe_order", r.probe_order},
       {"client_calls", r.client_calls},
       {"client_failures", r.client_failures},
       {"evaluations", r.evaluations},
       {"images", r.images}};
  j["classifier_accuracy"] = r.classifier_accuracy ? nlohmann::json(*r.classifier_accuracy) : nullptr;
}

void from_json(const nlohmann::json& j, BiasReport& r) {
  r.model_id = j.at("model_id");
  r.model_kind = j.at("model_kind");
  r.split_name = j.at("split_name");
  r.probe_set_id = j.at("probe_set_id");
  r.probe_kind = j.at("probe_kind");
  r.repeats = j.at("repeats");
  r.recovery_rate = j.at("recovery_rate").get<AttributeRates>();
  r.match_rate = j.at("match_rate").get<AttributeRates>();
  r.counts = j.at("counts").get<std::map<std::string, AttributeCounts>>();
  r.tallies = j.at("tallies").get<std::map<std::string, ProbeTally>>();
  r.tallies_collapsed = j.at("tallies_collapsed").get<std::map<std::string, ProbeTally>>();
  r.probe_order = j.at("probe_order").get<std::vector<std::string>>();
  r.client_calls = j.at("client_calls");
  r.client_failures = j.at("client_failures");
  r.evaluations = j.at("evaluations");
  r.images = j.at("images").get<std::vector<ImageResult>>();
  r.classifier_accuracy.reset();
  if (!j.at("classifier_accuracy").is_null()) r.classifier_accuracy = j.at("classifier_accuracy").get<AttributeRates>();
}

namespace {

std::vector<Role> roles_for(const models::ModelBundle& bundle, const dataset::ProbeLabel& label) {
  if (bundle.kind == ModelKind::pix2pix) return {Role::shared};
  if (label.pose == dataset::Pose::left) return {Role::left};
  if (label.pose == dataset::Pose::right) return {Role::right};
  return {Role::left, Role::right};
}

// Outcome of one (probe, repeat) evaluation over the generators it used.
ProbeTally outcome(const std::vector<const ImageResult*>& outputs) {
  ProbeTally t;
  std::set<Attribute> seen;
  for (const auto* r : outputs) {
    if (r->failed) {
      t.failed = 1;
      return t;
    }
    // A detected face the client could not classify adds no attribute.
    if (r->result.face_detected && r->result.attribute) seen.insert(*r->result.attribute);
  }
  if (seen.empty()) t.no_face = 1;
  else if (seen.size() > 1) t.mixed = 1;
  else if (*seen.begin() == Attribute::A) t.output_a = 1;
  else t.output_b = 1;
  return t;
}

}  // namespace

BiasReport recount(const BiasReport& source) {
  BiasReport r = source;
  r.tallies.clear();
  r.tallies_collapsed.clear();
  r.counts.clear();
  r.client_failures = 0;
  std::map<std::pair<std::string, int>, std::vector<const ImageResult*>> groups;
  std::vector<LabelledResult> labelled;
  for (const auto& im : r.images) {
    groups[{im.probe_id, im.repeat}].push_back(&im);
    if (im.failed) {
      ++r.client_failures;
      continue;
    }
    if (im.truth) labelled.push_back({*im.truth, im.result});
  }
  for (const auto& id : r.probe_order) {
    r.tallies[id];
    r.tallies_collapsed[id];
  }
  for (const auto& [key, outputs] : groups) {
    const ProbeTally t = outcome(outputs);
    r.tallies[key.first] += t;
    if (key.second == 0) r.tallies_collapsed[key.first] += t;
  }
  r.recovery_rate = recovery_rate(labelled);
  r.match_rate = match_rate(labelled);
  for (Attribute a : {Attribute::A, Attribute::B}) {
    const AttributeCounts c = count_attribute(labelled, a);
    if (c.total > 0) r.counts[std::string(dataset::attribute_name(a))] = c;
  }
  return r;
}

BiasReport probe_model(const models::ModelBundle& bundle, const dataset::ProbeSet& probes,
                       FaceAnalysisClient& client, const ProbeOptions& options) {
  if (options.repeats < 1) throw EvaluationError("probe repeats must be >= 1");
  if (probes.images.empty()) throw EvaluationError("probe set '" + probes.id + "' is empty");
  if (probes.labels.size() != probes.images.size()) throw EvaluationError("probe labels do not match images");

  BiasReport report;
  report.model_id = bundle.id;
  report.model_kind = std::string(models::model_kind_name(bundle.kind));
  report.split_name = options.split_name;
  report.probe_set_id = probes.id;
  report.probe_kind = std::string(dataset::probe_kind_name(probes.kind));
  report.repeats = options.repeats;
  const long calls_before = client.calls();
  const int resolution = bundle.spec.input_resolution;

  long attempted = 0;
  for (std::size_t i = 0; i < probes.images.size(); ++i) {
    const auto& label = probes.labels[i];
    report.probe_order.push_back(label.id);
    const Tensor x = dataset::preprocess(probes.images[i], resolution);
    for (Role role : roles_for(bundle, label)) {
      const models::Generator& g = bundle.generator(role);
      Tensor first;
      for (int rep = 0; rep < options.repeats; ++rep) {
        Tensor y = g.forward(x);
        if (rep == 0) first = y;
        else if (!bit_equal(first, y))
          throw EvaluationError("generator " + std::string(models::role_name(role)) +
                                " is not deterministic on probe " + label.id);
        ImageResult im;
        im.probe_id = label.id;
        im.role = std::string(models::role_name(role));
        im.repeat = rep;
        im.truth = label.attribute;
        ++attempted;
        try {
          im.result = client.analyze(dataset::postprocess(y));
        } catch (const ClientFailure&) {
          im.failed = true;
        }
        report.images.push_back(std::move(im));
      }
    }
  }
  report.evaluations = static_cast<long>(probes.images.size()) * options.repeats;
  report = recount(report);
  report.client_calls = client.calls() - calls_before;
  const double success = 1.0 - static_cast<double>(report.client_failures) / static_cast<double>(attempted);
  if (success < options.min_success) {
    throw EvaluationError("only " + std::to_string(attempted - report.client_failures) + " of " +
                          std::to_string(attempted) + " face analyses succeeded on probe set " + probes.id);
  }
  return report;
}

AttributeRates classifier_accuracy(FaceAnalysisClient& client, const dataset::ProbeSet& labelled) {
  std::map<Attribute, std::pair<int, int>> hits;
  for (std::size_t i = 0; i < labelled.images.size(); ++i) {
    const auto& truth = labelled.labels.at(i).attribute;
    if (!truth) continue;
    auto& [ok, total] = hits[*truth];
    ++total;
    try {
      const FaceAnalysisResult r = client.analyze(labelled.images[i]);
      if (r.face_detected && r.attribute == truth) ++ok;
    } catch (const ClientFailure&) {
    }
  }
  AttributeRates out;
  for (const auto& [a, h] : hits) out.set(a, static_cast<double>(h.first) / h.second);
  return out;
}

}  // namespace biasprobe::evaluation
