#include "biasprobe/training/schedule.hpp"

#include <algorithm>

#include "biasprobe/error.hpp"

namespace biasprobe::training {

double DecaySchedule::value(int epoch, int total_epochs) const {
  if (mode == Mode::constant || total_epochs <= 1) return start;
  const int last = total_epochs - 1;
  const int e = std::clamp(epoch, 0, last);
  if (e == last) return end;
  return start + (end - start) * static_cast<double>(e) / static_cast<double>(last);
}

LossWeights LossWeights::pix2pix_default() {
  return LossWeights{2.0, 0.5, DecaySchedule::constant(0.0), DecaySchedule::constant(0.0)};
}

LossWeights LossWeights::pairwise_default() {
  return LossWeights{10.0, 3.0, DecaySchedule::linear(10.0, 5.0), DecaySchedule::linear(10.0, 2.0)};
}

void LossWeights::validate() const {
  if (!(adv > 0.0)) throw ConfigError("adversarial loss weight must be > 0");
  if (!(l1 >= 0.0)) throw ConfigError("L1 loss weight must be >= 0");
  for (const auto* s : {&identity, &pair})
    if (s->start < 0.0 || s->end < 0.0) throw ConfigError("decay schedule endpoints must be >= 0");
}

void to_json(nlohmann::json& j, const DecaySchedule& s) {
  j = nlohmann::json{{"start", s.start},
                     {"end", s.end},
                     {"mode", s.mode == DecaySchedule::Mode::linear ? "linear" : "constant"}};
}

void from_json(const nlohmann::json& j, DecaySchedule& s) {
  if (j.is_number()) {
    s = DecaySchedule::constant(j.get<double>());
    return;
  }
  const std::string mode = j.value("mode", "linear");
  if (mode != "linear" && mode != "constant") throw ConfigError("unknown schedule mode '" + mode + "'");
  s.start = j.at("start").get<double>();
  s.end = j.value("end", s.start);
  s.mode = mode == "linear" ? DecaySchedule::Mode::linear : DecaySchedule::Mode::constant;
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"adv", w.adv}, {"l1", w.l1}, {"identity", w.identity}, {"pair", w.pair}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  w.adv = j.at("adv").get<double>();
  w.l1 = j.at("l1").get<double>();
  w.identity = j.contains("identity") ? j.at("identity").get<DecaySchedule>() : DecaySchedule::constant(0.0);
  w.pair = j.contains("pair") ? j.at("pair").get<DecaySchedule>() : DecaySchedule::constant(0.0);
}

}  // namespace biasprobe::training
