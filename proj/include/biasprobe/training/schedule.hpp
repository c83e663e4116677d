#pragma once

#include "json.hpp"

namespace biasprobe::training {

// Loss weight that moves from `start` (first epoch) to `end` (last epoch).
struct DecaySchedule {
  enum class Mode { linear, constant };

  double start = 0.0;
  double end = 0.0;
  Mode mode = Mode::constant;

  static DecaySchedule linear(double start, double end) { return {start, end, Mode::linear}; }
  static DecaySchedule constant(double v) { return {v, v, Mode::constant}; }

  // `epoch` is 0-based; `total_epochs` is the number of epochs in the run.
  double value(int epoch, int total_epochs) const;
};

struct LossWeights {
  double adv = 2.0;
  double l1 = 0.5;
  DecaySchedule identity = DecaySchedule::constant(0.0);
  DecaySchedule pair = DecaySchedule::constant(0.0);

  // Adversarial : L1 = 2 : 0.5.
  static LossWeights pix2pix_default();
  // 10 : 3 : identity 10->5 : pair 10->2.
  static LossWeights pairwise_default();

  void validate() const;
};

void to_json(nlohmann::json& j, const DecaySchedule& s);
void from_json(const nlohmann::json& j, DecaySchedule& s);
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

}  // namespace biasprobe::training
