#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "biasprobe/dataset/manifest.hpp"
#include "biasprobe/dataset/probes.hpp"
#include "biasprobe/dataset/split.hpp"
#include "biasprobe/instrumentation/activations.hpp"
#include "biasprobe/models/bundle.hpp"
#include "biasprobe/nn/adam.hpp"
#include "biasprobe/training/schedule.hpp"

namespace biasprobe::training {

struct TrainConfig {
  // Pix2Pix runs `epochs` passes over all side/front pairs. Pairwise-GAN runs
  // 2 * `epochs` passes over subject triples, so each of its generators sees
  // as many samples as the single Pix2Pix generator.
  int epochs = 20;
  int batch_size = 1;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  // Multiplies the learning rate once per epoch; 1 disables decay.
  double lr_decay_factor = 1.0;
  std::uint64_t seed = 0;
  models::ModelKind kind = models::ModelKind::pix2pix;
  std::optional<LossWeights> weights;  // defaults depend on kind
  bool instrumentation = false;
  // 0 writes only the final checkpoint.
  int checkpoint_every = 0;
  nn::InitScheme init = nn::InitScheme::normal;
  int disc_base_channels = 64;

  void validate() const;
  LossWeights effective_weights() const;
  int total_epochs() const;
};

// Full-scale schedule: 125 epochs, so Pix2Pix runs 125
// passes and Pairwise-GAN 250.
TrainConfig full_scale_preset(models::ModelKind kind);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochRecord {
  int epoch = 0;  // 0-based
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double loss_l1 = 0.0;
  double loss_identity = 0.0;
  double loss_pair = 0.0;
  double loss_g = 0.0;
  double weight_identity = 0.0;
  double weight_pair = 0.0;
  double wall_seconds = 0.0;
  std::vector<instrumentation::LayerVarianceTrace> variance;
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  void write_jsonl(const std::filesystem::path& file) const;
  static TrainingLog read_jsonl(const std::filesystem::path& file);
};

// One side/front sample for Pix2Pix or one subject triple for Pairwise-GAN.
struct TrainingSample {
  std::string left_id;   // side record (pix2pix: whichever side the pair has)
  std::string right_id;  // pairwise only
  std::string front_id;
};

// Pix2Pix: every split pair. Pairwise: one triple per distinct frontal record
// of the split; a side missing from the split is taken from the manifest.
std::vector<TrainingSample> training_samples(const dataset::FacePairManifest& manifest,
                                             const dataset::TrainSplit& split, models::ModelKind kind);

struct TrainResult {
  models::ModelBundle bundle;
  TrainingLog log;
  std::filesystem::path checkpoint_root;
  std::vector<int> checkpoint_epochs;
};

// Single Pix2Pix half-steps. The discriminator update touches only D; the
// generator update backpropagates through a frozen D and steps only G.
double discriminator_update(models::Discriminator& d, nn::Adam& opt_d, const Tensor& x, const Tensor& y,
                            const Tensor& fake);

struct GeneratorUpdate {
  double adv = 0.0;
  double l1 = 0.0;
};

GeneratorUpdate generator_update(models::Generator& g, models::Discriminator& d, nn::Adam& opt_g, const Tensor& x,
                                 const Tensor& y, const LossWeights& weights);

// Trains a freshly assembled bundle and writes checkpoints plus
// training_log.jsonl under `checkpoint_root`. When instrumentation is on and
// a probe set is given, each checkpoint epoch records a variance trace per
// generator.
TrainResult train(const TrainConfig& config, const dataset::FacePairManifest& manifest,
                  const dataset::TrainSplit& split, const models::GeneratorSpec& spec,
                  const std::filesystem::path& checkpoint_root,
                  const dataset::ProbeSet* variance_probe = nullptr);

}  // namespace biasprobe::training
