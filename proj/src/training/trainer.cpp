#include "biasprobe/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "biasprobe/dataset/preprocess.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/models/checkpoint.hpp"
#include "biasprobe/nn/adam.hpp"
#include "biasprobe/training/losses.hpp"

namespace biasprobe::training {

namespace fs = std::filesystem;
using models::ModelKind;
using models::Role;

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("training.epochs must be positive");
  if (batch_size <= 0) throw ConfigError("training.batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("training.learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("training.adam_beta1 must be in [0, 1)");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("training.lr_decay_factor must be positive");
  if (checkpoint_every < 0) throw ConfigError("training.checkpoint_every must be >= 0");
  if (disc_base_channels <= 0) throw ConfigError("training.disc_base_channels must be positive");
  effective_weights().validate();
}

LossWeights TrainConfig::effective_weights() const {
  if (weights) return *weights;
  return kind == ModelKind::pairwise ? LossWeights::pairwise_default() : LossWeights::pix2pix_default();
}

int TrainConfig::total_epochs() const { return kind == ModelKind::pairwise ? 2 * epochs : epochs; }

TrainConfig full_scale_preset(ModelKind kind) {
  TrainConfig c;
  c.kind = kind;
  c.epochs = 125;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"adam_beta1", c.adam_beta1},
       {"lr_decay_factor", c.lr_decay_factor},
       {"seed", c.seed},
       {"kind", models::model_kind_name(c.kind)},
       {"weights", c.effective_weights()},
       {"instrumentation", c.instrumentation},
       {"checkpoint_every", c.checkpoint_every},
       {"init", nn::init_scheme_name(c.init)},
       {"disc_base_channels", c.disc_base_channels}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.lr_decay_factor = j.value("lr_decay_factor", d.lr_decay_factor);
  c.seed = j.value("seed", d.seed);
  c.kind = models::parse_model_kind(j.value("kind", std::string("pix2pix")));
  if (j.contains("weights")) c.weights = j.at("weights").get<LossWeights>();
  else c.weights.reset();
  c.instrumentation = j.value("instrumentation", d.instrumentation);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.init = nn::parse_init_scheme(j.value("init", std::string("normal")));
  c.disc_base_channels = j.value("disc_base_channels", d.disc_base_channels);
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch},
       {"loss_D", r.loss_d},
       {"loss_G_adv", r.loss_g_adv},
       {"loss_L1", r.loss_l1},
       {"loss_identity", r.loss_identity},
       {"loss_pair", r.loss_pair},
       {"loss_G", r.loss_g},
       {"weight_identity", r.weight_identity},
       {"weight_pair", r.weight_pair},
       {"wall_seconds", r.wall_seconds}};
  if (!r.variance.empty()) j["variance"] = r.variance;
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch");
  r.loss_d = j.at("loss_D");
  r.loss_g_adv = j.at("loss_G_adv");
  r.loss_l1 = j.at("loss_L1");
  r.loss_identity = j.at("loss_identity");
  r.loss_pair = j.at("loss_pair");
  r.loss_g = j.value("loss_G", 0.0);
  r.weight_identity = j.value("weight_identity", 0.0);
  r.weight_pair = j.value("weight_pair", 0.0);
  r.wall_seconds = j.at("wall_seconds");
  r.variance.clear();
  if (j.contains("variance")) r.variance = j.at("variance").get<std::vector<instrumentation::LayerVarianceTrace>>();
}

void TrainingLog::write_jsonl(const fs::path& file) const {
  std::ofstream out(file);
  if (!out) throw TrainingError("cannot write training log " + file.string(), -1, -1);
  for (const auto& r : epochs) out << nlohmann::json(r).dump() << '\n';
}

TrainingLog TrainingLog::read_jsonl(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw TrainingError("cannot read training log " + file.string(), -1, -1);
  TrainingLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) log.epochs.push_back(nlohmann::json::parse(line).get<EpochRecord>());
  }
  return log;
}

std::vector<TrainingSample> training_samples(const dataset::FacePairManifest& manifest,
                                             const dataset::TrainSplit& split, ModelKind kind) {
  std::vector<TrainingSample> out;
  if (kind == ModelKind::pix2pix) {
    for (const auto& id : split.pair_ids) {
      const auto& p = manifest.pair(id);
      out.push_back({p.side_id, {}, p.front_id});
    }
    return out;
  }
  std::set<std::string> seen_fronts;
  for (const auto& id : split.pair_ids) {
    const auto& p = manifest.pair(id);
    if (!seen_fronts.insert(p.front_id).second) continue;
    const auto* mirror = manifest.mirror_pair(id);
    if (!mirror) throw DatasetError("pair '" + id + "' has no opposite-side pair for pairwise training");
    const bool is_left = manifest.pair_pose(id) == dataset::Pose::left;
    out.push_back({is_left ? p.side_id : mirror->side_id, is_left ? mirror->side_id : p.side_id, p.front_id});
  }
  return out;
}

namespace {

// Side/front images preprocessed once per run.
class TensorCache {
 public:
  TensorCache(const dataset::FacePairManifest& manifest, int resolution)
      : manifest_(manifest), resolution_(resolution) {}

  const Tensor& get(const std::string& record_id) {
    auto it = cache_.find(record_id);
    if (it != cache_.end()) return it->second;
    const auto image = dataset::read_png(manifest_.record(record_id).image_path);
    return cache_.emplace(record_id, dataset::preprocess(image, resolution_)).first->second;
  }

  Tensor batch(const std::vector<std::string>& ids) {
    std::vector<Tensor> parts;
    parts.reserve(ids.size());
    for (const auto& id : ids) parts.push_back(get(id));
    return stack_batch(parts);
  }

 private:
  const dataset::FacePairManifest& manifest_;
  int resolution_;
  std::map<std::string, Tensor> cache_;
};

// Gradients of the patch losses with respect to logits.
//   d/dz [-mean log s(z)]     = (s(z) - 1) / n
//   d/dz [-mean log(1-s(z))]  = s(z) / n
Tensor real_logit_grad(const Tensor& logits, double weight) {
  Tensor g(logits.shape());
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = static_cast<float>(weight * (sigmoid(logits.data()[i]) - 1.0) / n);
  }
  return g;
}

Tensor fake_logit_grad(const Tensor& logits, double weight) {
  Tensor g(logits.shape());
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = static_cast<float>(weight * sigmoid(logits.data()[i]) / n);
  }
  return g;
}

struct Networks {
  models::Generator* g;
  models::Discriminator* d;
  nn::Adam* opt_g;
  nn::Adam* opt_d;
};

// Adversarial + L1 gradient of the generator output (D is frozen); returns
// {adv, l1}.
std::pair<double, double> generator_output_grad(models::Discriminator& d, const Tensor& x, const Tensor& y, const Tensor& fake,
                                                const LossWeights& w, Tensor* dfake) {
  models::Discriminator::Tape tape;
  const Tensor logits = d.forward(concat_channels(x, fake), &tape);
  double adv = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    adv -= std::log(std::max(static_cast<double>(sigmoid(logits.data()[i])), kLogClamp));
  }
  adv /= static_cast<double>(logits.size());
  const Tensor dcat = d.backward(real_logit_grad(logits, w.adv), tape, false);
  Tensor dx, dy;
  split_channels(dcat, x.shape().c, &dx, &dy);
  *dfake = std::move(dy);
  const double l1 = l1_mean(y, fake);
  add_l1_grad(fake, y, w.l1, dfake);
  return {adv, l1};
}

void check_finite(double v, const char* what, int epoch, long step) {
  if (!std::isfinite(v)) {
    throw TrainingError(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step),
                        epoch, step);
  }
}

void check_finite_params(const nn::ParameterList& params, int epoch, long step) {
  for (const auto* p : params) {
    for (float v : p->value.values()) {
      if (!std::isfinite(v)) {
        throw TrainingError("non-finite parameter " + p->name + " at epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(step),
                            epoch, step);
      }
    }
  }
}

}  // namespace

double discriminator_update(models::Discriminator& d, nn::Adam& opt_d, const Tensor& x, const Tensor& y,
                            const Tensor& fake) {
  opt_d.zero_grad();
  models::Discriminator::Tape real_tape, fake_tape;
  const Tensor real_logits = d.forward(concat_channels(x, y), &real_tape);
  const Tensor fake_logits = d.forward(concat_channels(x, fake), &fake_tape);
  const double loss = adversarial_loss_from_logits(real_logits, fake_logits).loss_d;
  d.backward(real_logit_grad(real_logits, 1.0), real_tape, true);
  d.backward(fake_logit_grad(fake_logits, 1.0), fake_tape, true);
  opt_d.step();
  return loss;
}

GeneratorUpdate generator_update(models::Generator& g, models::Discriminator& d, nn::Adam& opt_g, const Tensor& x,
                                 const Tensor& y, const LossWeights& weights) {
  opt_g.zero_grad();
  models::Generator::Tape tape;
  const Tensor fake = g.forward(x, &tape);
  Tensor dfake;
  auto [adv, l1] = generator_output_grad(d, x, y, fake, weights, &dfake);
  g.backward(dfake, tape, true);
  opt_g.step();
  return GeneratorUpdate{adv, l1};
}

TrainResult train(const TrainConfig& config, const dataset::FacePairManifest& manifest,
                  const dataset::TrainSplit& split, const models::GeneratorSpec& spec,
                  const fs::path& checkpoint_root, const dataset::ProbeSet* variance_probe) {
  config.validate();
  spec.validate();
  if (split.pair_ids.empty()) throw TrainingError("training split '" + split.spec.name + "' is empty", -1, -1);
  const LossWeights weights = config.effective_weights();
  const int total = config.total_epochs();

  models::AssembleOptions opts;
  opts.seed = config.seed;
  opts.init = config.init;
  opts.discriminator_base_channels = config.disc_base_channels;
  opts.id = split.spec.name;
  TrainResult result{models::assemble(config.kind, spec, opts), {}, checkpoint_root, {}};
  models::ModelBundle& bundle = result.bundle;

  nn::AdamConfig adam;
  adam.learning_rate = static_cast<float>(config.learning_rate);
  adam.beta1 = static_cast<float>(config.adam_beta1);
  std::map<Role, nn::Adam> opt_g, opt_d;
  for (Role r : bundle.roles()) {
    opt_g.emplace(r, nn::Adam(bundle.generator(r).parameters(), adam));
    opt_d.emplace(r, nn::Adam(bundle.discriminator(r).parameters(), adam));
  }
  auto networks = [&](Role r) {
    return Networks{&bundle.generator(r), &bundle.discriminator(r), &opt_g.at(r), &opt_d.at(r)};
  };

  std::vector<TrainingSample> samples = training_samples(manifest, split, config.kind);
  TensorCache tensors(manifest, spec.input_resolution);
  std::mt19937_64 rng(config.seed ^ 0x5eedf00dULL);
  std::error_code ec;
  fs::create_directories(checkpoint_root, ec);
  if (ec) throw TrainingError("cannot create " + checkpoint_root.string() + ": " + ec.message(), -1, -1);

  long step = 0;
  for (int epoch = 0; epoch < total; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const float lr = static_cast<float>(config.learning_rate * std::pow(config.lr_decay_factor, epoch));
    for (auto& [r, o] : opt_g) o.set_learning_rate(lr);
    for (auto& [r, o] : opt_d) o.set_learning_rate(lr);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.weight_identity = weights.identity.value(epoch, total);
    rec.weight_pair = weights.pair.value(epoch, total);
    std::shuffle(samples.begin(), samples.end(), rng);
    long batches = 0;

    for (std::size_t begin = 0; begin < samples.size(); begin += config.batch_size, ++step, ++batches) {
      const std::size_t end = std::min(samples.size(), begin + config.batch_size);
      std::vector<std::string> left_ids, right_ids, front_ids;
      for (std::size_t i = begin; i < end; ++i) {
        left_ids.push_back(samples[i].left_id);
        right_ids.push_back(samples[i].right_id);
        front_ids.push_back(samples[i].front_id);
      }
      const Tensor y = tensors.batch(front_ids);

      if (config.kind == ModelKind::pix2pix) {
        Networks net = networks(Role::shared);
        const Tensor x = tensors.batch(left_ids);
        const double loss_d = discriminator_update(*net.d, *net.opt_d, x, y, net.g->forward(x));
        const auto [adv, l1] = generator_update(*net.g, *net.d, *net.opt_g, x, y, weights);
        const double loss_g = weights.adv * adv + weights.l1 * l1;
        check_finite(loss_d, "discriminator loss", epoch, step);
        check_finite(loss_g, "generator loss", epoch, step);
        rec.loss_d += loss_d;
        rec.loss_g_adv += adv;
        rec.loss_l1 += l1;
        rec.loss_g += loss_g;
        continue;
      }

      // Pairwise-GAN: both sides share the frontal target of the subject.
      Networks nl = networks(Role::left), nr = networks(Role::right);
      const Tensor xl = tensors.batch(left_ids);
      const Tensor xr = tensors.batch(right_ids);
      const double dl = discriminator_update(*nl.d, *nl.opt_d, xl, y, nl.g->forward(xl));
      const double dr = discriminator_update(*nr.d, *nr.opt_d, xr, y, nr.g->forward(xr));

      nl.opt_g->zero_grad();
      nr.opt_g->zero_grad();
      models::Generator::Tape tl, tr, tli, tri;
      const Tensor fl = nl.g->forward(xl, &tl);
      const Tensor fr = nr.g->forward(xr, &tr);
      Tensor gl, gr;
      auto [advl, l1l] = generator_output_grad(*nl.d, xl, y, fl, weights, &gl);
      auto [advr, l1r] = generator_output_grad(*nr.d, xr, y, fr, weights, &gr);
      // Pair term couples the two outputs: mean |G_l(x_l) - G_r(x_r)|.
      const double pair = l1_mean(fl, fr);
      add_l1_grad(fl, fr, rec.weight_pair, &gl);
      add_l1_grad(fr, fl, rec.weight_pair, &gr);
      nl.g->backward(gl, tl, true);
      nr.g->backward(gr, tr, true);
      // Identity term: the frontal target through each side generator.
      double idl = 0.0, idr = 0.0;
      {
        const Tensor il = nl.g->forward(y, &tli);
        idl = l1_mean(y, il);
        Tensor g(il.shape());
        add_l1_grad(il, y, rec.weight_identity, &g);
        nl.g->backward(g, tli, true);
        const Tensor ir = nr.g->forward(y, &tri);
        idr = l1_mean(y, ir);
        Tensor h(ir.shape());
        add_l1_grad(ir, y, rec.weight_identity, &h);
        nr.g->backward(h, tri, true);
      }
      nl.opt_g->step();
      nr.opt_g->step();

      const double total_l = weights.adv * advl + weights.l1 * l1l + rec.weight_identity * idl + rec.weight_pair * pair;
      const double total_r = weights.adv * advr + weights.l1 * l1r + rec.weight_identity * idr + rec.weight_pair * pair;
      check_finite(dl + dr, "discriminator loss", epoch, step);
      check_finite(total_l + total_r, "generator loss", epoch, step);
      rec.loss_d += 0.5 * (dl + dr);
      rec.loss_g_adv += 0.5 * (advl + advr);
      rec.loss_l1 += 0.5 * (l1l + l1r);
      rec.loss_identity += 0.5 * (idl + idr);
      rec.loss_pair += pair;
      rec.loss_g += 0.5 * (total_l + total_r);
    }

    for (Role r : bundle.roles()) {
      check_finite_params(bundle.generator(r).parameters(), epoch, step);
      check_finite_params(bundle.discriminator(r).parameters(), epoch, step);
    }
    const double nb = static_cast<double>(batches);
    rec.loss_d /= nb;
    rec.loss_g_adv /= nb;
    rec.loss_l1 /= nb;
    rec.loss_identity /= nb;
    rec.loss_pair /= nb;
    rec.loss_g /= nb;

    const int completed = epoch + 1;
    const bool checkpoint = completed == total || (config.checkpoint_every > 0 && completed % config.checkpoint_every == 0);
    if (checkpoint) {
      models::save_bundle(checkpoint_root, bundle, completed);
      result.checkpoint_epochs.push_back(completed);
      if (config.instrumentation && variance_probe) {
        for (Role r : bundle.roles()) {
          rec.variance.push_back(instrumentation::variance_trace(
              bundle.generator(r), *variance_probe, bundle.id + "/" + std::string(models::role_name(r))));
        }
      }
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.epochs.push_back(std::move(rec));
    result.log.write_jsonl(checkpoint_root / "training_log.jsonl");
  }
  return result;
}

}  // namespace biasprobe::training
