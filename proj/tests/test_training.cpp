#include <cmath>
#include <fstream>
#include <random>

#include "biasprobe/dataset/manifest.hpp"
#include "biasprobe/dataset/split.hpp"
#include "biasprobe/dataset/synthetic.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/models/checkpoint.hpp"
#include "biasprobe/training/losses.hpp"
#include "biasprobe/training/schedule.hpp"
#include "biasprobe/training/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace biasprobe;
using namespace biasprobe::training;
using biasprobe::testing::random_tensor;
using biasprobe::testing::TempDir;

namespace {

double bf_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double bf_log(double p) { return std::log(std::max(p, 1e-12)); }

// loss_D and loss_G_adv written out element by element.
std::pair<double, double> bf_adversarial(const Tensor& real_logits, const Tensor& fake_logits) {
  double lr = 0.0, lf = 0.0, lg = 0.0;
  for (std::size_t i = 0; i < real_logits.size(); ++i) lr += bf_log(bf_sigmoid(real_logits.data()[i]));
  for (std::size_t i = 0; i < fake_logits.size(); ++i) {
    const double p = bf_sigmoid(fake_logits.data()[i]);
    lf += bf_log(1.0 - p);
    lg += bf_log(p);
  }
  const double nr = static_cast<double>(real_logits.size()), nf = static_cast<double>(fake_logits.size());
  return {-lr / nr - lf / nf, -lg / nf};
}

double bf_l1(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (int n = 0; n < a.shape().n; ++n)
    for (int c = 0; c < a.shape().c; ++c)
      for (int h = 0; h < a.shape().h; ++h)
        for (int w = 0; w < a.shape().w; ++w) s += std::abs(double(a.at(n, c, h, w)) - double(b.at(n, c, h, w)));
  return s / static_cast<double>(a.size());
}

struct Corpus {
  TempDir dir{"bp-train"};
  dataset::FacePairManifest manifest;
  dataset::TrainSplit split;
};

std::unique_ptr<Corpus> small_corpus(int subjects, int res, int cap, int maj = 5) {
  auto c = std::make_unique<Corpus>();
  const auto made = dataset::make_synthetic_corpus(subjects, res, 3, 0.5, c->dir.path());
  c->manifest = dataset::load_manifest(made.manifest_path);
  dataset::SplitSpec s;
  s.name = "s" + std::to_string(maj);
  s.ratio_majority = maj;
  s.ratio_minority = 10 - maj;
  s.majority_cap = cap;
  s.seed = 4;
  c->split = dataset::build_split(c->manifest, s, {});
  return c;
}

TrainConfig small_config(models::ModelKind kind, int epochs) {
  TrainConfig t;
  t.kind = kind;
  t.epochs = epochs;
  t.seed = 9;
  t.disc_base_channels = 8;
  return t;
}

std::vector<double> losses(const TrainingLog& log) {
  std::vector<double> v;
  for (const auto& r : log.epochs)
    for (double x : {r.loss_d, r.loss_g_adv, r.loss_l1, r.loss_identity, r.loss_pair, r.loss_g}) v.push_back(x);
  return v;
}

std::vector<Tensor> snapshot(const nn::ParameterList& ps) {
  std::vector<Tensor> out;
  for (const auto* p : ps) out.push_back(p->value);
  return out;
}

bool unchanged(const nn::ParameterList& ps, const std::vector<Tensor>& before) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (!bit_equal(ps[i]->value, before[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("adversarial loss closed forms") {
  const std::vector<float> half(4, 0.5f);
  CHECK(adversarial_loss_from_probs(half, half).loss_d == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(adversarial_loss_from_probs(half, half).loss_d == doctest::Approx(1.3863).epsilon(1e-4));
  const std::vector<float> ones(4, 1.0f), zeros(4, 0.0f);
  CHECK(adversarial_loss_from_probs(ones, zeros).loss_d == 0.0);
  // Clamping keeps the opposite limit finite.
  CHECK(std::isfinite(adversarial_loss_from_probs(zeros, ones).loss_d));
  CHECK_THROWS(adversarial_loss_from_probs({}, half));
}

TEST_CASE("adversarial loss on a hand-written 2x2 patch map") {
  const std::vector<float> real{0.9f, 0.8f, 0.2f, 0.1f}, fake{0.3f, 0.4f, 0.6f, 0.2f};
  const double hand = -(std::log(0.9) + std::log(0.8) + std::log(0.2) + std::log(0.1)) / 4.0 -
                      (std::log(0.7) + std::log(0.6) + std::log(0.4) + std::log(0.8)) / 4.0;
  const double hand_g = -(std::log(0.3) + std::log(0.4) + std::log(0.6) + std::log(0.2)) / 4.0;
  const auto got = adversarial_loss_from_probs(real, fake);
  CHECK(std::abs(got.loss_d - hand) < 1e-6);
  CHECK(std::abs(got.loss_g_adv - hand_g) < 1e-6);
}

TEST_CASE("adversarial loss from logits on seeded 1x3x8x8 tensors") {
  const Tensor real = random_tensor({1, 3, 8, 8}, 1, -4.0f, 4.0f);
  const Tensor fake = random_tensor({1, 3, 8, 8}, 2, -4.0f, 4.0f);
  const auto got = adversarial_loss_from_logits(real, fake);
  const auto [d, g] = bf_adversarial(real, fake);
  CHECK(std::abs(got.loss_d - d) < 1e-6);
  CHECK(std::abs(got.loss_g_adv - g) < 1e-6);
  CHECK_THROWS(adversarial_loss_from_logits(real, random_tensor({1, 3, 4, 4}, 3)));
}

TEST_CASE("pix2pix loss against brute force") {
  const Tensor y_hat = random_tensor({1, 3, 8, 8}, 11);
  const Tensor y = random_tensor({1, 3, 8, 8}, 12);
  const Tensor real = random_tensor({1, 3, 8, 8}, 13, -3.0f, 3.0f);
  const Tensor fake = random_tensor({1, 3, 8, 8}, 14, -3.0f, 3.0f);
  const auto [d, g] = bf_adversarial(real, fake);
  const double l1 = bf_l1(y, y_hat);

  LossWeights ones = LossWeights::pix2pix_default();
  ones.adv = 1.0;
  ones.l1 = 1.0;
  const auto a = pix2pix_loss_from_outputs(y_hat, y, real, fake, ones);
  CHECK(std::abs(a.loss_g - (g + l1)) < 1e-6);
  CHECK(std::abs(a.loss_d - d) < 1e-6);

  const auto def = pix2pix_loss_from_outputs(y_hat, y, real, fake);
  CHECK(LossWeights::pix2pix_default().adv == 2.0);
  CHECK(LossWeights::pix2pix_default().l1 == 0.5);
  CHECK(std::abs(def.loss_g - (2.0 * g + 0.5 * l1)) < 1e-6);
}

TEST_CASE("pix2pix loss with a perfect generator and an undecided discriminator") {
  models::AssembleOptions o;
  o.seed = 1;
  o.discriminator_base_channels = 8;
  models::ModelBundle b = models::assemble(models::ModelKind::pix2pix, models::GeneratorSpec::standard(3, 16, 8), o);
  // All-zero discriminator: every logit is 0, so D = 0.5 everywhere.
  for (auto* p : b.discriminator(models::Role::shared).parameters()) p->value.zero();
  const Tensor x = random_tensor({1, 3, 16, 16}, 2);
  const Tensor y = b.generator(models::Role::shared).forward(x);
  const auto l = pix2pix_loss(b.generator(models::Role::shared), b.discriminator(models::Role::shared), x, y);
  CHECK(l.loss_l1 == 0.0);
  CHECK(l.loss_g == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("schedule endpoints") {
  const LossWeights w = LossWeights::pairwise_default();
  CHECK(w.adv == 10.0);
  CHECK(w.l1 == 3.0);
  for (int total : {2, 5, 40, 250}) {
    const int last = total - 1, mid = last / 2;
    CHECK(w.identity.value(0, total) == 10.0);
    CHECK(w.identity.value(last, total) == 5.0);
    CHECK(w.pair.value(0, total) == 10.0);
    CHECK(w.pair.value(last, total) == 2.0);
    CHECK(w.identity.value(mid, total) == doctest::Approx(10.0 - 5.0 * mid / last).epsilon(1e-12));
    CHECK(w.pair.value(mid, total) == doctest::Approx(10.0 - 8.0 * mid / last).epsilon(1e-12));
    for (int e = 1; e < total; ++e) CHECK(w.pair.value(e, total) <= w.pair.value(e - 1, total));
  }
  CHECK(DecaySchedule::constant(3.0).value(7, 10) == 3.0);
}

TEST_CASE("pairwise loss against brute force") {
  PairwiseOutputs o;
  o.fake_left = random_tensor({1, 3, 8, 8}, 21);
  o.fake_right = random_tensor({1, 3, 8, 8}, 22);
  o.identity_left = random_tensor({1, 3, 8, 8}, 23);
  o.identity_right = random_tensor({1, 3, 8, 8}, 24);
  o.real_logits_left = random_tensor({1, 3, 8, 8}, 25, -3.0f, 3.0f);
  o.fake_logits_left = random_tensor({1, 3, 8, 8}, 26, -3.0f, 3.0f);
  o.real_logits_right = random_tensor({1, 3, 8, 8}, 27, -3.0f, 3.0f);
  o.fake_logits_right = random_tensor({1, 3, 8, 8}, 28, -3.0f, 3.0f);
  const Tensor y = random_tensor({1, 3, 8, 8}, 29);

  for (int epoch : {0, 19, 39}) {
    const int total = 40;
    const double wid = epoch == 0 ? 10.0 : (epoch == 39 ? 5.0 : 10.0 - 5.0 * epoch / 39.0);
    const double wpair = epoch == 0 ? 10.0 : (epoch == 39 ? 2.0 : 10.0 - 8.0 * epoch / 39.0);
    const auto l = pairwise_loss_from_outputs(o, y, epoch, total);
    CHECK(l.identity_weight == doctest::Approx(wid).epsilon(1e-12));
    CHECK(l.pair_weight == doctest::Approx(wpair).epsilon(1e-12));
    const auto [dl, gl] = bf_adversarial(o.real_logits_left, o.fake_logits_left);
    const auto [dr, gr] = bf_adversarial(o.real_logits_right, o.fake_logits_right);
    const double pair = bf_l1(o.fake_left, o.fake_right);
    const double side_l = 10.0 * gl + 3.0 * bf_l1(y, o.fake_left) + wid * bf_l1(y, o.identity_left);
    const double side_r = 10.0 * gr + 3.0 * bf_l1(y, o.fake_right) + wid * bf_l1(y, o.identity_right);
    CHECK(std::abs(l.left.loss_d - dl) < 1e-6);
    CHECK(std::abs(l.right.loss_d - dr) < 1e-6);
    CHECK(std::abs(l.pair - pair) < 1e-6);
    CHECK(std::abs(l.total_left - (side_l + wpair * pair)) < 1e-6);
    CHECK(std::abs(l.total_right - (side_r + wpair * pair)) < 1e-6);
    CHECK(std::abs(l.objective - (side_l + side_r + wpair * pair)) < 1e-6);
  }

  SUBCASE("identical outputs give a zero pair term") {
    PairwiseOutputs same = o;
    same.fake_right = same.fake_left;
    CHECK(pairwise_loss_from_outputs(same, y, 0, 10).pair == 0.0);
  }
  SUBCASE("identity fixed point gives a zero identity term") {
    PairwiseOutputs fixed = o;
    fixed.identity_left = y;
    fixed.identity_right = y;
    const auto l = pairwise_loss_from_outputs(fixed, y, 0, 10);
    CHECK(l.left.identity == 0.0);
    CHECK(l.right.identity == 0.0);
  }
}

TEST_CASE("pairwise loss on networks matches the tensor form") {
  models::AssembleOptions o;
  o.seed = 2;
  o.discriminator_base_channels = 8;
  models::ModelBundle b = models::assemble(models::ModelKind::pairwise, models::GeneratorSpec::standard(3, 16, 8), o);
  PairwiseBatch batch{random_tensor({1, 3, 16, 16}, 31), random_tensor({1, 3, 16, 16}, 32),
                      random_tensor({1, 3, 16, 16}, 33)};
  auto& gl = b.generator(models::Role::left);
  auto& gr = b.generator(models::Role::right);
  auto& dl = b.discriminator(models::Role::left);
  auto& dr = b.discriminator(models::Role::right);
  const auto l = pairwise_loss(gl, gr, dl, dr, batch, 0, 10);
  PairwiseOutputs out;
  out.fake_left = gl.forward(batch.x_left);
  out.fake_right = gr.forward(batch.x_right);
  out.identity_left = gl.forward(batch.y);
  out.identity_right = gr.forward(batch.y);
  out.real_logits_left = dl.forward(concat_channels(batch.x_left, batch.y));
  out.fake_logits_left = dl.forward(concat_channels(batch.x_left, out.fake_left));
  out.real_logits_right = dr.forward(concat_channels(batch.x_right, batch.y));
  out.fake_logits_right = dr.forward(concat_channels(batch.x_right, out.fake_right));
  const auto [d_left, g_left] = bf_adversarial(out.real_logits_left, out.fake_logits_left);
  const double side_l = 10.0 * g_left + 3.0 * bf_l1(batch.y, out.fake_left) + 10.0 * bf_l1(batch.y, out.identity_left);
  CHECK(std::abs(l.left.weighted - side_l) < 1e-6);
  CHECK(std::abs(l.left.loss_d - d_left) < 1e-6);

  // Same weights on both sides and the same input: the pair term vanishes.
  auto pr = gr.parameters();
  auto pl = gl.parameters();
  for (std::size_t i = 0; i < pl.size(); ++i) pr[i]->value = pl[i]->value;
  batch.x_right = batch.x_left;
  CHECK(pairwise_loss(gl, gr, dl, dr, batch, 0, 10).pair == 0.0);

  batch.x_right = random_tensor({1, 3, 8, 8}, 34);
  CHECK_THROWS(pairwise_loss(gl, gr, dl, dr, batch, 0, 10));
}

TEST_CASE("discriminator and generator updates are isolated") {
  models::AssembleOptions o;
  o.seed = 3;
  o.discriminator_base_channels = 8;
  models::ModelBundle b = models::assemble(models::ModelKind::pix2pix, models::GeneratorSpec::standard(3, 16, 8), o);
  auto& g = b.generator(models::Role::shared);
  auto& d = b.discriminator(models::Role::shared);
  nn::Adam opt_g(g.parameters(), {});
  nn::Adam opt_d(d.parameters(), {});
  const Tensor x = random_tensor({1, 3, 16, 16}, 41), y = random_tensor({1, 3, 16, 16}, 42);

  auto g0 = snapshot(g.parameters());
  auto d0 = snapshot(d.parameters());
  discriminator_update(d, opt_d, x, y, g.forward(x));
  CHECK(unchanged(g.parameters(), g0));
  CHECK_FALSE(unchanged(d.parameters(), d0));

  auto d1 = snapshot(d.parameters());
  generator_update(g, d, opt_g, x, y, LossWeights::pix2pix_default());
  CHECK(unchanged(d.parameters(), d1));
  CHECK_FALSE(unchanged(g.parameters(), g0));
}

TEST_CASE("training samples") {
  auto c = small_corpus(10, 16, 100);
  const auto p2p = training_samples(c->manifest, c->split, models::ModelKind::pix2pix);
  CHECK(p2p.size() == c->split.pair_ids.size());
  const auto pw = training_samples(c->manifest, c->split, models::ModelKind::pairwise);
  std::set<std::string> fronts;
  for (const auto& id : c->split.pair_ids) fronts.insert(c->manifest.pair(id).front_id);
  CHECK(pw.size() == fronts.size());
  for (const auto& s : pw) {
    CHECK(c->manifest.record(s.left_id).pose == dataset::Pose::left);
    CHECK(c->manifest.record(s.right_id).pose == dataset::Pose::right);
  }
}

TEST_CASE("train config validation and json") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t.epochs = 3;
  t.learning_rate = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);

  const TrainConfig def = nlohmann::json::object().get<TrainConfig>();
  CHECK(def.learning_rate == 2e-4);
  CHECK(def.adam_beta1 == 0.5);
  CHECK(def.batch_size == 1);

  CHECK(full_scale_preset(models::ModelKind::pix2pix).total_epochs() == 125);
  CHECK(full_scale_preset(models::ModelKind::pairwise).total_epochs() == 250);
  TrainConfig pw = full_scale_preset(models::ModelKind::pairwise);
  const TrainConfig back = nlohmann::json(pw).get<TrainConfig>();
  CHECK(back.epochs == 125);
  CHECK(back.effective_weights().pair.end == 2.0);
}

TEST_CASE("desk training reduces the reconstruction loss") {
  auto c = small_corpus(100, 32, 30);
  TempDir out("bp-desk");
  const TrainResult r =
      train(small_config(models::ModelKind::pix2pix, 20), c->manifest, c->split,
            models::GeneratorSpec::standard(3, 32, 8), out.path());
  REQUIRE(r.log.epochs.size() == 20);
  MESSAGE("L1 first " << r.log.epochs.front().loss_l1 << " last " << r.log.epochs.back().loss_l1);
  CHECK(r.log.epochs.back().loss_l1 < r.log.epochs.front().loss_l1);
  for (const auto& e : r.log.epochs) {
    CHECK(std::abs(e.loss_g - (2.0 * e.loss_g_adv + 0.5 * e.loss_l1)) < 1e-6);
    CHECK(e.loss_pair == 0.0);
  }
  CHECK(r.checkpoint_epochs == std::vector<int>{20});
  const TrainingLog back = TrainingLog::read_jsonl(out / "training_log.jsonl");
  CHECK(losses(back) == losses(r.log));
}

TEST_CASE("pairwise training log decomposes and follows the schedules") {
  auto c = small_corpus(12, 16, 100);
  TempDir out("bp-pw");
  TrainConfig cfg = small_config(models::ModelKind::pairwise, 3);
  cfg.checkpoint_every = 2;
  const TrainResult r = train(cfg, c->manifest, c->split, models::GeneratorSpec::standard(3, 16, 8), out.path());
  REQUIRE(r.log.epochs.size() == 6);
  CHECK(r.checkpoint_epochs == std::vector<int>{2, 4, 6});
  CHECK(models::saved_epochs(out.path()) == std::vector<int>{2, 4, 6});
  CHECK(r.log.epochs.front().weight_identity == 10.0);
  CHECK(r.log.epochs.back().weight_identity == 5.0);
  CHECK(r.log.epochs.front().weight_pair == 10.0);
  CHECK(r.log.epochs.back().weight_pair == 2.0);
  for (const auto& e : r.log.epochs) {
    const double sum = 10.0 * e.loss_g_adv + 3.0 * e.loss_l1 + e.weight_identity * e.loss_identity +
                       e.weight_pair * e.loss_pair;
    CHECK(std::abs(e.loss_g - sum) < 1e-6);
  }
}

TEST_CASE("training is deterministic under a seed") {
  auto c = small_corpus(12, 16, 100);
  TempDir a("bp-det"), b("bp-det");
  const TrainConfig cfg = small_config(models::ModelKind::pairwise, 2);
  const auto spec = models::GeneratorSpec::standard(3, 16, 8);
  const TrainResult ra = train(cfg, c->manifest, c->split, spec, a.path());
  const TrainResult rb = train(cfg, c->manifest, c->split, spec, b.path());
  CHECK(losses(ra.log) == losses(rb.log));
  const Tensor x = random_tensor({1, 3, 16, 16}, 5);
  CHECK(bit_equal(ra.bundle.generator(models::Role::left).forward(x),
                  rb.bundle.generator(models::Role::left).forward(x)));
}

TEST_CASE("a diverging run aborts with its epoch and step") {
  auto c = small_corpus(8, 16, 100);
  TempDir out("bp-nan");
  TrainConfig cfg = small_config(models::ModelKind::pix2pix, 3);
  cfg.learning_rate = 1e30;
  try {
    train(cfg, c->manifest, c->split, models::GeneratorSpec::standard(3, 16, 8), out.path());
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 0);
    CHECK(e.step() >= 0);
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("empty split is rejected") {
  auto c = small_corpus(8, 16, 100);
  dataset::TrainSplit empty = c->split;
  empty.pair_ids.clear();
  TempDir out("bp-empty");
  CHECK_THROWS_AS(train(small_config(models::ModelKind::pix2pix, 1), c->manifest, empty,
                        models::GeneratorSpec::standard(3, 16, 8), out.path()),
                  TrainingError);
}
