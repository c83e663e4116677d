#include "biasprobe/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "biasprobe/error.hpp"
#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::training {
namespace {

double clamped_log(double p) { return std::log(std::max(p, kLogClamp)); }

std::vector<float> to_probs(const Tensor& logits) {
  std::vector<float> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits.data()[i]);
  return p;
}

}  // namespace

float sigmoid(float z) {
  if (z >= 0.0f) return 1.0f / (1.0f + std::exp(-z));
  const float e = std::exp(z);
  return e / (1.0f + e);
}

AdversarialLoss adversarial_loss_from_probs(std::span<const float> real_probs, std::span<const float> fake_probs) {
  if (real_probs.empty() || fake_probs.empty()) throw Error("adversarial loss needs non-empty patch maps");
  double real_term = 0.0;
  for (float p : real_probs) real_term += clamped_log(p);
  double fake_term = 0.0;
  double gen_term = 0.0;
  for (float p : fake_probs) {
    fake_term += clamped_log(1.0 - static_cast<double>(p));
    gen_term += clamped_log(p);
  }
  const double nr = static_cast<double>(real_probs.size());
  const double nf = static_cast<double>(fake_probs.size());
  return AdversarialLoss{-real_term / nr - fake_term / nf, -gen_term / nf};
}

AdversarialLoss adversarial_loss_from_logits(const Tensor& real_logits, const Tensor& fake_logits) {
  if (!(real_logits.shape() == fake_logits.shape()))
    throw Error("adversarial loss: real/fake patch maps differ in shape (" + real_logits.shape().str() + " vs " +
                fake_logits.shape().str() + ")");
  const auto pr = to_probs(real_logits);
  const auto pf = to_probs(fake_logits);
  return adversarial_loss_from_probs(pr, pf);
}

AdversarialLoss adversarial_loss(const models::Discriminator& d, const Tensor& x, const Tensor& y,
                                 const Tensor& y_hat) {
  if (!(x.shape() == y.shape()) || !(x.shape() == y_hat.shape()))
    throw Error("adversarial loss: x, y and y_hat must share a shape (" + x.shape().str() + ", " +
                y.shape().str() + ", " + y_hat.shape().str() + ")");
  return adversarial_loss_from_logits(d.forward(concat_channels(x, y)), d.forward(concat_channels(x, y_hat)));
}

double l1_mean(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) throw Error("l1: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  return simd::kernels().l1_distance(a.data(), b.data(), a.size()) / static_cast<double>(a.size());
}

void add_l1_grad(const Tensor& pred, const Tensor& target, double weight, Tensor* grad) {
  if (!(pred.shape() == target.shape()) || !(grad->shape() == pred.shape()))
    throw Error("l1 gradient: shape mismatch");
  const float scale = static_cast<float>(weight / static_cast<double>(pred.size()));
  const float* p = pred.data();
  const float* t = target.data();
  float* g = grad->data();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const float d = p[i] - t[i];
    g[i] += d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
  }
}

Pix2PixLosses pix2pix_loss_from_outputs(const Tensor& y_hat, const Tensor& y, const Tensor& real_logits,
                                        const Tensor& fake_logits, const LossWeights& weights) {
  const AdversarialLoss adv = adversarial_loss_from_logits(real_logits, fake_logits);
  Pix2PixLosses out;
  out.loss_d = adv.loss_d;
  out.loss_g_adv = adv.loss_g_adv;
  out.loss_l1 = l1_mean(y, y_hat);
  out.loss_g = weights.adv * out.loss_g_adv + weights.l1 * out.loss_l1;
  return out;
}

Pix2PixLosses pix2pix_loss(const models::Generator& g, const models::Discriminator& d, const Tensor& x,
                           const Tensor& y, const LossWeights& weights) {
  if (!(x.shape() == y.shape())) throw Error("pix2pix loss: x and y differ in shape");
  const Tensor y_hat = g.forward(x);
  return pix2pix_loss_from_outputs(y_hat, y, d.forward(concat_channels(x, y)), d.forward(concat_channels(x, y_hat)),
                                   weights);
}

void check_pairwise_batch(const PairwiseBatch& batch) {
  if (!(batch.x_left.shape() == batch.y.shape()) || !(batch.x_right.shape() == batch.y.shape()))
    throw Error("pairwise batch: left/right/frontal tensors are not matched (" + batch.x_left.shape().str() + ", " +
                batch.x_right.shape().str() + ", " + batch.y.shape().str() + ")");
}

PairwiseLosses pairwise_loss_from_outputs(const PairwiseOutputs& o, const Tensor& y, int epoch, int total_epochs,
                                          const LossWeights& weights) {
  PairwiseLosses out;
  out.identity_weight = weights.identity.value(epoch, total_epochs);
  out.pair_weight = weights.pair.value(epoch, total_epochs);
  auto side = [&](const Tensor& fake, const Tensor& identity, const Tensor& real_logits, const Tensor& fake_logits) {
    SideLosses s;
    const AdversarialLoss adv = adversarial_loss_from_logits(real_logits, fake_logits);
    s.loss_d = adv.loss_d;
    s.adv = adv.loss_g_adv;
    s.l1 = l1_mean(y, fake);
    s.identity = l1_mean(y, identity);
    s.weighted = weights.adv * s.adv + weights.l1 * s.l1 + out.identity_weight * s.identity;
    return s;
  };
  out.left = side(o.fake_left, o.identity_left, o.real_logits_left, o.fake_logits_left);
  out.right = side(o.fake_right, o.identity_right, o.real_logits_right, o.fake_logits_right);
  out.pair = l1_mean(o.fake_left, o.fake_right);
  out.total_left = out.left.weighted + out.pair_weight * out.pair;
  out.total_right = out.right.weighted + out.pair_weight * out.pair;
  out.objective = out.left.weighted + out.right.weighted + out.pair_weight * out.pair;
  return out;
}

PairwiseLosses pairwise_loss(const models::Generator& g_left, const models::Generator& g_right,
                             const models::Discriminator& d_left, const models::Discriminator& d_right,
                             const PairwiseBatch& batch, int epoch, int total_epochs, const LossWeights& weights) {
  check_pairwise_batch(batch);
  PairwiseOutputs o;
  o.fake_left = g_left.forward(batch.x_left);
  o.fake_right = g_right.forward(batch.x_right);
  o.identity_left = g_left.forward(batch.y);
  o.identity_right = g_right.forward(batch.y);
  o.real_logits_left = d_left.forward(concat_channels(batch.x_left, batch.y));
  o.fake_logits_left = d_left.forward(concat_channels(batch.x_left, o.fake_left));
  o.real_logits_right = d_right.forward(concat_channels(batch.x_right, batch.y));
  o.fake_logits_right = d_right.forward(concat_channels(batch.x_right, o.fake_right));
  return pairwise_loss_from_outputs(o, batch.y, epoch, total_epochs, weights);
}

}  // namespace biasprobe::training
