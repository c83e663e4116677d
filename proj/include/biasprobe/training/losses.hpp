#pragma once

#include <span>

#include "biasprobe/models/discriminator.hpp"
#include "biasprobe/models/generator.hpp"
#include "biasprobe/tensor.hpp"
#include "biasprobe/training/schedule.hpp"

namespace biasprobe::training {

inline constexpr double kLogClamp = 1e-12;

float sigmoid(float z);

struct AdversarialLoss {
  double loss_d = 0.0;      // -mean log D(x,y) - mean log(1 - D(x,y_hat))
  double loss_g_adv = 0.0;  // -mean log D(x,y_hat), non-saturating form
};

// Inputs are discriminator outputs after the sigmoid.
AdversarialLoss adversarial_loss_from_probs(std::span<const float> real_probs,
                                            std::span<const float> fake_probs);
// Inputs are raw patch logits.
AdversarialLoss adversarial_loss_from_logits(const Tensor& real_logits, const Tensor& fake_logits);
// Runs the discriminator on (x, y) and (x, y_hat).
AdversarialLoss adversarial_loss(const models::Discriminator& d, const Tensor& x, const Tensor& y,
                                 const Tensor& y_hat);

// mean |a - b| over all elements.
double l1_mean(const Tensor& a, const Tensor& b);
// weight * d(mean|pred - target|)/d pred, accumulated into `grad`.
void add_l1_grad(const Tensor& pred, const Tensor& target, double weight, Tensor* grad);

struct Pix2PixLosses {
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double loss_l1 = 0.0;
  double loss_g = 0.0;  // adv * loss_g_adv + l1 * loss_l1
};

// Loss terms from already computed tensors: generator output, target and the
// discriminator logits on (x, y) and (x, y_hat).
Pix2PixLosses pix2pix_loss_from_outputs(const Tensor& y_hat, const Tensor& y, const Tensor& real_logits,
                                        const Tensor& fake_logits,
                                        const LossWeights& weights = LossWeights::pix2pix_default());

Pix2PixLosses pix2pix_loss(const models::Generator& g, const models::Discriminator& d, const Tensor& x,
                           const Tensor& y, const LossWeights& weights = LossWeights::pix2pix_default());

// Side-pose inputs and the shared frontal target of one subject.
struct PairwiseBatch {
  Tensor x_left;
  Tensor x_right;
  Tensor y;
};

struct SideLosses {
  double loss_d = 0.0;
  double adv = 0.0;
  double l1 = 0.0;
  double identity = 0.0;
  double weighted = 0.0;  // adv_w * adv + l1_w * l1 + id_w * identity
};

struct PairwiseLosses {
  SideLosses left;
  SideLosses right;
  double pair = 0.0;
  double identity_weight = 0.0;
  double pair_weight = 0.0;
  double total_left = 0.0;   // left.weighted + pair_weight * pair
  double total_right = 0.0;  // right.weighted + pair_weight * pair
  double objective = 0.0;    // left.weighted + right.weighted + pair_weight * pair
};

void check_pairwise_batch(const PairwiseBatch& batch);

// Everything the pairwise objective reads, per side: G(x_side), G(y) and the
// discriminator logits on (x_side, y) and (x_side, G(x_side)).
struct PairwiseOutputs {
  Tensor fake_left;
  Tensor fake_right;
  Tensor identity_left;
  Tensor identity_right;
  Tensor real_logits_left;
  Tensor fake_logits_left;
  Tensor real_logits_right;
  Tensor fake_logits_right;
};

PairwiseLosses pairwise_loss_from_outputs(const PairwiseOutputs& out, const Tensor& y, int epoch, int total_epochs,
                                          const LossWeights& weights = LossWeights::pairwise_default());

PairwiseLosses pairwise_loss(const models::Generator& g_left, const models::Generator& g_right,
                             const models::Discriminator& d_left, const models::Discriminator& d_right,
                             const PairwiseBatch& batch, int epoch, int total_epochs,
                             const LossWeights& weights = LossWeights::pairwise_default());

}  // namespace biasprobe::training
