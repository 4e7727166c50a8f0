#pragma once
// Three-player conditional game: generator G(z,y), classifier C, and a
// discriminator D judging (data, label) pairs. C is trained on its
// sampled pseudo labels with a REINFORCE surrogate (EMA baseline) and,
// past a warmup epoch, on generated pairs as extra supervision.
//
// Loss math is templated for the double-precision derivative checks.

#include <cmath>
#include <vector>

#include "ganssl/badgan.hpp"  // supervised_loss shared by C
#include "ganssl/config.hpp"
#include "ganssl/datasets.hpp"
#include "ganssl/networks.hpp"

namespace ganssl::goodgan {

// Binary cross-entropy building block over sigmoid scores in (0,1):
// target 1 → −log s, target 0 → −log(1−s); mean over rows, optional
// weight, gradient w.r.t. the scores accumulated into *ds.
template <class T>
T bce_term(const Tensor<T>& scores, bool target_real, T weight,
           Tensor<T>* ds = nullptr) {
  const std::size_t b = scores.count();
  if (ds && ds->count() != b) *ds = Tensor<T>(scores.shape);
  T loss = T(0);
  for (std::size_t i = 0; i < b; ++i) {
    const T s = std::clamp(scores.data[i], T(1e-12), T(1) - T(1e-12));
    if (target_real) {
      loss += -std::log(s);
      if (ds) ds->data[i] += weight * (-T(1) / s) / T(b);
    } else {
      loss += -std::log(T(1) - s);
      if (ds) ds->data[i] += weight * (T(1) / (T(1) - s)) / T(b);
    }
  }
  return weight * loss / T(b);
}

// Real pairs labeled 1; generated pairs weight (1−alpha) and pseudo
// pairs weight alpha, both labeled 0 (flip via pseudo_as_real).
template <class T>
T discriminator_loss(const Tensor<T>& real_scores,
                     const Tensor<T>& gen_scores,
                     const Tensor<T>& pseudo_scores, T alpha,
                     Tensor<T>* d_real = nullptr, Tensor<T>* d_gen = nullptr,
                     Tensor<T>* d_pseudo = nullptr,
                     bool pseudo_as_real = false) {
  if (alpha < T(0) || alpha > T(1))
    throw std::invalid_argument("discriminator_loss: alpha outside [0,1]");
  T loss = bce_term(real_scores, true, T(1), d_real);
  loss += bce_term(gen_scores, false, T(1) - alpha, d_gen);
  loss += bce_term(pseudo_scores, !pseudo_as_real ? false : true, alpha,
                   d_pseudo);
  return loss;
}

// Non-saturating generator objective: mean −log D(G(z,y), y).
template <class T>
T generator_loss(const Tensor<T>& gen_scores, Tensor<T>* ds = nullptr) {
  return bce_term(gen_scores, true, T(1), ds);
}

// REINFORCE surrogate: mean((reward − baseline) · log p_c(ŷ|x)). Its
// gradient w.r.t. the classifier logits is the score-function estimate
// of ∇ E_{ŷ~p_c}[reward]; dlogits uses d log p_y / d l_j = δ_jy − p_j.
template <class T>
T reinforce_surrogate(const Tensor<T>& logits,
                      const std::vector<int>& sampled,
                      const std::vector<T>& rewards, T baseline,
                      Tensor<T>* dlogits = nullptr) {
  const std::size_t b = logits.rows(), k = logits.cols();
  if (sampled.size() != b || rewards.size() != b)
    throw std::invalid_argument("reinforce_surrogate: batch mismatch");
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  T loss = T(0);
  std::vector<T> s;
  for (std::size_t i = 0; i < b; ++i) {
    const T z = badgan::detail::row_lse_softmax(logits.row(i), k, s);
    const T logp = logits.at(i, sampled[i]) - z;
    const T adv = rewards[i] - baseline;
    loss += adv * logp;
    if (dlogits) {
      for (std::size_t j = 0; j < k; ++j)
        dlogits->at(i, j) = adv / T(b) * (-s[j]);
      dlogits->at(i, sampled[i]) += adv / T(b);
    }
  }
  return loss / T(b);
}

struct ReinforceEstimator {
  double baseline = 0.0;
  double decay = 0.99;
  bool primed = false;

  void observe(double mean_reward) {
    baseline = primed ? decay * baseline + (1.0 - decay) * mean_reward
                      : mean_reward;
    primed = true;
  }
};

struct PseudoSample {
  std::vector<int> labels;
  std::vector<double> log_probs;
};

// ŷ ~ categorical(softmax(logits)) per row; log-probs retained.
PseudoSample sample_from_logits(const Tensor<float>& logits, Rng& rng);

// ---------------------------------------------------------------------------

struct GoodGanLossBreakdown {
  double d_loss = 0.0;
  double g_adversarial = 0.0;
  double c_supervised = 0.0;
  double c_adversarial_reinforce = 0.0;
  double c_pseudo_pair = 0.0;  // 0 before warmup
  double alpha = 0.0;

  double total_c(const LossWeightConfig& w) const {
    return c_supervised + w.alpha_c * c_adversarial_reinforce +
           w.pseudo * c_pseudo_pair;
  }
  bool finite() const;
};

struct GoodGanState {
  DatasetSpec spec;
  Classifier<float> c;
  Generator<float> g;  // conditional
  PairDiscriminator<float> d;
  nn::Adam<float> opt_c, opt_g, opt_d;
  ReinforceEstimator reinforce;
};

GoodGanState goodgan_init(const TrainConfig& cfg, const DatasetSpec& spec);

// One D, one G, one C update (in that order); all draws from rng.
GoodGanLossBreakdown goodgan_train_step(GoodGanState& s,
                                        const data::LabeledSet& labeled,
                                        const Tensor<float>& unlabeled,
                                        const TrainConfig& cfg,
                                        std::size_t epoch, Rng& rng);

// classes × latents image grid, eval-mode generation; returned tensor
// shape {C, K·H, L·W} with row = class, column = latent.
Tensor<float> conditional_grid(Generator<float>& g, const DatasetSpec& spec,
                               const std::vector<int>& classes,
                               const Tensor<float>& latents);

// steps × classes grid; row t uses z = (1−t/(steps−1))·z1 + ...·z2.
Tensor<float> interpolation_grid(Generator<float>& g,
                                 const DatasetSpec& spec,
                                 const std::vector<float>& z1,
                                 const std::vector<float>& z2,
                                 std::size_t steps,
                                 const std::vector<int>& classes);

}  // namespace ganssl::goodgan
