#pragma once
// Complement-generator ("bad GAN") objective: a K-class discriminator
// with an implicit (K+1)th fake class whose logit is pinned at zero,
// feature matching for the generator, plus a pull-away entropy surrogate
// and a density penalty that pushes samples off the data manifold.
//
// The loss functions are templated so the finite-difference checks can
// run them in double; training itself runs float.

#include <cmath>
#include <memory>
#include <vector>

#include "ganssl/config.hpp"
#include "ganssl/datasets.hpp"
#include "ganssl/density.hpp"
#include "ganssl/networks.hpp"
#include "ganssl/tensor.hpp"

namespace ganssl::badgan {

namespace detail {
template <class T>
T softplus(T x) {
  if (x > T(30)) return x;
  if (x < T(-30)) return std::exp(x);
  return std::log1p(std::exp(x));
}
template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}
// logsumexp of a row plus its softmax (into s).
template <class T>
T row_lse_softmax(const T* l, std::size_t k, std::vector<T>& s) {
  T mx = l[0];
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, l[j]);
  T sum = T(0);
  s.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    s[j] = std::exp(l[j] - mx);
    sum += s[j];
  }
  for (std::size_t j = 0; j < k; ++j) s[j] /= sum;
  return mx + std::log(sum);
}
}  // namespace detail

// mean −log softmax_K(logits)[label]; optional gradient (accumulated
// into a fresh tensor, mean-normalized).
template <class T>
T supervised_loss(const Tensor<T>& logits, const std::vector<int>& labels,
                  Tensor<T>* dlogits = nullptr) {
  const std::size_t b = logits.rows(), k = logits.cols();
  if (labels.size() != b)
    throw std::invalid_argument("supervised_loss: label count mismatch");
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  T loss = T(0);
  std::vector<T> s;
  for (std::size_t i = 0; i < b; ++i) {
    const T* l = logits.row(i);
    const T z = detail::row_lse_softmax(l, k, s);
    loss += z - l[labels[i]];
    if (dlogits) {
      T* d = dlogits->row(i);
      for (std::size_t j = 0; j < k; ++j) d[j] = s[j] / T(b);
      d[labels[i]] -= T(1) / T(b);
    }
  }
  return loss / T(b);
}

// p(y = K+1 | x) with the fake logit pinned at zero:
// 1 / (1 + sum_k exp(l_k)) = sigmoid(-logsumexp(l)).
template <class T>
T implicit_fake_probability(const T* logits, std::size_t k) {
  std::vector<T> s;
  return detail::sigmoid(-detail::row_lse_softmax(logits, k, s));
}

// mean over real rows of −log(1 − p_fake) = softplus(−Z), Z = lse(l).
template <class T>
T unsupervised_real_loss(const Tensor<T>& logits,
                         Tensor<T>* dlogits = nullptr) {
  const std::size_t b = logits.rows(), k = logits.cols();
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  T loss = T(0);
  std::vector<T> s;
  for (std::size_t i = 0; i < b; ++i) {
    const T z = detail::row_lse_softmax(logits.row(i), k, s);
    loss += detail::softplus(-z);
    if (dlogits) {
      const T dz = -detail::sigmoid(-z) / T(b);  // −p_fake / b
      for (std::size_t j = 0; j < k; ++j) dlogits->at(i, j) = dz * s[j];
    }
  }
  return loss / T(b);
}

// mean over generated rows of −log p_fake = softplus(Z).
template <class T>
T unsupervised_fake_loss(const Tensor<T>& logits,
                         Tensor<T>* dlogits = nullptr) {
  const std::size_t b = logits.rows(), k = logits.cols();
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  T loss = T(0);
  std::vector<T> s;
  for (std::size_t i = 0; i < b; ++i) {
    const T z = detail::row_lse_softmax(logits.row(i), k, s);
    loss += detail::softplus(z);
    if (dlogits) {
      const T dz = detail::sigmoid(z) / T(b);  // (1 − p_fake) / b
      for (std::size_t j = 0; j < k; ++j) dlogits->at(i, j) = dz * s[j];
    }
  }
  return loss / T(b);
}

template <class T>
T unsupervised_loss(const Tensor<T>& unlabeled_logits,
                    const Tensor<T>& generated_logits,
                    Tensor<T>* d_unlabeled = nullptr,
                    Tensor<T>* d_generated = nullptr) {
  return unsupervised_real_loss(unlabeled_logits, d_unlabeled) +
         unsupervised_fake_loss(generated_logits, d_generated);
}

// ‖mean(real rows) − mean(generated rows)‖²; gradient w.r.t. the
// generated rows only (the real mean is the frozen target).
template <class T>
T feature_matching_loss(const Tensor<T>& real_f, const Tensor<T>& gen_f,
                        Tensor<T>* d_gen = nullptr) {
  const std::size_t d = real_f.cols();
  if (gen_f.cols() != d)
    throw std::invalid_argument("feature_matching: dimension mismatch");
  std::vector<T> diff(d, T(0));  // mean_gen − mean_real
  for (std::size_t i = 0; i < gen_f.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      diff[j] += gen_f.at(i, j) / T(gen_f.rows());
  for (std::size_t i = 0; i < real_f.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      diff[j] -= real_f.at(i, j) / T(real_f.rows());
  T loss = T(0);
  for (std::size_t j = 0; j < d; ++j) loss += diff[j] * diff[j];
  if (d_gen) {
    *d_gen = Tensor<T>(gen_f.shape);
    const T scale = T(2) / T(gen_f.rows());
    for (std::size_t i = 0; i < gen_f.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        d_gen->at(i, j) = scale * diff[j];
  }
  return loss;
}

// Pull-away term: (1/(B(B−1))) Σ_{i≠j} cos²(f_i, f_j) ∈ [0, 1].
// Minimizing it spreads the batch; stands in for −H[p_g].
template <class T>
T entropy_proxy(const Tensor<T>& f, Tensor<T>* df = nullptr) {
  const std::size_t b = f.rows(), d = f.cols();
  if (b < 2) throw std::invalid_argument("entropy_proxy: need batch >= 2");
  std::vector<T> norm(b);
  for (std::size_t i = 0; i < b; ++i) {
    T s = T(0);
    for (std::size_t j = 0; j < d; ++j) s += f.at(i, j) * f.at(i, j);
    norm[i] = std::max(std::sqrt(s), T(1e-12));
  }
  const T c = T(1) / (T(b) * T(b - 1));
  T loss = T(0);
  if (df) *df = Tensor<T>(f.shape);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      T dot = T(0);
      for (std::size_t t = 0; t < d; ++t) dot += f.at(i, t) * f.at(j, t);
      const T cos = dot / (norm[i] * norm[j]);
      loss += T(2) * c * cos * cos;  // ordered pairs (i,j) and (j,i)
      if (df) {
        // d cos/df_i = f_j/(n_i n_j) − cos · f_i/n_i²; both ordered
        // pairs contribute, hence the factor 4c·cos.
        const T w = T(4) * c * cos;
        for (std::size_t t = 0; t < d; ++t) {
          df->at(i, t) += w * (f.at(j, t) / (norm[i] * norm[j]) -
                               cos * f.at(i, t) / (norm[i] * norm[i]));
          df->at(j, t) += w * (f.at(i, t) / (norm[i] * norm[j]) -
                               cos * f.at(j, t) / (norm[j] * norm[j]));
        }
      }
    }
  }
  return loss;
}

// mean of log p(x) · I[log p(x) > eps]; the gate is a hard constant
// w.r.t. gradients. Gate mask exposed for the backward pass.
double density_penalty(const std::vector<double>& log_densities,
                       double epsilon_log,
                       std::vector<char>* gate = nullptr);

double density_penalty(const Tensor<float>& generated,
                       const density::DensityModel& model,
                       double epsilon_log);

// ---------------------------------------------------------------------------

struct BadGanLossBreakdown {
  double supervised = 0.0;
  double unsupervised = 0.0;
  double generator_fm = 0.0;
  double generator_entropy_proxy = 0.0;
  double generator_density_penalty = 0.0;

  double total_c() const { return supervised + unsupervised; }
  double total_g(const LossWeightConfig& w) const {
    return w.fm * generator_fm + w.proxy * generator_entropy_proxy +
           w.density * generator_density_penalty;
  }
  bool finite() const;
};

struct BadGanState {
  DatasetSpec spec;
  Classifier<float> c;
  Generator<float> g;
  nn::Adam<float> opt_c, opt_g;
  // frozen embedding classifier backing the kde-feature density model
  // (shared_ptr: the density model's embed closure captures it)
  std::shared_ptr<Classifier<float>> embed;
  density::DensityModel density;
  double epsilon_log = 0.0;
  bool density_enabled = false;
};

// Builds the nets, pre-trains + freezes the embedding classifier on the
// labeled subset, fits the density model on the unlabeled pool and
// calibrates the threshold.
BadGanState badgan_init(const TrainConfig& cfg, const DatasetSpec& spec,
                        const data::SSLSplit& split);

// One C update on supervised+unsupervised, then one G update on the
// three-term bad-generator loss; fresh G samples for each player.
BadGanLossBreakdown badgan_train_step(BadGanState& s,
                                      const data::LabeledSet& labeled,
                                      const Tensor<float>& unlabeled,
                                      const TrainConfig& cfg, Rng& rng);

// Plain supervised arm sharing the classifier architecture.
double supervised_train_step(Classifier<float>& c, nn::Adam<float>& opt,
                             const data::LabeledSet& labeled, Rng& rng);

// argmax-over-K accuracy in eval mode, batched.
double evaluate_accuracy(Classifier<float>& c, const data::LabeledSet& set,
                         std::size_t batch = 500);

}  // namespace ganssl::badgan
