#include "ganssl/goodgan.hpp"

#include <algorithm>
#include <cmath>

namespace ganssl::goodgan {

bool GoodGanLossBreakdown::finite() const {
  return std::isfinite(d_loss) && std::isfinite(g_adversarial) &&
         std::isfinite(c_supervised) &&
         std::isfinite(c_adversarial_reinforce) &&
         std::isfinite(c_pseudo_pair);
}

PseudoSample sample_from_logits(const Tensor<float>& logits, Rng& rng) {
  const std::size_t b = logits.rows(), k = logits.cols();
  PseudoSample out;
  out.labels.resize(b);
  out.log_probs.resize(b);
  std::vector<float> s;
  for (std::size_t i = 0; i < b; ++i) {
    const float z = badgan::detail::row_lse_softmax(logits.row(i), k, s);
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = k - 1;
    for (std::size_t j = 0; j < k; ++j) {
      cum += s[j];
      if (u < cum) {
        pick = j;
        break;
      }
    }
    out.labels[i] = static_cast<int>(pick);
    out.log_probs[i] = logits.at(i, pick) - z;
  }
  return out;
}

GoodGanState goodgan_init(const TrainConfig& cfg, const DatasetSpec& spec) {
  NetworkOptions opts;
  Rng init = make_rng(cfg.seed, Stream::kInit);
  GoodGanState s;
  s.spec = spec;
  s.c = build_classifier<float>(spec, init, opts);
  s.g = build_generator<float>(spec, /*conditional=*/true, init, 100, opts);
  s.d = build_pair_discriminator<float>(spec, init, opts);
  s.opt_c = nn::Adam<float>(cfg.optimizer.lr, cfg.optimizer.beta1,
                            cfg.optimizer.beta2);
  s.opt_g = nn::Adam<float>(cfg.optimizer.lr, cfg.optimizer.beta1,
                            cfg.optimizer.beta2);
  s.opt_d = nn::Adam<float>(cfg.optimizer.lr, cfg.optimizer.beta1,
                            cfg.optimizer.beta2);
  s.reinforce.decay = cfg.baseline_decay;
  return s;
}

namespace {

std::vector<int> sample_uniform_labels(std::size_t n, std::size_t k,
                                       Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(k));
  return y;
}

}  // namespace

GoodGanLossBreakdown goodgan_train_step(GoodGanState& s,
                                        const data::LabeledSet& labeled,
                                        const Tensor<float>& unlabeled,
                                        const TrainConfig& cfg,
                                        std::size_t epoch, Rng& rng) {
  GoodGanLossBreakdown out;
  out.alpha = cfg.weights.alpha;
  const float alpha = static_cast<float>(cfg.weights.alpha);
  const std::size_t b = unlabeled.rows();
  const std::size_t k = s.spec.num_classes;

  // ---- discriminator update ----
  s.d.net.zero_grad();
  Tensor<float> ds;
  {
    const auto scores = s.d.score(labeled.images, labeled.labels, true, rng);
    ds = Tensor<float>(scores.shape);
    out.d_loss = bce_term(scores, true, 1.0f, &ds);
    s.d.net.backward(ds);
  }
  {
    const auto y = sample_uniform_labels(b, k, rng);
    const auto z = s.g.sample_z(b, rng);
    const auto xg = s.g.generate(z, &y, true, rng);
    const auto scores = s.d.score(xg, y, true, rng);
    ds = Tensor<float>(scores.shape);
    ds.fill(0.0f);
    out.d_loss += bce_term(scores, false, 1.0f - alpha, &ds);
    s.d.net.backward(ds);
  }
  {
    const auto logits = s.c.logits(unlabeled, false, rng);
    const auto pseudo = sample_from_logits(logits, rng);
    const auto scores = s.d.score(unlabeled, pseudo.labels, true, rng);
    ds = Tensor<float>(scores.shape);
    ds.fill(0.0f);
    out.d_loss += bce_term(scores, cfg.pseudo_pairs_as_real, alpha, &ds);
    s.d.net.backward(ds);
  }
  auto pd = s.d.net.params("d");
  s.opt_d.step(pd);

  // ---- generator update: non-saturating −log D ----
  s.d.net.zero_grad();
  s.g.net.zero_grad();
  {
    const auto y = sample_uniform_labels(b, k, rng);
    const auto z = s.g.sample_z(b, rng);
    const auto xg = s.g.generate(z, &y, true, rng);
    const auto scores = s.d.score(xg, y, true, rng);
    ds = Tensor<float>(scores.shape);
    ds.fill(0.0f);
    out.g_adversarial = generator_loss(scores, &ds);
    const auto din = s.d.net.backward(ds);
    s.g.net.backward(s.d.image_grad(din));
  }
  auto pg = s.g.net.params("g");
  s.opt_g.step(pg);

  // ---- classifier update ----
  s.c.net.zero_grad();
  Tensor<float> dlogits;
  {
    const auto logits = s.c.logits(labeled.images, true, rng);
    out.c_supervised =
        badgan::supervised_loss(logits, labeled.labels, &dlogits);
    s.c.net.backward(dlogits);
  }
  {
    // pseudo labels from C itself; reward log(1 − D(x, ŷ)) with D frozen
    const auto logits = s.c.logits(unlabeled, true, rng);
    const auto pseudo = sample_from_logits(logits, rng);
    const auto scores = s.d.score(unlabeled, pseudo.labels, false, rng);
    std::vector<float> rewards(b);
    double mean_reward = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const float sd = std::clamp(scores.data[i], 1e-6f, 1.0f - 1e-6f);
      rewards[i] = std::log(1.0f - sd);
      mean_reward += rewards[i];
    }
    mean_reward /= static_cast<double>(b);
    out.c_adversarial_reinforce = reinforce_surrogate(
        logits, pseudo.labels, rewards,
        static_cast<float>(s.reinforce.baseline), &dlogits);
    for (auto& v : dlogits.data) v *= static_cast<float>(cfg.weights.alpha_c);
    s.c.net.backward(dlogits);
    s.reinforce.observe(mean_reward);
  }
  if (epoch >= cfg.warmup_threshold) {
    const auto y = sample_uniform_labels(b, k, rng);
    const auto z = s.g.sample_z(b, rng);
    const auto xg = s.g.generate(z, &y, true, rng);
    const auto logits = s.c.logits(xg, true, rng);
    out.c_pseudo_pair = badgan::supervised_loss(logits, y, &dlogits);
    for (auto& v : dlogits.data) v *= static_cast<float>(cfg.weights.pseudo);
    s.c.net.backward(dlogits);
  }
  auto pc = s.c.net.params("c");
  s.opt_c.step(pc);
  return out;
}

Tensor<float> conditional_grid(Generator<float>& g, const DatasetSpec& spec,
                               const std::vector<int>& classes,
                               const Tensor<float>& latents) {
  if (!g.conditional)
    throw std::invalid_argument("conditional_grid needs a conditional G");
  const std::size_t l = latents.rows();
  const std::size_t h = spec.height, w = spec.width, c = spec.channels;
  Tensor<float> grid(
      std::vector<std::size_t>{c, classes.size() * h, l * w});
  Rng rng(0);  // eval mode draws nothing
  // one sample per forward pass so a cell's bytes never depend on what
  // else shares its batch (the interpolation grid bit-matches these)
  for (std::size_t row = 0; row < classes.size(); ++row) {
    for (std::size_t col = 0; col < l; ++col) {
      Tensor<float> z(1, g.z_dim);
      std::copy(latents.row(col), latents.row(col) + g.z_dim,
                z.data.begin());
      const std::vector<int> y{classes[row]};
      const auto imgs = g.generate(z, &y, false, rng);
      const float* img = imgs.row(0);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            grid.data[(ch * classes.size() * h + row * h + i) * (l * w) +
                      col * w + j] = img[(ch * h + i) * w + j];
    }
  }
  return grid;
}

Tensor<float> interpolation_grid(Generator<float>& g,
                                 const DatasetSpec& spec,
                                 const std::vector<float>& z1,
                                 const std::vector<float>& z2,
                                 std::size_t steps,
                                 const std::vector<int>& classes) {
  if (steps < 2)
    throw std::invalid_argument("interpolation_grid: steps must be >= 2");
  if (z1.size() != g.z_dim || z2.size() != g.z_dim)
    throw std::invalid_argument("interpolation_grid: latent size mismatch");
  const std::size_t h = spec.height, w = spec.width, c = spec.channels;
  const std::size_t kcols = classes.size();
  Tensor<float> grid(std::vector<std::size_t>{c, steps * h, kcols * w});
  Rng rng(0);
  for (std::size_t t = 0; t < steps; ++t) {
    const float frac = static_cast<float>(t) / static_cast<float>(steps - 1);
    for (std::size_t col = 0; col < kcols; ++col) {
      Tensor<float> z(1, g.z_dim);
      for (std::size_t j = 0; j < g.z_dim; ++j)
        z.at(0, j) = (1.0f - frac) * z1[j] + frac * z2[j];
      const std::vector<int> y{classes[col]};
      const auto imgs = g.generate(z, &y, false, rng);
      const float* img = imgs.row(0);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            grid.data[(ch * steps * h + t * h + i) * (kcols * w) + col * w +
                      j] = img[(ch * h + i) * w + j];
    }
  }
  return grid;
}

}  // namespace ganssl::goodgan
