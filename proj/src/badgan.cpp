#include "ganssl/badgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ganssl::badgan {

double density_penalty(const std::vector<double>& log_densities,
                       double epsilon_log, std::vector<char>* gate) {
  if (log_densities.empty())
    throw std::invalid_argument("density_penalty: empty batch");
  if (gate) gate->assign(log_densities.size(), 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < log_densities.size(); ++i) {
    if (log_densities[i] > epsilon_log) {
      sum += log_densities[i];
      if (gate) (*gate)[i] = 1;
    }
  }
  return sum / static_cast<double>(log_densities.size());
}

double density_penalty(const Tensor<float>& generated,
                       const density::DensityModel& model,
                       double epsilon_log) {
  return density_penalty(density::log_density(model, generated), epsilon_log);
}

bool BadGanLossBreakdown::finite() const {
  return std::isfinite(supervised) && std::isfinite(unsupervised) &&
         std::isfinite(generator_fm) &&
         std::isfinite(generator_entropy_proxy) &&
         std::isfinite(generator_density_penalty);
}

namespace {

// batched log-density over a large set (keeps classifier activations
// bounded when embedding tens of thousands of rows)
std::vector<double> chunked_log_density(const density::DensityModel& model,
                                        const Tensor<float>& set,
                                        std::size_t chunk = 1000) {
  std::vector<double> all;
  all.reserve(set.rows());
  for (std::size_t start = 0; start < set.rows(); start += chunk) {
    const std::size_t n = std::min(chunk, set.rows() - start);
    Tensor<float> part(n, set.cols());
    std::copy(set.row(start), set.row(start) + n * set.cols(),
              part.data.begin());
    const auto lp = density::log_density(model, part);
    all.insert(all.end(), lp.begin(), lp.end());
  }
  return all;
}

}  // namespace

BadGanState badgan_init(const TrainConfig& cfg, const DatasetSpec& spec,
                        const data::SSLSplit& split) {
  NetworkOptions opts;
  Rng init = make_rng(cfg.seed, Stream::kInit);
  BadGanState s;
  s.spec = spec;
  s.c = build_classifier<float>(spec, init, opts);
  s.g = build_generator<float>(spec, /*conditional=*/false, init, 100, opts);
  s.opt_c = nn::Adam<float>(cfg.optimizer.lr, cfg.optimizer.beta1,
                        cfg.optimizer.beta2);
  s.opt_g = nn::Adam<float>(cfg.optimizer.lr, cfg.optimizer.beta1,
                        cfg.optimizer.beta2);
  s.density_enabled = cfg.weights.density != 0.0;
  if (!s.density_enabled) return s;

  density::EmbedFn embed;
  if (cfg.density.kind == "kde-feature") {
    // pre-train a copy of the classifier on the labeled subset with the
    // plain supervised loss, then freeze it as the embedding
    s.embed = std::make_shared<Classifier<float>>(
        build_classifier<float>(spec, init, opts));
    nn::Adam<float> opt(cfg.optimizer.lr, cfg.optimizer.beta1,
                    cfg.optimizer.beta2);
    Rng rng(Rng::mix(cfg.seed, 0xDE5117), 0);
    const std::size_t bs =
        std::min<std::size_t>(cfg.batch_size, split.labeled.count());
    for (std::size_t e = 0; e < cfg.density.pretrain_epochs; ++e) {
      std::vector<std::size_t> order(split.labeled.count());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (std::size_t b = 0; b + bs <= order.size(); b += bs) {
        data::LabeledSet batch;
        batch.images = Tensor<float>(bs, split.labeled.images.cols());
        batch.labels.resize(bs);
        for (std::size_t i = 0; i < bs; ++i) {
          const auto idx = order[b + i];
          std::copy(split.labeled.images.row(idx),
                    split.labeled.images.row(idx) +
                        split.labeled.images.cols(),
                    batch.images.row(i));
          batch.labels[i] = split.labeled.labels[idx];
        }
        supervised_train_step(*s.embed, opt, batch, rng);
      }
    }
    auto clf = s.embed;
    embed = [clf](const Tensor<float>& x) {
      Rng r(0);
      Tensor<float> f;
      clf->logits(x, /*train=*/false, r, &f);
      return f;
    };
  }
  s.density = density::density_fit(split.unlabeled, cfg.density.kind,
                                   cfg.density.bandwidth,
                                   cfg.density.max_reference, cfg.seed,
                                   std::move(embed));
  s.epsilon_log = density::percentile_lower_nearest(
      chunked_log_density(s.density, split.unlabeled),
      cfg.density.percentile_q);
  return s;
}

BadGanLossBreakdown badgan_train_step(BadGanState& s,
                                      const data::LabeledSet& labeled,
                                      const Tensor<float>& unlabeled,
                                      const TrainConfig& cfg, Rng& rng) {
  BadGanLossBreakdown out;
  const std::size_t bg = unlabeled.rows();  // generated batch size

  // ---- discriminator/classifier update: Eq. 1 ----
  s.c.net.zero_grad();
  Tensor<float> dlogits;
  {
    const auto logits = s.c.logits(labeled.images, true, rng);
    out.supervised = supervised_loss(logits, labeled.labels, &dlogits);
    s.c.net.backward(dlogits);
  }
  {
    const auto logits = s.c.logits(unlabeled, true, rng);
    out.unsupervised = unsupervised_real_loss(logits, &dlogits);
    s.c.net.backward(dlogits);
  }
  {
    const auto z = s.g.sample_z(bg, rng);
    const auto xg = s.g.generate(z, nullptr, true, rng);
    const auto logits = s.c.logits(xg, true, rng);
    out.unsupervised += unsupervised_fake_loss(logits, &dlogits);
    s.c.net.backward(dlogits);
  }
  auto pc = s.c.net.params("c");
  s.opt_c.step(pc);

  // ---- generator update: Eq. 3 (fm + entropy proxy + density) ----
  s.c.net.zero_grad();
  s.g.net.zero_grad();
  Tensor<float> f_real;
  (void)s.c.net.forward_tapped(unlabeled, true, rng, s.c.tap, &f_real);
  const auto z = s.g.sample_z(bg, rng);
  const auto xg = s.g.generate(z, nullptr, true, rng);
  Tensor<float> f_gen;
  (void)s.c.logits(xg, true, rng, &f_gen);

  Tensor<float> dfm, dproxy;
  out.generator_fm = feature_matching_loss(f_real, f_gen, &dfm);
  out.generator_entropy_proxy = entropy_proxy(f_gen, &dproxy);
  Tensor<float> df(f_gen.shape);
  for (std::size_t i = 0; i < df.count(); ++i)
    df.data[i] = static_cast<float>(cfg.weights.fm) * dfm.data[i] +
                 static_cast<float>(cfg.weights.proxy) * dproxy.data[i];
  Tensor<float> dx = s.c.net.backward_from(s.c.tap + 1, df);

  if (s.density_enabled) {
    std::vector<double> lp;
    std::vector<char> gate;
    if (s.embed) {
      s.embed->net.zero_grad();
      Tensor<float> femb;
      (void)s.embed->net.forward_tapped(xg, false, rng, s.embed->tap, &femb);
      Tensor<float> gfe(femb.shape);
      lp = density::log_density_grad(s.density, femb, gfe);
      out.generator_density_penalty = density_penalty(lp, s.epsilon_log,
                                                      &gate);
      for (std::size_t i = 0; i < femb.rows(); ++i) {
        const float w = gate[i] ? 1.0f / static_cast<float>(bg) : 0.0f;
        for (std::size_t j = 0; j < femb.cols(); ++j)
          gfe.at(i, j) *= w;
      }
      const Tensor<float> dxd =
          s.embed->net.backward_from(s.embed->tap + 1, gfe);
      for (std::size_t i = 0; i < dx.count(); ++i)
        dx.data[i] += static_cast<float>(cfg.weights.density) * dxd.data[i];
    } else {
      Tensor<float> gfe(xg.shape);
      lp = density::log_density_grad(s.density, xg, gfe);
      out.generator_density_penalty = density_penalty(lp, s.epsilon_log,
                                                      &gate);
      for (std::size_t i = 0; i < xg.rows(); ++i) {
        const float w = gate[i]
                            ? static_cast<float>(cfg.weights.density) / bg
                            : 0.0f;
        for (std::size_t j = 0; j < xg.cols(); ++j)
          dx.at(i, j) += w * gfe.at(i, j);
      }
    }
  }
  s.g.net.backward(dx);
  auto pg = s.g.net.params("g");
  s.opt_g.step(pg);
  return out;
}

double supervised_train_step(Classifier<float>& c, nn::Adam<float>& opt,
                             const data::LabeledSet& labeled, Rng& rng) {
  c.net.zero_grad();
  Tensor<float> dlogits;
  const auto logits = c.logits(labeled.images, true, rng);
  const float loss = supervised_loss(logits, labeled.labels, &dlogits);
  c.net.backward(dlogits);
  auto p = c.net.params("c");
  opt.step(p);
  return loss;
}

double evaluate_accuracy(Classifier<float>& c, const data::LabeledSet& set,
                         std::size_t batch) {
  Rng rng(0);  // eval mode draws nothing
  std::size_t correct = 0;
  const std::size_t d = set.images.cols();
  for (std::size_t start = 0; start < set.count(); start += batch) {
    const std::size_t n = std::min(batch, set.count() - start);
    Tensor<float> x(n, d);
    std::copy(set.images.row(start), set.images.row(start) + n * d,
              x.data.begin());
    const auto logits = c.logits(x, false, rng);
    for (std::size_t i = 0; i < n; ++i) {
      const float* l = logits.row(i);
      const auto k = logits.cols();
      const std::size_t pred =
          std::max_element(l, l + k) - l;
      if (static_cast<int>(pred) == set.labels[start + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(set.count());
}

}  // namespace ganssl::badgan
