// Good GAN: BCE terms, REINFORCE properties, pseudo-label sampling,
// warmup gating, and the image-grid helpers.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ganssl/datasets.hpp"
#include "ganssl/goodgan.hpp"

using namespace ganssl;

TEST_CASE("bce terms: values and gradient direction") {
  Tensor<double> s(3, std::size_t{1});
  s.data = {0.9, 0.5, 0.1};
  // target real: -mean log s
  const double lr = goodgan::bce_term(s, true, 1.0);
  CHECK(lr == doctest::Approx(-(std::log(0.9) + std::log(0.5) +
                                std::log(0.1)) / 3.0));
  // gradient of -log s is negative: pushing scores up reduces the loss
  Tensor<double> ds(s.shape);
  goodgan::bce_term(s, true, 1.0, &ds);
  for (double v : ds.data) CHECK(v < 0.0);
  // weight scales both loss and gradient
  Tensor<double> ds2(s.shape);
  const double half = goodgan::bce_term(s, true, 0.5, &ds2);
  CHECK(half == doctest::Approx(0.5 * lr));
  CHECK(ds2.data[0] == doctest::Approx(0.5 * ds.data[0]));
}

TEST_CASE("discriminator loss: alpha mixes pseudo vs generated") {
  Tensor<double> r(2, std::size_t{1}), g(2, std::size_t{1}),
      p(2, std::size_t{1});
  r.fill(0.8);
  g.fill(0.3);
  p.fill(0.4);
  Tensor<double> dr(r.shape), dg(g.shape), dp(p.shape);
  // alpha = 0: pseudo pairs carry no weight
  goodgan::discriminator_loss(r, g, p, 0.0, &dr, &dg, &dp);
  for (double v : dp.data) CHECK(v == 0.0);
  for (double v : dg.data) CHECK(v != 0.0);
  // alpha = 1: generated pairs carry no weight
  dr.fill(0); dg.fill(0); dp.fill(0);
  goodgan::discriminator_loss(r, g, p, 1.0, &dr, &dg, &dp);
  for (double v : dg.data) CHECK(v == 0.0);
  for (double v : dp.data) CHECK(v != 0.0);
  CHECK_THROWS(goodgan::discriminator_loss(r, g, p, 1.5));
  // pseudo_as_real flips the pseudo target: gradient sign flips
  dp.fill(0);
  goodgan::discriminator_loss<double>(r, g, p, 1.0, nullptr, nullptr, &dp, false);
  const double as_fake = dp.data[0];
  dp.fill(0);
  goodgan::discriminator_loss<double>(r, g, p, 1.0, nullptr, nullptr, &dp, true);
  CHECK(as_fake * dp.data[0] < 0.0);
}

TEST_CASE("reinforce surrogate gradient sums to zero per row") {
  Rng rng(1);
  Tensor<double> logits(4, 5);
  for (auto& v : logits.data) v = rng.normal();
  std::vector<int> sampled{0, 2, 4, 1};
  std::vector<double> rewards{1.0, -0.5, 0.3, 2.0};
  Tensor<double> d;
  goodgan::reinforce_surrogate(logits, sampled, rewards, 0.2, &d);
  // (delta - softmax) sums to zero over classes
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += d.at(i, j);
    CHECK(std::abs(s) < 1e-12);
  }
  // zero advantage -> zero gradient
  Tensor<double> d2;
  goodgan::reinforce_surrogate(logits, sampled, {0.2, 0.2, 0.2, 0.2}, 0.2,
                               &d2);
  for (double v : d2.data) CHECK(v == 0.0);
  CHECK_THROWS(goodgan::reinforce_surrogate(logits, {0, 1}, rewards, 0.0));
}

TEST_CASE("ema baseline estimator") {
  goodgan::ReinforceEstimator est;
  est.decay = 0.9;
  est.observe(1.0);
  CHECK(est.baseline == doctest::Approx(1.0));  // first observation primes
  est.observe(0.0);
  CHECK(est.baseline == doctest::Approx(0.9));
  est.observe(0.9);
  CHECK(est.baseline == doctest::Approx(0.81 + 0.09));
}

TEST_CASE("sample_from_logits tracks the softmax distribution") {
  Tensor<float> logits(std::size_t{1}, std::size_t{3});
  logits.data = {1.0f, 0.0f, -1.0f};
  double z = std::exp(1.0) + 1.0 + std::exp(-1.0);
  const double p0 = std::exp(1.0) / z;
  Rng rng(9);
  std::size_t hits = 0;
  constexpr int N = 20000;
  for (int t = 0; t < N; ++t) {
    const auto s = goodgan::sample_from_logits(logits, rng);
    REQUIRE(s.labels.size() == 1);
    if (s.labels[0] == 0) ++hits;
    // retained log-prob matches the softmax
    const double expect =
        logits.data[s.labels[0]] - std::log(z);
    CHECK(s.log_probs[0] == doctest::Approx(expect).epsilon(1e-5));
  }
  CHECK(std::abs(double(hits) / N - p0) < 0.01);
}

TEST_CASE("warmup gates the pseudo-pair term") {
  TrainConfig cfg;
  cfg.model = "goodgan";
  cfg.dataset = "synthetic-gaussians";
  cfg.labeled_count = 16;
  cfg.batch_size = 20;
  cfg.warmup_threshold = 5;
  const auto spec = DatasetSpec::by_name(cfg.dataset);
  const auto ds = data::make_synthetic(spec, 60, 0.1, 0);
  const auto split = data::stratified_select(ds, cfg.labeled_count, 0);
  auto s = goodgan::goodgan_init(cfg, spec);
  CHECK(s.g.conditional);

  data::BatchStream stream(split, cfg.batch_size, 0, 0);
  data::LabeledSet lb;
  Tensor<float> ub;
  REQUIRE(stream.next(&lb, &ub));
  Rng r1(3);
  const auto before = goodgan::goodgan_train_step(s, lb, ub, cfg, 0, r1);
  CHECK(before.finite());
  CHECK(before.c_pseudo_pair == 0.0);  // epoch 0 < threshold 5
  Rng r2(3);
  const auto after = goodgan::goodgan_train_step(s, lb, ub, cfg, 5, r2);
  CHECK(after.finite());
  CHECK(after.c_pseudo_pair > 0.0);  // at the threshold the term is live
  CHECK(after.total_c(cfg.weights) ==
        doctest::Approx(after.c_supervised +
                        cfg.weights.alpha_c * after.c_adversarial_reinforce +
                        cfg.weights.pseudo * after.c_pseudo_pair));
}

TEST_CASE("grid helpers tile classes x latents") {
  const auto spec = DatasetSpec::synthetic_gaussians(3);
  NetworkOptions opts;
  Rng init(4);
  auto g = build_generator<float>(spec, true, init, 10, opts);
  std::vector<int> classes{0, 1, 2};
  Rng zr(5);
  const auto latents = g.sample_z(4, zr);
  const auto grid = goodgan::conditional_grid(g, spec, classes, latents);
  REQUIRE(grid.shape.size() == 3);
  CHECK(grid.shape[0] == spec.channels);
  CHECK(grid.shape[1] == 3 * spec.height);  // rows = classes
  CHECK(grid.shape[2] == 4 * spec.width);   // cols = latents
  // a cell is exactly the per-sample eval-mode generation
  Tensor<float> z1(std::size_t{1}, std::size_t{10});
  std::copy(latents.row(2), latents.row(2) + 10, z1.data.begin());
  std::vector<int> y{1};
  Rng er(0);
  const auto single = g.generate(z1, &y, false, er);
  // grid cell (class 1, latent 2), spec is 1x1x2
  CHECK(grid.data[1 * (4 * 2) + 2 * 2] == single.data[0]);
  CHECK(grid.data[1 * (4 * 2) + 2 * 2 + 1] == single.data[1]);

  std::vector<float> za(latents.row(0), latents.row(0) + 10);
  std::vector<float> zb(latents.row(3), latents.row(3) + 10);
  const auto interp =
      goodgan::interpolation_grid(g, spec, za, zb, 5, classes);
  CHECK(interp.shape[1] == 5 * spec.height);  // rows = steps
  CHECK(interp.shape[2] == 3 * spec.width);   // cols = classes
  // first interpolation row bit-matches the conditional grid's first
  // latent column
  for (int k = 0; k < 3; ++k) {
    CHECK(std::memcmp(&interp.data[0 * (3 * 2) + k * 2],
                      &grid.data[k * (4 * 2) + 0 * 2],
                      2 * sizeof(float)) == 0);
  }
}
