// Layer-level gradient checks (double precision, central differences)
// plus determinism and mode-switch behavior of the stochastic layers.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "ganssl/nn.hpp"

using namespace ganssl;
using nn::Act;

namespace {

Tensor<double> randn(std::vector<std::size_t> shape, Rng& rng,
                     double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = rng.normal(0.0, scale);
  return t;
}

// Checks d(sum(r .* f(x)))/d(x and params) against central differences.
// Every forward uses a freshly seeded Rng so stochastic layers replay
// the same draws per evaluation.
void gradcheck(nn::Layer<double>& layer, const Tensor<double>& x,
               bool train = true, double tol = 1e-6) {
  Rng seed_rng(99);
  auto fwd = [&](const Tensor<double>& in) {
    Rng r(7);
    return layer.forward(in, train, r);
  };
  Tensor<double> y = fwd(x);
  Rng rr(5);
  Tensor<double> r = randn(y.shape, rr);

  std::vector<nn::ParamRef<double>> params;
  layer.collect_params("p", params);
  for (auto& p : params) p.grad->fill(0.0);
  // one more forward so caches match the backward below
  y = fwd(x);
  Tensor<double> dx = layer.backward(r);

  auto loss_at = [&](const Tensor<double>& in) {
    Tensor<double> out = fwd(in);
    double L = 0.0;
    for (std::size_t i = 0; i < out.count(); ++i) L += r.data[i] * out.data[i];
    return L;
  };

  const double eps = 1e-6;
  auto check_coord = [&](double* slot, double analytic) {
    const double save = *slot;
    *slot = save + eps;
    const double lp = loss_at(x);
    *slot = save - eps;
    const double lm = loss_at(x);
    *slot = save;
    const double numeric = (lp - lm) / (2 * eps);
    const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
    CHECK(std::abs(numeric - analytic) / denom < tol);
  };

  Tensor<double> xm = x;  // mutable copy for input perturbation
  auto loss_at_x = [&](double* slot, double analytic) {
    const double save = *slot;
    *slot = save + eps;
    const double lp = loss_at(xm);
    *slot = save - eps;
    const double lm = loss_at(xm);
    *slot = save;
    const double numeric = (lp - lm) / (2 * eps);
    const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
    CHECK(std::abs(numeric - analytic) / denom < tol);
  };

  // Sample a handful of coordinates from input and every parameter.
  Rng pick(3);
  for (int s = 0; s < 8; ++s) {
    const std::size_t i = pick.index(x.count());
    loss_at_x(&xm.data[i], dx.data[i]);
  }
  for (auto& p : params) {
    for (int s = 0; s < 6; ++s) {
      const std::size_t i = pick.index(p.value->count());
      check_coord(&p.value->data[i], p.grad->data[i]);
    }
  }
}

}  // namespace

TEST_CASE("dense gradcheck") {
  Rng rng(1);
  nn::Dense<double> layer(5, 4, rng);
  gradcheck(layer, randn({3, 5}, rng));
}

TEST_CASE("dense weight-norm gradcheck") {
  Rng rng(2);
  nn::DenseWN<double> layer(6, 3, rng);
  gradcheck(layer, randn({4, 6}, rng));
}

TEST_CASE("weight-norm identities") {
  // g = ||v|| reproduces the plain linear map; scaling v leaves w fixed.
  Rng rng(3);
  nn::NormalizedWeight<double> nw;
  nw.init({2, 2}, {0, 0, 1, 1}, 2, rng, 0.05);
  nw.v.data = {3.0, 4.0, 1.0, 0.0};
  nw.g.data = {5.0, 1.0};
  nw.materialize();
  CHECK(nw.w.data[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(nw.w.data[1] == doctest::Approx(4.0).epsilon(1e-9));
  auto w_before = nw.w.data;
  for (auto& v : nw.v.data) v *= 10.0;
  nw.materialize();
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(nw.w.data[i] == doctest::Approx(w_before[i]).epsilon(1e-9));
}

TEST_CASE("weight-norm hand value: v=[3,4], g=2, x=[1,0] -> 1.2") {
  Rng rng(4);
  nn::DenseWN<double> layer(2, 1, rng);
  std::vector<nn::ParamRef<double>> params;
  layer.collect_params("p", params);
  params[0].value->data = {3.0, 4.0};  // v
  params[1].value->data = {2.0};       // g
  params[2].value->data = {0.0};       // bias
  Tensor<double> x(1, 2);
  x.data = {1.0, 0.0};
  Rng r(0);
  Tensor<double> y = layer.forward(x, false, r);
  CHECK(y.data[0] == doctest::Approx(1.2).epsilon(1e-9));
}

TEST_CASE("activation gradchecks") {
  Rng rng(5);
  for (Act a : {Act::kRelu, Act::kLrelu, Act::kSoftplus, Act::kSigmoid}) {
    nn::Activation<double> layer(a);
    gradcheck(layer, randn({3, 7}, rng), true, 1e-5);
  }
}

TEST_CASE("batch-norm gradcheck and eval determinism") {
  Rng rng(6);
  nn::BatchNorm<double> layer(4);
  gradcheck(layer, randn({6, 4}, rng), true, 1e-5);

  // channel mode (spatial > 1)
  nn::BatchNorm<double> bn2(3, 4);
  gradcheck(bn2, randn({5, 12}, rng), true, 1e-5);
}

TEST_CASE("gaussian noise: sigma=0 and eval mode are identity") {
  Rng rng(7);
  Tensor<double> x = randn({4, 5}, rng);
  nn::GaussianNoise<double> zero(0.0);
  nn::GaussianNoise<double> big(0.5);
  Rng r1(1), r2(1);
  CHECK(zero.forward(x, true, r1).data == x.data);
  CHECK(big.forward(x, false, r2).data == x.data);
}

TEST_CASE("gaussian noise: sample variance near sigma^2") {
  Rng rng(8);
  const double sigma = 0.7;
  nn::GaussianNoise<double> layer(sigma);
  Tensor<double> x({100000});
  Rng r(123);
  Tensor<double> y = layer.forward(x, true, r);
  double var = 0.0;
  for (auto v : y.data) var += v * v;
  var /= y.count();
  CHECK(std::abs(var - sigma * sigma) / (sigma * sigma) < 0.02);
}

TEST_CASE("dropout gradcheck (mask replayed by seed)") {
  Rng rng(9);
  nn::Dropout<double> layer(0.5);
  gradcheck(layer, randn({3, 8}, rng));
}

TEST_CASE("conv gradcheck") {
  Rng rng(10);
  nn::Conv2dWN<double> layer(2, 3, 5, 5, 3, 1, 1, rng);
  gradcheck(layer, randn({2, 2 * 5 * 5}, rng), true, 1e-5);
  nn::Conv2dWN<double> strided(2, 3, 6, 6, 3, 2, 1, rng);
  gradcheck(strided, randn({2, 2 * 6 * 6}, rng), true, 1e-5);
}

TEST_CASE("deconv gradcheck, both weight modes") {
  Rng rng(11);
  nn::Deconv2d<double> plain(3, 2, 4, 4, 5, 2, 2, 1, false, rng);
  CHECK(plain.out_h() == 8);
  gradcheck(plain, randn({2, 3 * 4 * 4}, rng), true, 1e-5);
  nn::Deconv2d<double> wn(3, 2, 4, 4, 5, 2, 2, 1, true, rng);
  gradcheck(wn, randn({2, 3 * 4 * 4}, rng), true, 1e-5);
}

TEST_CASE("global pool gradcheck") {
  Rng rng(12);
  nn::GlobalAvgPool<double> layer(3, 16);
  gradcheck(layer, randn({2, 48}, rng));
}

TEST_CASE("small net end-to-end gradcheck through backward_from") {
  Rng rng(13);
  nn::Net<double> net;
  net.add<nn::DenseWN<double>>(4, 6, rng);
  net.add<nn::Activation<double>>(Act::kLrelu);
  net.add<nn::DenseWN<double>>(6, 3, rng);

  Tensor<double> x = randn({5, 4}, rng);
  auto fwd = [&](const Tensor<double>& in) {
    Rng r(7);
    return net.forward(in, true, r);
  };
  Tensor<double> y = fwd(x);
  Rng rr(15);
  Tensor<double> r = randn(y.shape, rr);

  net.zero_grad();
  y = fwd(x);
  Tensor<double> dx = net.backward(r);

  auto loss_at = [&](const Tensor<double>& in) {
    Tensor<double> out = fwd(in);
    double L = 0.0;
    for (std::size_t i = 0; i < out.count(); ++i) L += r.data[i] * out.data[i];
    return L;
  };
  const double eps = 1e-6;
  Tensor<double> xm = x;
  Rng pick(3);
  for (int s = 0; s < 10; ++s) {
    const std::size_t i = pick.index(x.count());
    const double save = xm.data[i];
    xm.data[i] = save + eps;
    const double lp = loss_at(xm);
    xm.data[i] = save - eps;
    const double lm = loss_at(xm);
    xm.data[i] = save;
    CHECK(std::abs((lp - lm) / (2 * eps) - dx.data[i]) < 1e-5);
  }

  // two eval passes are bit-identical
  Rng e1(0), e2(0);
  auto a = net.forward(x, false, e1);
  auto b = net.forward(x, false, e2);
  CHECK(a.data == b.data);
}

TEST_CASE("adam converges on a quadratic") {
  Rng rng(14);
  Tensor<double> p({10});
  Tensor<double> g({10});
  for (auto& v : p.data) v = rng.normal(0.0, 1.0);
  std::vector<nn::ParamRef<double>> params{{"p", &p, &g}};
  nn::Adam<double> opt(0.05, 0.9, 0.999);
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < 10; ++i) g.data[i] = 2.0 * p.data[i];
    opt.step(params);
  }
  for (auto v : p.data) CHECK(std::abs(v) < 1e-3);
}
