// Architecture audit: shapes, parameter counts, conditioning liveness,
// and forward determinism of the builder-produced networks.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "ganssl/networks.hpp"

using namespace ganssl;

namespace {

std::size_t param_count(nn::Net<float>& net) {
  std::size_t n = 0;
  for (const auto& p : net.params("x")) n += p.value->count();
  return n;
}

}  // namespace

TEST_CASE("dataset specs") {
  CHECK(DatasetSpec::mnist().dim() == 784);
  CHECK(DatasetSpec::mnist().num_classes == 10);
  CHECK(DatasetSpec::cifar10().dim() == 3072);
  CHECK(DatasetSpec::svhn().is_conv());
  CHECK_FALSE(DatasetSpec::mnist().is_conv());
  CHECK(DatasetSpec::synthetic_moons().dim() == 2);
  CHECK(DatasetSpec::synthetic_gaussians(4).num_classes == 4);
  CHECK(DatasetSpec::by_name("mnist").name == "mnist");
  CHECK_THROWS(DatasetSpec::by_name("imagenet"));
}

TEST_CASE("mnist generator: shape, range, hand-counted params") {
  const auto spec = DatasetSpec::mnist();
  NetworkOptions opt;
  Rng init(1);
  auto g = build_generator<float>(spec, false, init, 100, opt);
  Rng rng(2);
  const auto z = g.sample_z(5, rng);
  CHECK(z.rows() == 5);
  CHECK(z.cols() == 100);
  auto x = g.generate(z, nullptr, true, rng);
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 784);
  for (float v : x.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  // dense 100->500 (50500) + bn (1000) + 2x[dense 500->500 (250500) +
  // bn (1000)] + wn-dense 500->784 (392000 + 784 + 784)
  CHECK(param_count(g.net) == 948068);
}

TEST_CASE("conditional generator: label input is live") {
  const auto spec = DatasetSpec::mnist();
  NetworkOptions opt;
  Rng init(1);
  auto g = build_generator<float>(spec, true, init, 100, opt);
  Rng rng(2);
  const auto z = g.sample_z(1, rng);
  std::vector<int> y0{0}, y7{7};
  Rng r1(3), r2(3);
  const auto a = g.generate(z, &y0, false, r1);
  const auto b = g.generate(z, &y7, false, r2);
  double diff = 0;
  for (std::size_t i = 0; i < a.count(); ++i)
    diff += std::abs(double(a.data[i]) - double(b.data[i]));
  CHECK(diff > 1e-3);  // changing only the label must change the image
  CHECK_THROWS(g.generate(z, nullptr, false, rng));  // labels required
}

TEST_CASE("classifier: logits shape, feature tap, eval determinism") {
  for (const auto* name : {"mnist", "synthetic-moons"}) {
    const auto spec = DatasetSpec::by_name(name);
    NetworkOptions opt;
    Rng init(4);
    auto c = build_classifier<float>(spec, init, opt);
    Tensor<float> x(3, spec.dim());
    Rng rng(5);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform());
    Tensor<float> f;
    Rng r1(6);
    const auto logits = c.logits(x, false, r1, &f);
    CHECK(logits.rows() == 3);
    CHECK(logits.cols() == spec.num_classes);
    CHECK(f.rows() == 3);
    CHECK(f.cols() == c.feature_dim);
    Rng r2(7);  // eval mode ignores the rng entirely
    const auto again = c.logits(x, false, r2);
    CHECK(std::memcmp(logits.data.data(), again.data.data(),
                      logits.count() * sizeof(float)) == 0);
  }
}

TEST_CASE("classifier train mode is stochastic, eval is not") {
  const auto spec = DatasetSpec::mnist();
  NetworkOptions opt;
  Rng init(8);
  auto c = build_classifier<float>(spec, init, opt);
  Tensor<float> x(2, 784);
  Rng rng(9);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform());
  Rng ra(10), rb(11);
  const auto la = c.logits(x, true, ra);
  const auto lb = c.logits(x, true, rb);
  double diff = 0;
  for (std::size_t i = 0; i < la.count(); ++i)
    diff += std::abs(double(la.data[i]) - double(lb.data[i]));
  CHECK(diff > 1e-6);
}

TEST_CASE("pair discriminator: input packing and score range") {
  const auto spec = DatasetSpec::mnist();
  NetworkOptions opt;
  Rng init(12);
  auto d = build_pair_discriminator<float>(spec, init, opt);
  Tensor<float> x(4, 784);
  Rng rng(13);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform());
  std::vector<int> y{0, 3, 9, 5};
  const auto in = d.make_input(x, y);
  CHECK(in.cols() == 784 + 10);
  CHECK(in.at(1, 784 + 3) == 1.0f);
  CHECK(in.at(1, 784 + 4) == 0.0f);
  const auto s = d.score(x, y, false, rng);
  CHECK(s.rows() == 4);
  CHECK(s.cols() == 1);
  for (float v : s.data) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("conv pair discriminator uses label planes") {
  const auto spec = DatasetSpec::cifar10();
  NetworkOptions opt;
  Rng init(14);
  auto d = build_pair_discriminator<float>(spec, init, opt);
  Tensor<float> x(1, 3072);
  std::vector<int> y{2};
  const auto in = d.make_input(x, y);
  CHECK(in.cols() == (3 + 10) * 32 * 32);
  // plane for class 2 is all ones, neighbours all zero
  const std::size_t sp = 32 * 32;
  CHECK(in.data[(3 + 2) * sp] == 1.0f);
  CHECK(in.data[(3 + 2) * sp + sp - 1] == 1.0f);
  CHECK(in.data[(3 + 1) * sp] == 0.0f);
  CHECK(in.data[(3 + 3) * sp] == 0.0f);
}

TEST_CASE("same init seed, same parameters") {
  const auto spec = DatasetSpec::mnist();
  NetworkOptions opt;
  Rng a(42), b(42);
  auto g1 = build_generator<float>(spec, false, a, 100, opt);
  auto g2 = build_generator<float>(spec, false, b, 100, opt);
  const auto p1 = g1.net.params("g"), p2 = g2.net.params("g");
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK(std::memcmp(p1[i].value->data.data(), p2[i].value->data.data(),
                      p1[i].value->count() * sizeof(float)) == 0);
}
