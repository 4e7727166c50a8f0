// Backend equivalence: AVX2 and BLAS kernels against the scalar
// reference, over randomized shapes including ragged tails.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ganssl/kernels.hpp"

using namespace ganssl::kern;

namespace {

std::vector<float> rand_vec(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_rel_err(const std::vector<float>& a, const std::vector<float>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(1.0, std::abs(double(a[i])));
    worst = std::max(worst, std::abs(double(a[i]) - double(b[i])) / denom);
  }
  return worst;
}

void check_gemm(const KernelTable& t, bool ta, bool tb, std::size_t m,
                std::size_t n, std::size_t k, std::mt19937& rng) {
  const auto a = rand_vec(m * k, rng);
  const auto b = rand_vec(k * n, rng);
  auto c_ref = rand_vec(m * n, rng);
  auto c_alt = c_ref;
  const std::size_t lda = ta ? m : k;
  const std::size_t ldb = tb ? k : n;
  scalar_table().gemm(ta, tb, m, n, k, 0.7f, a.data(), lda, b.data(), ldb,
                      0.3f, c_ref.data(), n);
  t.gemm(ta, tb, m, n, k, 0.7f, a.data(), lda, b.data(), ldb, 0.3f,
         c_alt.data(), n);
  CHECK(max_rel_err(c_ref, c_alt) < 2e-4);
}

void check_table(const KernelTable& t) {
  std::mt19937 rng(42);
  const std::size_t shapes[][3] = {{1, 1, 1},   {3, 5, 7},    {8, 8, 8},
                                   {17, 33, 9}, {64, 100, 50}, {5, 23, 128}};
  for (const auto& s : shapes)
    for (bool ta : {false, true})
      for (bool tb : {false, true}) check_gemm(t, ta, tb, s[0], s[1], s[2], rng);

  for (std::size_t n : {1u, 7u, 8u, 100u, 1000u}) {
    auto x = rand_vec(n, rng);
    auto y0 = rand_vec(n, rng);
    auto y1 = y0;
    scalar_table().axpy(n, 1.5f, x.data(), y0.data());
    t.axpy(n, 1.5f, x.data(), y1.data());
    CHECK(max_rel_err(y0, y1) < 1e-5);

    auto z = rand_vec(n, rng);
    CHECK(std::abs(scalar_table().dot(n, x.data(), z.data()) -
                   t.dot(n, x.data(), z.data())) < 1e-3 * n);
    CHECK(std::abs(scalar_table().sum(n, x.data()) - t.sum(n, x.data())) <
          1e-4 * n);

    auto s0 = x, s1 = x;
    scalar_table().scale(n, -0.3f, s0.data());
    t.scale(n, -0.3f, s1.data());
    CHECK(max_rel_err(s0, s1) < 1e-6);

    std::vector<float> l0(n), l1(n);
    scalar_table().lrelu_fwd(n, 0.2f, x.data(), l0.data());
    t.lrelu_fwd(n, 0.2f, x.data(), l1.data());
    CHECK(max_rel_err(l0, l1) == 0.0);

    auto dy = rand_vec(n, rng);
    std::vector<float> d0(n), d1(n);
    scalar_table().lrelu_bwd(n, 0.2f, x.data(), dy.data(), d0.data());
    t.lrelu_bwd(n, 0.2f, x.data(), dy.data(), d1.data());
    CHECK(max_rel_err(d0, d1) == 0.0);

    auto p0 = rand_vec(n, rng);
    auto p1 = p0;
    auto g = rand_vec(n, rng);
    std::vector<float> m0(n, 0.1f), v0(n, 0.2f), m1 = m0, v1 = v0;
    scalar_table().adam(n, p0.data(), g.data(), m0.data(), v0.data(), 0.5f,
                        0.999f, 1e-8f, 3e-4f);
    t.adam(n, p1.data(), g.data(), m1.data(), v1.data(), 0.5f, 0.999f, 1e-8f,
           3e-4f);
    CHECK(max_rel_err(p0, p1) < 1e-6);
  }
}

}  // namespace

TEST_CASE("avx2 backend matches scalar reference") {
  if (!avx2_available()) return;
  check_table(avx2_table());
}

TEST_CASE("blas backend matches scalar reference") {
  check_table(blas_table());
}

TEST_CASE("active backend is one of the known tables") {
  const std::string name = active_backend_name();
  CHECK((name == "scalar" || name == "avx2" || name == "blas"));
}
