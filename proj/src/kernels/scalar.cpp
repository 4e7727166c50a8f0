// Scalar reference kernels. Every other backend is tested against these.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ganssl/kernels.hpp"

namespace ganssl::kern {
namespace {

inline const float* row_ptr(const float* a, std::size_t ld, std::size_t i) {
  return a + i * ld;
}

void gemm_scalar(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, float alpha, const float* a, std::size_t lda,
                 const float* b, std::size_t ldb, float beta, float* c,
                 std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    if (beta == 0.0f) {
      std::fill(crow, crow + n, 0.0f);
    } else if (beta != 1.0f) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const float av = trans_a ? a[p * lda + i] : a[i * lda + p];
      if (av == 0.0f) continue;
      const float s = alpha * av;
      if (!trans_b) {
        const float* brow = row_ptr(b, ldb, p);
        for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += s * b[j * ldb + p];
      }
    }
  }
}

void axpy_scalar(std::size_t n, float alpha, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

float dot_scalar(std::size_t n, const float* x, const float* y) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

float sum_scalar(std::size_t n, const float* x) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void scale_scalar(std::size_t n, float alpha, float* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void lrelu_fwd_scalar(std::size_t n, float slope, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void lrelu_bwd_scalar(std::size_t n, float slope, const float* x,
                      const float* dy, float* dx) {
  for (std::size_t i = 0; i < n; ++i)
    dx[i] = x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void adam_scalar(std::size_t n, float* p, const float* g, float* m, float* v,
                 float beta1, float beta2, float eps, float step_size) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{gemm_scalar,      axpy_scalar,
                             dot_scalar,       sum_scalar,
                             scale_scalar,     lrelu_fwd_scalar,
                             lrelu_bwd_scalar, adam_scalar,
                             "scalar"};
  return t;
}

}  // namespace ganssl::kern
