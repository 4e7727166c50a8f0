// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma in its own TU;
// only reached after the runtime CPU check in dispatch.cpp.

#include <cmath>
#include <cstddef>
#include <immintrin.h>

#include "ganssl/kernels.hpp"

namespace ganssl::kern {
namespace {

inline float hsum256(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

// Inner update: crow[0..n) += s * brow[0..n)
inline void axpy_row(std::size_t n, float s, const float* brow, float* crow) {
  const __m256 vs = _mm256_set1_ps(s);
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256 c0 = _mm256_loadu_ps(crow + j);
    __m256 c1 = _mm256_loadu_ps(crow + j + 8);
    c0 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(brow + j), c0);
    c1 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(brow + j + 8), c1);
    _mm256_storeu_ps(crow + j, c0);
    _mm256_storeu_ps(crow + j + 8, c1);
  }
  for (; j + 8 <= n; j += 8) {
    __m256 c0 = _mm256_loadu_ps(crow + j);
    c0 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(brow + j), c0);
    _mm256_storeu_ps(crow + j, c0);
  }
  for (; j < n; ++j) crow[j] += s * brow[j];
}

inline float dot_avx(std::size_t n, const float* x, const float* y) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i),
                           acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8),
                           _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i),
                           acc0);
  float acc = hsum256(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, float alpha, const float* a, std::size_t lda,
               const float* b, std::size_t ldb, float beta, float* c,
               std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    if (beta == 0.0f) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (!trans_b) {
    // Row-accumulation form: C(i,:) += alpha*op(A)(i,p) * B(p,:)
    for (std::size_t i = 0; i < m; ++i) {
      float* crow = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        const float av = trans_a ? a[p * lda + i] : a[i * lda + p];
        if (av == 0.0f) continue;
        axpy_row(n, alpha * av, b + p * ldb, crow);
      }
    }
  } else {
    // B transposed: each output element is a contiguous dot product when
    // A is untransposed; otherwise gather A's column first.
    if (!trans_a) {
      for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * lda;
        float* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j)
          crow[j] += alpha * dot_avx(k, arow, b + j * ldb);
      }
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
          float acc = 0.0f;
          for (std::size_t p = 0; p < k; ++p)
            acc += a[p * lda + i] * b[j * ldb + p];
          crow[j] += alpha * acc;
        }
      }
    }
  }
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  axpy_row(n, alpha, x, y);
}

float dot_avx2(std::size_t n, const float* x, const float* y) {
  return dot_avx(n, x, y);
}

float sum_avx2(std::size_t n, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum256(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void scale_avx2(std::size_t n, float alpha, float* x) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void lrelu_fwd_avx2(std::size_t n, float slope, const float* x, float* y) {
  const __m256 vs = _mm256_set1_ps(slope);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    _mm256_storeu_ps(y + i, _mm256_max_ps(v, _mm256_mul_ps(vs, v)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void lrelu_bwd_avx2(std::size_t n, float slope, const float* x,
                    const float* dy, float* dx) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xv = _mm256_loadu_ps(x + i);
    __m256 dv = _mm256_loadu_ps(dy + i);
    __m256 mask = _mm256_cmp_ps(xv, zero, _CMP_GT_OQ);
    __m256 scaled = _mm256_mul_ps(vs, dv);
    _mm256_storeu_ps(dx + i, _mm256_blendv_ps(scaled, dv, mask));
  }
  for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void adam_avx2(std::size_t n, float* p, const float* g, float* m, float* v,
               float beta1, float beta2, float eps, float step_size) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb1c = _mm256_set1_ps(1.0f - beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vb2c = _mm256_set1_ps(1.0f - beta2);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vstep = _mm256_set1_ps(step_size);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)),
                              _mm256_mul_ps(vb1c, gv));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(vb2c, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vv), veps);
    __m256 upd = _mm256_div_ps(_mm256_mul_ps(vstep, mv), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{gemm_avx2,      axpy_avx2,      dot_avx2,
                             sum_avx2,       scale_avx2,     lrelu_fwd_avx2,
                             lrelu_bwd_avx2, adam_avx2,      "avx2"};
  return t;
}

}  // namespace ganssl::kern
