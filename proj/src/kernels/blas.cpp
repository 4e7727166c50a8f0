// BLAS-backed matrix kernels. Only the dense products go through BLAS;
// the elementwise entries reuse the AVX2/scalar implementations picked
// by dispatch.cpp.

#include <cblas.h>

#include <cstddef>

#include "ganssl/kernels.hpp"

namespace ganssl::kern {
namespace {

void gemm_blas(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, float alpha, const float* a, std::size_t lda,
               const float* b, std::size_t ldb, float beta, float* c,
               std::size_t ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

void axpy_blas(std::size_t n, float alpha, const float* x, float* y) {
  cblas_saxpy(static_cast<int>(n), alpha, x, 1, y, 1);
}

float dot_blas(std::size_t n, const float* x, const float* y) {
  return cblas_sdot(static_cast<int>(n), x, 1, y, 1);
}

}  // namespace

const KernelTable& blas_table() {
  static const KernelTable t = [] {
    KernelTable base =
        avx2_available() ? avx2_table() : scalar_table();
    base.gemm = gemm_blas;
    base.axpy = axpy_blas;
    base.dot = dot_blas;
    base.name = "blas";
    return base;
  }();
  return t;
}

}  // namespace ganssl::kern
