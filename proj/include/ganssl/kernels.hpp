#pragma once
// Float32 inner-loop kernels with runtime backend selection.
//
// Three backends: a scalar reference, an AVX2+FMA variant, and (for the
// matrix products only) BLAS. The scalar path is the semantic ground
// truth; the others are equivalence-tested against it. Selection happens
// once at startup: GANSSL_KERNEL_BACKEND=scalar|avx2|blas overrides the
// default, which is blas for gemm and avx2 elsewhere when the CPU
// supports it.

#include <cstddef>
#include <string>

namespace ganssl::kern {

// C[M x N] = alpha * op(A) * op(B) + beta * C, all row-major.
// trans_a/trans_b flip the logical orientation; lda/ldb/ldc are the
// leading (row) strides of the stored arrays.
using GemmFn = void (*)(bool trans_a, bool trans_b, std::size_t m,
                        std::size_t n, std::size_t k, float alpha,
                        const float* a, std::size_t lda, const float* b,
                        std::size_t ldb, float beta, float* c,
                        std::size_t ldc);

using AxpyFn = void (*)(std::size_t n, float alpha, const float* x, float* y);
using DotFn = float (*)(std::size_t n, const float* x, const float* y);
using SumFn = float (*)(std::size_t n, const float* x);
using ScaleFn = void (*)(std::size_t n, float alpha, float* x);
// y = max(x, slope*x) elementwise; bwd multiplies dy by the local slope.
using LreluFwdFn = void (*)(std::size_t n, float slope, const float* x,
                            float* y);
using LreluBwdFn = void (*)(std::size_t n, float slope, const float* x,
                            const float* dy, float* dx);
// One fused Adam step over a parameter block (bias correction applied
// by the caller through the step_size/correction arguments).
using AdamFn = void (*)(std::size_t n, float* p, const float* g, float* m,
                        float* v, float beta1, float beta2, float eps,
                        float step_size);

struct KernelTable {
  GemmFn gemm = nullptr;
  AxpyFn axpy = nullptr;
  DotFn dot = nullptr;
  SumFn sum = nullptr;
  ScaleFn scale = nullptr;
  LreluFwdFn lrelu_fwd = nullptr;
  LreluBwdFn lrelu_bwd = nullptr;
  AdamFn adam = nullptr;
  const char* name = "";
};

// The active table, chosen on first use. Thread-safe (static init).
const KernelTable& active();

// Tables for explicit selection in equivalence tests.
const KernelTable& scalar_table();
bool avx2_available();
const KernelTable& avx2_table();  // valid only if avx2_available()
const KernelTable& blas_table();  // gemm/axpy/dot from BLAS, rest scalar

std::string active_backend_name();

}  // namespace ganssl::kern
