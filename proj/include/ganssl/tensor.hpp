#pragma once
// Dense row-major tensor. Most of the code treats a tensor as a matrix
// [rows = first dim, cols = product of the rest]; conv layers carry
// their own channel/height/width bookkeeping on top of the flat layout.
//
// Float matrix products route through the runtime-selected kernels;
// the double instantiation (used by the finite-difference checks) runs
// a plain reference loop.

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganssl/kernels.hpp"

namespace ganssl {

template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(count(), T(0));
  }
  Tensor(std::initializer_list<std::size_t> s)
      : Tensor(std::vector<std::size_t>(s)) {}
  Tensor(std::size_t r, std::size_t c)
      : Tensor(std::vector<std::size_t>{r, c}) {}

  std::size_t count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.empty() ? 0 : count() / shape[0]; }

  T* row(std::size_t i) { return data.data() + i * cols(); }
  const T* row(std::size_t i) const { return data.data() + i * cols(); }

  T& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  const T& at(std::size_t i, std::size_t j) const {
    return data[i * cols() + j];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

namespace detail {

template <class T>
void gemm_ref(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
              T alpha, const T* a, std::size_t lda, const T* b,
              std::size_t ldb, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ta ? a[p * lda + i] : a[i * lda + p];
      if (av == T(0)) continue;
      const T s = alpha * av;
      for (std::size_t j = 0; j < n; ++j)
        crow[j] += s * (tb ? b[j * ldb + p] : b[p * ldb + j]);
    }
  }
}

}  // namespace detail

// c = alpha * op(a) * op(b) + beta * c, treating each tensor as its
// rows()/cols() matrix view. Dimensions are validated here once so layer
// code can stay terse.
template <class T>
void gemm(bool ta, bool tb, T alpha, const Tensor<T>& a, const Tensor<T>& b,
          T beta, Tensor<T>& c) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t ka = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (ka != kb || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("gemm: shape mismatch");
  if constexpr (std::is_same_v<T, float>) {
    kern::active().gemm(ta, tb, m, n, ka, alpha, a.data.data(), a.cols(),
                        b.data.data(), b.cols(), beta, c.data.data(),
                        c.cols());
  } else {
    detail::gemm_ref(ta, tb, m, n, ka, alpha, a.data.data(), a.cols(),
                     b.data.data(), b.cols(), beta, c.data.data(), c.cols());
  }
}

template <class T>
void axpy(T alpha, const Tensor<T>& x, Tensor<T>& y) {
  if (x.count() != y.count()) throw std::invalid_argument("axpy: size mismatch");
  if constexpr (std::is_same_v<T, float>) {
    kern::active().axpy(x.count(), alpha, x.data.data(), y.data.data());
  } else {
    for (std::size_t i = 0; i < x.count(); ++i) y.data[i] += alpha * x.data[i];
  }
}

}  // namespace ganssl
