#pragma once
// Minimal feed-forward network library with explicit backward passes.
// Layers cache whatever their backward needs during forward; a backward
// call must therefore follow its own forward (the training loops run
// strict forward/backward pairs). Parameter gradients accumulate across
// passes until zero_grad().

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganssl/rng.hpp"
#include "ganssl/tensor.hpp"

namespace ganssl::nn {

template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

// Weight-normalized parameter block: w = g[grp] * v / ||v_grp||.
// The group map assigns each element of v to a normalization group
// (dense rows, conv output channels, ...). Materialize before use;
// backprop converts a gradient w.r.t. w into gradients w.r.t. (v, g).
template <class T>
struct NormalizedWeight {
  Tensor<T> v, g;
  Tensor<T> dv, dg;
  Tensor<T> w;  // materialized weights, refreshed each forward
  std::vector<std::uint32_t> group;
  std::size_t ngroups = 0;

  void init(std::vector<std::size_t> shape, std::vector<std::uint32_t> grp,
            std::size_t groups, Rng& rng, double init_std) {
    v = Tensor<T>(shape);
    w = Tensor<T>(shape);
    dv = Tensor<T>(shape);
    group = std::move(grp);
    ngroups = groups;
    g = Tensor<T>({groups});
    dg = Tensor<T>({groups});
    for (auto& x : v.data) x = static_cast<T>(rng.normal(0.0, init_std));
    g.fill(T(1));
  }

  std::vector<T> norms() const {
    std::vector<T> n(ngroups, T(0));
    for (std::size_t i = 0; i < v.count(); ++i)
      n[group[i]] += v.data[i] * v.data[i];
    for (auto& x : n) x = std::sqrt(x) + T(1e-12);
    return n;
  }

  void materialize() {
    const auto n = norms();
    for (std::size_t i = 0; i < v.count(); ++i)
      w.data[i] = g.data[group[i]] * v.data[i] / n[group[i]];
  }

  void backprop(const Tensor<T>& dw) {
    const auto n = norms();
    std::vector<T> dot(ngroups, T(0));
    for (std::size_t i = 0; i < v.count(); ++i)
      dot[group[i]] += dw.data[i] * v.data[i];
    for (std::size_t i = 0; i < v.count(); ++i) {
      const auto k = group[i];
      dv.data[i] += g.data[k] / n[k] * dw.data[i] -
                    g.data[k] * dot[k] * v.data[i] / (n[k] * n[k] * n[k]);
    }
    for (std::size_t k = 0; k < ngroups; ++k) dg.data[k] += dot[k] / n[k];
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + "/v", &v, &dv});
    out.push_back({prefix + "/g", &g, &dg});
  }
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train, Rng& rng) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef<T>>& out) {
    (void)prefix;
    (void)out;
  }
  virtual std::string describe() const = 0;
};

// ---------------------------------------------------------------------------
// Dense layers

template <class T>
class Dense : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.05)
      : in_(in), out_(out), w_(out, in), dw_(out, in), b_({out}), db_({out}) {
    for (auto& x : w_.data) x = static_cast<T>(rng.normal(0.0, init_std));
  }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != in_) throw std::invalid_argument("dense: input dim");
    x_ = x;
    Tensor<T> y(x.rows(), out_);
    gemm<T>(false, true, T(1), x, w_, T(0), y);
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) y.at(i, j) += b_.data[j];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    gemm<T>(true, false, T(1), dy, x_, T(1), dw_);
    for (std::size_t i = 0; i < dy.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) db_.data[j] += dy.at(i, j);
    Tensor<T> dx(dy.rows(), in_);
    gemm<T>(false, false, T(1), dy, w_, T(0), dx);
    return dx;
  }

  void collect_params(const std::string& p,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({p + "/w", &w_, &dw_});
    out.push_back({p + "/b", &b_, &db_});
  }

  std::string describe() const override {
    return "dense " + std::to_string(out_);
  }

 private:
  std::size_t in_, out_;
  Tensor<T> w_, dw_, b_, db_, x_;
};

template <class T>
class DenseWN : public Layer<T> {
 public:
  DenseWN(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.05)
      : in_(in), out_(out), b_({out}), db_({out}) {
    std::vector<std::uint32_t> grp(in * out);
    for (std::size_t r = 0; r < out; ++r)
      for (std::size_t c = 0; c < in; ++c)
        grp[r * in + c] = static_cast<std::uint32_t>(r);
    nw_.init({out, in}, std::move(grp), out, rng, init_std);
  }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != in_) throw std::invalid_argument("dense-wn: input dim");
    x_ = x;
    nw_.materialize();
    Tensor<T> y(x.rows(), out_);
    gemm<T>(false, true, T(1), x, nw_.w, T(0), y);
    for (std::size_t i = 0; i < y.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) y.at(i, j) += b_.data[j];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dw(out_, in_);
    gemm<T>(true, false, T(1), dy, x_, T(0), dw);
    nw_.backprop(dw);
    for (std::size_t i = 0; i < dy.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) db_.data[j] += dy.at(i, j);
    Tensor<T> dx(dy.rows(), in_);
    gemm<T>(false, false, T(1), dy, nw_.w, T(0), dx);
    return dx;
  }

  void collect_params(const std::string& p,
                      std::vector<ParamRef<T>>& out) override {
    nw_.collect(p, out);
    out.push_back({p + "/b", &b_, &db_});
  }

  std::string describe() const override {
    return "dense-wn " + std::to_string(out_);
  }

 private:
  std::size_t in_, out_;
  NormalizedWeight<T> nw_;
  Tensor<T> b_, db_, x_;
};

// ---------------------------------------------------------------------------
// Activations

enum class Act { kRelu, kLrelu, kSoftplus, kSigmoid };

template <class T>
class Activation : public Layer<T> {
 public:
  explicit Activation(Act kind, double slope = 0.2)
      : kind_(kind), slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    x_ = x;
    Tensor<T> y = x;
    switch (kind_) {
      case Act::kRelu:
        for (auto& v : y.data) v = v > T(0) ? v : T(0);
        break;
      case Act::kLrelu:
        if constexpr (std::is_same_v<T, float>) {
          kern::active().lrelu_fwd(y.count(), slope_, x.data.data(),
                                   y.data.data());
        } else {
          for (auto& v : y.data) v = v > T(0) ? v : slope_ * v;
        }
        break;
      case Act::kSoftplus:
        for (auto& v : y.data) v = softplus(v);
        break;
      case Act::kSigmoid:
        for (auto& v : y.data) v = T(1) / (T(1) + std::exp(-v));
        break;
    }
    y_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    switch (kind_) {
      case Act::kRelu:
        for (std::size_t i = 0; i < dx.count(); ++i)
          if (x_.data[i] <= T(0)) dx.data[i] = T(0);
        break;
      case Act::kLrelu:
        if constexpr (std::is_same_v<T, float>) {
          kern::active().lrelu_bwd(dx.count(), slope_, x_.data.data(),
                                   dy.data.data(), dx.data.data());
        } else {
          for (std::size_t i = 0; i < dx.count(); ++i)
            if (x_.data[i] <= T(0)) dx.data[i] *= slope_;
        }
        break;
      case Act::kSoftplus:
        for (std::size_t i = 0; i < dx.count(); ++i)
          dx.data[i] *= T(1) / (T(1) + std::exp(-x_.data[i]));
        break;
      case Act::kSigmoid:
        for (std::size_t i = 0; i < dx.count(); ++i)
          dx.data[i] *= y_.data[i] * (T(1) - y_.data[i]);
        break;
    }
    return dx;
  }

  std::string describe() const override {
    switch (kind_) {
      case Act::kRelu: return "relu";
      case Act::kLrelu: return "lrelu";
      case Act::kSoftplus: return "softplus";
      case Act::kSigmoid: return "sigmoid";
    }
    return "?";
  }

  static T softplus(T x) {
    if (x > T(30)) return x;
    if (x < T(-30)) return std::exp(x);
    return std::log1p(std::exp(x));
  }

 private:
  Act kind_;
  T slope_;
  Tensor<T> x_, y_;
};

// ---------------------------------------------------------------------------
// Batch norm (per feature column, or per channel when spatial > 1)

template <class T>
class BatchNorm : public Layer<T> {
 public:
  BatchNorm(std::size_t channels, std::size_t spatial = 1,
            double momentum = 0.99, double eps = 1e-5)
      : ch_(channels),
        sp_(spatial),
        momentum_(static_cast<T>(momentum)),
        eps_(static_cast<T>(eps)),
        gamma_({channels}),
        beta_({channels}),
        dgamma_({channels}),
        dbeta_({channels}),
        run_mean_({channels}),
        run_var_({channels}) {
    gamma_.fill(T(1));
    run_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng&) override {
    if (x.cols() != ch_ * sp_) throw std::invalid_argument("bn: input dim");
    const std::size_t n = x.rows() * sp_;
    Tensor<T> y = x;
    if (train) {
      mean_.assign(ch_, T(0));
      var_.assign(ch_, T(0));
      for_each(x, [&](std::size_t c, const T& v) { mean_[c] += v; });
      for (auto& m : mean_) m /= static_cast<T>(n);
      for_each(x, [&](std::size_t c, const T& v) {
        var_[c] += (v - mean_[c]) * (v - mean_[c]);
      });
      for (auto& v : var_) v /= static_cast<T>(n);
      invstd_.resize(ch_);
      for (std::size_t c = 0; c < ch_; ++c)
        invstd_[c] = T(1) / std::sqrt(var_[c] + eps_);
      for (std::size_t c = 0; c < ch_; ++c) {
        run_mean_.data[c] = momentum_ * run_mean_.data[c] +
                            (T(1) - momentum_) * mean_[c];
        run_var_.data[c] =
            momentum_ * run_var_.data[c] + (T(1) - momentum_) * var_[c];
      }
      xhat_ = x;
      mutate(xhat_, [&](std::size_t c, T& v) { v = (v - mean_[c]) * invstd_[c]; });
      y = xhat_;
      mutate(y, [&](std::size_t c, T& v) {
        v = gamma_.data[c] * v + beta_.data[c];
      });
      nbatch_ = n;
    } else {
      mutate(y, [&](std::size_t c, T& v) {
        v = gamma_.data[c] * (v - run_mean_.data[c]) /
                std::sqrt(run_var_.data[c] + eps_) +
            beta_.data[c];
      });
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const T n = static_cast<T>(nbatch_);
    std::vector<T> sum_dy(ch_, T(0)), sum_dy_xhat(ch_, T(0));
    for_each(dy, [&](std::size_t c, const T& v) { sum_dy[c] += v; });
    {
      std::size_t i = 0;
      for_each(dy, [&](std::size_t c, const T& v) {
        sum_dy_xhat[c] += v * xhat_.data[i];
        ++i;
      });
    }
    for (std::size_t c = 0; c < ch_; ++c) {
      dbeta_.data[c] += sum_dy[c];
      dgamma_.data[c] += sum_dy_xhat[c];
    }
    Tensor<T> dx = dy;
    std::size_t i = 0;
    mutate(dx, [&](std::size_t c, T& v) {
      v = gamma_.data[c] * invstd_[c] / n *
          (n * v - sum_dy[c] - xhat_.data[i] * sum_dy_xhat[c]);
      ++i;
    });
    return dx;
  }

  void collect_params(const std::string& p,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({p + "/gamma", &gamma_, &dgamma_});
    out.push_back({p + "/beta", &beta_, &dbeta_});
  }

  // Running stats are state, not trainable parameters; checkpointing
  // picks them up through this hook.
  void collect_state(const std::string& p, std::vector<ParamRef<T>>& out) {
    out.push_back({p + "/run_mean", &run_mean_, nullptr});
    out.push_back({p + "/run_var", &run_var_, nullptr});
  }

  std::string describe() const override {
    return "batch-norm " + std::to_string(ch_);
  }

 private:
  template <class F>
  void for_each(const Tensor<T>& t, F f) const {
    const std::size_t cols = ch_ * sp_;
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t j = 0; j < cols; ++j)
        f(j / sp_, t.data[r * cols + j]);
  }
  template <class F>
  void mutate(Tensor<T>& t, F f) const {
    const std::size_t cols = ch_ * sp_;
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t j = 0; j < cols; ++j) f(j / sp_, t.data[r * cols + j]);
  }

  std::size_t ch_, sp_;
  T momentum_, eps_;
  Tensor<T> gamma_, beta_, dgamma_, dbeta_, run_mean_, run_var_;
  std::vector<T> mean_, var_, invstd_;
  Tensor<T> xhat_;
  std::size_t nbatch_ = 0;
};

// ---------------------------------------------------------------------------
// Stochastic layers

template <class T>
class GaussianNoise : public Layer<T> {
 public:
  explicit GaussianNoise(double sigma) : sigma_(sigma) {}

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng& rng) override {
    if (!train || sigma_ == 0.0) return x;
    Tensor<T> y = x;
    for (auto& v : y.data) v += static_cast<T>(rng.normal(0.0, sigma_));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override { return dy; }

  std::string describe() const override {
    std::ostringstream os;
    os << "noise " << sigma_;
    return os.str();
  }

 private:
  double sigma_;
};

template <class T>
class Dropout : public Layer<T> {
 public:
  explicit Dropout(double rate) : rate_(rate) {}

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng& rng) override {
    if (!train || rate_ == 0.0) {
      mask_.shape.clear();
      return x;
    }
    mask_ = Tensor<T>(x.shape);
    const T keep = static_cast<T>(1.0 - rate_);
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.count(); ++i) {
      mask_.data[i] = rng.uniform() < rate_ ? T(0) : T(1) / keep;
      y.data[i] *= mask_.data[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (mask_.shape.empty()) return dy;
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.count(); ++i) dx.data[i] *= mask_.data[i];
    return dx;
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "dropout " << rate_;
    return os.str();
  }

 private:
  double rate_;
  Tensor<T> mask_;
};

// ---------------------------------------------------------------------------
// Convolution machinery (im2col / col2im with an explicit output grid)

template <class T>
void im2col(const T* img, std::size_t ch, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride, int pad,
            std::size_t grid_h, std::size_t grid_w, T* cols) {
  // cols is [ch*kh*kw, grid_h*grid_w]
  const std::size_t gsz = grid_h * grid_w;
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        T* out = cols + ((c * kh + ki) * kw + kj) * gsz;
        for (std::size_t gi = 0; gi < grid_h; ++gi) {
          const long ii = static_cast<long>(gi * stride + ki) - pad;
          for (std::size_t gj = 0; gj < grid_w; ++gj) {
            const long jj = static_cast<long>(gj * stride + kj) - pad;
            out[gi * grid_w + gj] =
                (ii >= 0 && ii < static_cast<long>(h) && jj >= 0 &&
                 jj < static_cast<long>(w))
                    ? img[(c * h + ii) * w + jj]
                    : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* cols, std::size_t ch, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride, int pad,
            std::size_t grid_h, std::size_t grid_w, T* img) {
  // scatter-add; caller zeroes img
  const std::size_t gsz = grid_h * grid_w;
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const T* in = cols + ((c * kh + ki) * kw + kj) * gsz;
        for (std::size_t gi = 0; gi < grid_h; ++gi) {
          const long ii = static_cast<long>(gi * stride + ki) - pad;
          if (ii < 0 || ii >= static_cast<long>(h)) continue;
          for (std::size_t gj = 0; gj < grid_w; ++gj) {
            const long jj = static_cast<long>(gj * stride + kj) - pad;
            if (jj < 0 || jj >= static_cast<long>(w)) continue;
            img[(c * h + ii) * w + jj] += in[gi * grid_w + gj];
          }
        }
      }
    }
  }
}

// Weight-normalized 2-D convolution over [N, C*H*W] tensors.
template <class T>
class Conv2dWN : public Layer<T> {
 public:
  Conv2dWN(std::size_t in_c, std::size_t out_c, std::size_t in_h,
           std::size_t in_w, std::size_t k, std::size_t stride, int pad,
           Rng& rng, double init_std = 0.05)
      : ic_(in_c), oc_(out_c), ih_(in_h), iw_(in_w), k_(k), stride_(stride),
        pad_(pad), b_({out_c}), db_({out_c}) {
    oh_ = (ih_ + 2 * pad_ - k_) / stride_ + 1;
    ow_ = (iw_ + 2 * pad_ - k_) / stride_ + 1;
    const std::size_t cols = in_c * k * k;
    std::vector<std::uint32_t> grp(out_c * cols);
    for (std::size_t r = 0; r < out_c; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        grp[r * cols + c] = static_cast<std::uint32_t>(r);
    nw_.init({out_c, cols}, std::move(grp), out_c, rng, init_std);
  }

  std::size_t out_h() const { return oh_; }
  std::size_t out_w() const { return ow_; }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != ic_ * ih_ * iw_)
      throw std::invalid_argument("conv: input dim");
    x_ = x;
    nw_.materialize();
    const std::size_t n = x.rows();
    const std::size_t patch = ic_ * k_ * k_;
    const std::size_t gsz = oh_ * ow_;
    cols_ = Tensor<T>({n, patch * gsz});
    Tensor<T> y(n, oc_ * gsz);
    Tensor<T> ymat(oc_, gsz);
    Tensor<T> cmat(patch, gsz);
    for (std::size_t s = 0; s < n; ++s) {
      im2col(x.row(s), ic_, ih_, iw_, k_, k_, stride_, pad_, oh_, ow_,
             cols_.row(s));
      std::copy(cols_.row(s), cols_.row(s) + patch * gsz, cmat.data.begin());
      gemm<T>(false, false, T(1), nw_.w, cmat, T(0), ymat);
      T* out = y.row(s);
      for (std::size_t c = 0; c < oc_; ++c)
        for (std::size_t gidx = 0; gidx < gsz; ++gidx)
          out[c * gsz + gidx] = ymat.at(c, gidx) + b_.data[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n = dy.rows();
    const std::size_t patch = ic_ * k_ * k_;
    const std::size_t gsz = oh_ * ow_;
    Tensor<T> dw(oc_, patch);
    Tensor<T> dx(n, ic_ * ih_ * iw_);
    Tensor<T> dymat(oc_, gsz);
    Tensor<T> cmat(patch, gsz);
    Tensor<T> dcols(patch, gsz);
    for (std::size_t s = 0; s < n; ++s) {
      std::copy(dy.row(s), dy.row(s) + oc_ * gsz, dymat.data.begin());
      std::copy(cols_.row(s), cols_.row(s) + patch * gsz, cmat.data.begin());
      gemm<T>(false, true, T(1), dymat, cmat, T(1), dw);
      for (std::size_t c = 0; c < oc_; ++c) {
        T acc = T(0);
        for (std::size_t gidx = 0; gidx < gsz; ++gidx)
          acc += dymat.at(c, gidx);
        db_.data[c] += acc;
      }
      gemm<T>(true, false, T(1), nw_.w, dymat, T(0), dcols);
      col2im(dcols.data.data(), ic_, ih_, iw_, k_, k_, stride_, pad_, oh_,
             ow_, dx.row(s));
    }
    nw_.backprop(dw);
    return dx;
  }

  void collect_params(const std::string& p,
                      std::vector<ParamRef<T>>& out) override {
    nw_.collect(p, out);
    out.push_back({p + "/b", &b_, &db_});
  }

  std::string describe() const override {
    std::ostringstream os;
    os << k_ << "x" << k_ << " conv-wn " << oc_;
    if (stride_ > 1) os << " stride " << stride_;
    return os.str();
  }

 private:
  std::size_t ic_, oc_, ih_, iw_, k_, stride_;
  int pad_;
  std::size_t oh_ = 0, ow_ = 0;
  NormalizedWeight<T> nw_;
  Tensor<T> b_, db_, x_, cols_;
};

// Transposed convolution (forward = col2im of W^T x). Optional weight
// norm on the kernel, grouped by output channel; otherwise plain
// weights (the batch-normed deconv rows).
template <class T>
class Deconv2d : public Layer<T> {
 public:
  Deconv2d(std::size_t in_c, std::size_t out_c, std::size_t in_h,
           std::size_t in_w, std::size_t k, std::size_t stride, int pad,
           std::size_t out_pad, bool weight_norm, Rng& rng,
           double init_std = 0.05)
      : ic_(in_c), oc_(out_c), ih_(in_h), iw_(in_w), k_(k), stride_(stride),
        pad_(pad), wn_(weight_norm), b_({out_c}), db_({out_c}) {
    oh_ = (ih_ - 1) * stride_ - 2 * pad_ + k_ + out_pad;
    ow_ = (iw_ - 1) * stride_ - 2 * pad_ + k_ + out_pad;
    // Stored as [ic, oc*k*k] so forward is a single gemm per sample.
    const std::size_t cols = out_c * k * k;
    if (wn_) {
      std::vector<std::uint32_t> grp(in_c * cols);
      for (std::size_t r = 0; r < in_c; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          grp[r * cols + c] = static_cast<std::uint32_t>(c / (k * k));
      nw_.init({in_c, cols}, std::move(grp), out_c, rng, init_std);
    } else {
      w_ = Tensor<T>(in_c, cols);
      dw_ = Tensor<T>(in_c, cols);
      for (auto& x : w_.data) x = static_cast<T>(rng.normal(0.0, init_std));
    }
  }

  std::size_t out_h() const { return oh_; }
  std::size_t out_w() const { return ow_; }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != ic_ * ih_ * iw_)
      throw std::invalid_argument("deconv: input dim");
    x_ = x;
    if (wn_) nw_.materialize();
    const Tensor<T>& w = wn_ ? nw_.w : w_;
    const std::size_t n = x.rows();
    const std::size_t gsz = ih_ * iw_;
    const std::size_t patch = oc_ * k_ * k_;
    Tensor<T> y(n, oc_ * oh_ * ow_);
    Tensor<T> xmat(ic_, gsz);
    Tensor<T> cmat(patch, gsz);
    for (std::size_t s = 0; s < n; ++s) {
      std::copy(x.row(s), x.row(s) + ic_ * gsz, xmat.data.begin());
      gemm<T>(true, false, T(1), w, xmat, T(0), cmat);
      col2im(cmat.data.data(), oc_, oh_, ow_, k_, k_, stride_, pad_, ih_,
             iw_, y.row(s));
      T* out = y.row(s);
      const std::size_t osz = oh_ * ow_;
      for (std::size_t c = 0; c < oc_; ++c)
        for (std::size_t gidx = 0; gidx < osz; ++gidx)
          out[c * osz + gidx] += b_.data[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const Tensor<T>& w = wn_ ? nw_.w : w_;
    const std::size_t n = dy.rows();
    const std::size_t gsz = ih_ * iw_;
    const std::size_t patch = oc_ * k_ * k_;
    const std::size_t osz = oh_ * ow_;
    Tensor<T> dwacc(ic_, patch);
    Tensor<T> dx(n, ic_ * gsz);
    Tensor<T> dcols(patch, gsz);
    Tensor<T> xmat(ic_, gsz);
    Tensor<T> dxmat(ic_, gsz);
    for (std::size_t s = 0; s < n; ++s) {
      im2col(dy.row(s), oc_, oh_, ow_, k_, k_, stride_, pad_, ih_, iw_,
             dcols.data.data());
      std::copy(x_.row(s), x_.row(s) + ic_ * gsz, xmat.data.begin());
      gemm<T>(false, true, T(1), xmat, dcols, T(1), dwacc);
      gemm<T>(false, false, T(1), w, dcols, T(0), dxmat);
      std::copy(dxmat.data.begin(), dxmat.data.end(), dx.row(s));
      const T* dyr = dy.row(s);
      for (std::size_t c = 0; c < oc_; ++c) {
        T acc = T(0);
        for (std::size_t gidx = 0; gidx < osz; ++gidx)
          acc += dyr[c * osz + gidx];
        db_.data[c] += acc;
      }
    }
    if (wn_) {
      nw_.backprop(dwacc);
    } else {
      for (std::size_t i = 0; i < dw_.count(); ++i)
        dw_.data[i] += dwacc.data[i];
    }
    return dx;
  }

  void collect_params(const std::string& p,
                      std::vector<ParamRef<T>>& out) override {
    if (wn_) {
      nw_.collect(p, out);
    } else {
      out.push_back({p + "/w", &w_, &dw_});
    }
    out.push_back({p + "/b", &b_, &db_});
  }

  std::string describe() const override {
    std::ostringstream os;
    os << k_ << "x" << k_ << " deconv" << (wn_ ? "-wn " : " ") << oc_
       << " stride " << stride_;
    return os.str();
  }

 private:
  std::size_t ic_, oc_, ih_, iw_, k_, stride_;
  int pad_;
  std::size_t oh_ = 0, ow_ = 0;
  bool wn_;
  NormalizedWeight<T> nw_;
  Tensor<T> w_, dw_, b_, db_, x_;
};

template <class T>
class GlobalAvgPool : public Layer<T> {
 public:
  GlobalAvgPool(std::size_t ch, std::size_t spatial) : ch_(ch), sp_(spatial) {}

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != ch_ * sp_) throw std::invalid_argument("pool: input dim");
    Tensor<T> y(x.rows(), ch_);
    for (std::size_t s = 0; s < x.rows(); ++s) {
      const T* in = x.row(s);
      for (std::size_t c = 0; c < ch_; ++c) {
        T acc = T(0);
        for (std::size_t i = 0; i < sp_; ++i) acc += in[c * sp_ + i];
        y.at(s, c) = acc / static_cast<T>(sp_);
      }
    }
    rows_ = x.rows();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(rows_, ch_ * sp_);
    const T inv = T(1) / static_cast<T>(sp_);
    for (std::size_t s = 0; s < rows_; ++s) {
      T* out = dx.row(s);
      for (std::size_t c = 0; c < ch_; ++c)
        for (std::size_t i = 0; i < sp_; ++i)
          out[c * sp_ + i] = dy.at(s, c) * inv;
    }
    return dx;
  }

  std::string describe() const override { return "global-pool"; }

 private:
  std::size_t ch_, sp_, rows_ = 0;
};

// ---------------------------------------------------------------------------
// Network container

template <class T>
class Net {
 public:
  Net() = default;

  template <class L, class... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>* layer(std::size_t i) { return layers_[i].get(); }

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng& rng) {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h, train, rng);
    return h;
  }

  // Forward that also returns the output of layer `tap` (0-based); used
  // for the feature-matching tap.
  Tensor<T> forward_tapped(const Tensor<T>& x, bool train, Rng& rng,
                           std::size_t tap, Tensor<T>* tap_out) {
    Tensor<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i]->forward(h, train, rng);
      if (i == tap && tap_out) *tap_out = h;
    }
    return h;
  }

  // Backward from the network output; returns gradient w.r.t. the input.
  Tensor<T> backward(const Tensor<T>& dy) {
    return backward_from(layers_.size(), dy);
  }

  // Backward starting with a gradient at the *output of layer end-1*.
  Tensor<T> backward_from(std::size_t end, const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (std::size_t i = end; i-- > 0;) g = layers_[i]->backward(g);
    return g;
  }

  std::vector<ParamRef<T>> params(const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_params(prefix + "/" + std::to_string(i), out);
    return out;
  }

  // State tensors beyond trainable params (batch-norm running stats).
  std::vector<ParamRef<T>> state(const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (auto* bn = dynamic_cast<BatchNorm<T>*>(layers_[i].get()))
        bn->collect_state(prefix + "/" + std::to_string(i), out);
    return out;
  }

  void zero_grad() {
    for (auto& p : params(""))
      if (p.grad) p.grad->fill(T(0));
  }

  std::vector<std::string> describe() const {
    std::vector<std::string> rows;
    for (auto& l : layers_) rows.push_back(l->describe());
    return rows;
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// ---------------------------------------------------------------------------
// Adam

template <class T>
class Adam {
 public:
  Adam(double lr = 3e-4, double beta1 = 0.5, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(std::vector<ParamRef<T>>& params) {
    ++t_;
    const double corr =
        std::sqrt(1.0 - std::pow(b2_, t_)) / (1.0 - std::pow(b1_, t_));
    const T step_size = static_cast<T>(lr_ * corr);
    for (auto& p : params) {
      auto& slot = slots_[p.name];
      if (slot.m.data.size() != p.value->data.size()) {
        slot.m = Tensor<T>(p.value->shape);
        slot.v = Tensor<T>(p.value->shape);
      }
      if constexpr (std::is_same_v<T, float>) {
        kern::active().adam(p.value->count(), p.value->data.data(),
                            p.grad->data.data(), slot.m.data.data(),
                            slot.v.data.data(), static_cast<T>(b1_),
                            static_cast<T>(b2_), static_cast<T>(eps_),
                            step_size);
      } else {
        for (std::size_t i = 0; i < p.value->count(); ++i) {
          T& m = slot.m.data[i];
          T& v = slot.v.data[i];
          const T g = p.grad->data[i];
          m = static_cast<T>(b1_) * m + static_cast<T>(1 - b1_) * g;
          v = static_cast<T>(b2_) * v + static_cast<T>(1 - b2_) * g * g;
          p.value->data[i] -= step_size * m / (std::sqrt(v) + static_cast<T>(eps_));
        }
      }
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  struct Slot {
    Tensor<T> m, v;
  };
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::map<std::string, Slot> slots_;
};

}  // namespace ganssl::nn
