#pragma once
// Architecture builders for the generator G, classifier C, and the pair
// discriminator D used by the three-player model. Layer stacks follow
// the per-dataset tables (MNIST MLPs, SVHN/CIFAR10 conv nets) with the
// noise/dropout placements exposed through NetworkOptions.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganssl/nn.hpp"

namespace ganssl {

struct DatasetSpec {
  std::string name;
  std::size_t height = 0, width = 0, channels = 0;
  std::size_t num_classes = 0;
  std::size_t train_count = 0, val_count = 0, test_count = 0;

  std::size_t dim() const { return height * width * channels; }
  bool is_conv() const { return name == "svhn" || name == "cifar10"; }

  static DatasetSpec mnist();
  static DatasetSpec svhn();
  static DatasetSpec cifar10();
  static DatasetSpec synthetic_moons(bool raster8x8 = false);
  static DatasetSpec synthetic_gaussians(std::size_t k = 4,
                                         bool raster8x8 = false);
  static DatasetSpec by_name(const std::string& name);
};

struct NetworkOptions {
  double input_noise = 0.3;
  double hidden_noise = 0.5;
  double lrelu_slope = 0.2;
  double init_std = 0.05;
  double bn_momentum = 0.99;
  double bn_eps = 1e-5;
};

// Pass-through marker so the structural dump carries the reshape row.
template <class T>
class Reshape : public nn::Layer<T> {
 public:
  Reshape(std::size_t c, std::size_t h, std::size_t w) : c_(c), h_(h), w_(w) {}
  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    if (x.cols() != c_ * h_ * w_) throw std::invalid_argument("reshape: dim");
    return x;
  }
  Tensor<T> backward(const Tensor<T>& dy) override { return dy; }
  std::string describe() const override {
    return "reshape " + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_);
  }

 private:
  std::size_t c_, h_, w_;
};

// ---------------------------------------------------------------------------

template <class T>
struct Classifier {
  nn::Net<T> net;
  std::size_t tap = 0;  // output of this layer is the feature vector f(x)
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;

  Tensor<T> logits(const Tensor<T>& x, bool train, Rng& rng,
                   Tensor<T>* features = nullptr) {
    return net.forward_tapped(x, train, rng, tap, features);
  }
};

template <class T>
struct Generator {
  nn::Net<T> net;
  std::size_t z_dim = 0;
  bool conditional = false;
  std::size_t num_classes = 0;
  std::size_t out_dim = 0;

  // z prior: i.i.d. uniform on [0,1].
  Tensor<T> sample_z(std::size_t n, Rng& rng) const {
    Tensor<T> z(n, z_dim);
    for (auto& v : z.data) v = static_cast<T>(rng.uniform());
    return z;
  }

  Tensor<T> make_input(const Tensor<T>& z, const std::vector<int>* labels) const {
    if (!conditional) return z;
    if (!labels || labels->size() != z.rows())
      throw std::invalid_argument("conditional generator needs labels");
    Tensor<T> in(z.rows(), z_dim + num_classes);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      T* row = in.row(i);
      for (std::size_t j = 0; j < z_dim; ++j) row[j] = z.at(i, j);
      row[z_dim + static_cast<std::size_t>((*labels)[i])] = T(1);
    }
    return in;
  }

  Tensor<T> generate(const Tensor<T>& z, const std::vector<int>* labels,
                     bool train, Rng& rng) {
    return net.forward(make_input(z, labels), train, rng);
  }
};

template <class T>
struct PairDiscriminator {
  nn::Net<T> net;
  DatasetSpec spec;
  bool conv = false;

  // MLP mode: one-hot appended to the flattened image. Conv mode: K
  // constant label planes concatenated as extra channels.
  Tensor<T> make_input(const Tensor<T>& images,
                       const std::vector<int>& labels) const {
    const std::size_t n = images.rows();
    const std::size_t k = spec.num_classes;
    if (labels.size() != n)
      throw std::invalid_argument("pair discriminator: label count");
    if (!conv) {
      Tensor<T> in(n, images.cols() + k);
      for (std::size_t i = 0; i < n; ++i) {
        T* row = in.row(i);
        const T* img = images.row(i);
        for (std::size_t j = 0; j < images.cols(); ++j) row[j] = img[j];
        row[images.cols() + static_cast<std::size_t>(labels[i])] = T(1);
      }
      return in;
    }
    const std::size_t sp = spec.height * spec.width;
    Tensor<T> in(n, (spec.channels + k) * sp);
    for (std::size_t i = 0; i < n; ++i) {
      T* row = in.row(i);
      const T* img = images.row(i);
      for (std::size_t j = 0; j < spec.channels * sp; ++j) row[j] = img[j];
      T* plane = row + (spec.channels + labels[i]) * sp;
      for (std::size_t j = 0; j < sp; ++j) plane[j] = T(1);
    }
    return in;
  }

  // Gradient w.r.t. the image part of a make_input tensor.
  Tensor<T> image_grad(const Tensor<T>& din) const {
    const std::size_t img_cols = spec.dim();
    Tensor<T> g(din.rows(), img_cols);
    for (std::size_t i = 0; i < din.rows(); ++i)
      for (std::size_t j = 0; j < img_cols; ++j) g.at(i, j) = din.at(i, j);
    return g;
  }

  // Returns P(real | image, label) in (0,1), one scalar per row.
  Tensor<T> score(const Tensor<T>& images, const std::vector<int>& labels,
                  bool train, Rng& rng) {
    return net.forward(make_input(images, labels), train, rng);
  }
};

template <class T>
Generator<T> build_generator(const DatasetSpec& spec, bool conditional,
                             Rng& rng, std::size_t z_dim = 100,
                             const NetworkOptions& opt = {});

template <class T>
Classifier<T> build_classifier(const DatasetSpec& spec, Rng& rng,
                               const NetworkOptions& opt = {});

template <class T>
PairDiscriminator<T> build_pair_discriminator(const DatasetSpec& spec,
                                              Rng& rng,
                                              const NetworkOptions& opt = {});

// ---------------------------------------------------------------------------
// Builder definitions (templated; float is the training instantiation)

template <class T>
Generator<T> build_generator(const DatasetSpec& spec, bool conditional,
                             Rng& rng, std::size_t z_dim,
                             const NetworkOptions& opt) {
  Generator<T> g;
  g.z_dim = z_dim;
  g.conditional = conditional;
  g.num_classes = spec.num_classes;
  g.out_dim = spec.dim();
  const std::size_t in = z_dim + (conditional ? spec.num_classes : 0);
  auto& net = g.net;
  if (spec.is_conv()) {
    net.template add<nn::Dense<T>>(in, 8192, rng, opt.init_std);
    net.template add<nn::BatchNorm<T>>(8192, 1, opt.bn_momentum, opt.bn_eps);
    net.template add<nn::Activation<T>>(nn::Act::kRelu);
    net.template add<Reshape<T>>(512, 4, 4);
    net.template add<nn::Deconv2d<T>>(512, 256, 4, 4, 5, 2, 2, 1, false, rng,
                                      opt.init_std);
    net.template add<nn::BatchNorm<T>>(256, 8 * 8, opt.bn_momentum, opt.bn_eps);
    net.template add<nn::Activation<T>>(nn::Act::kRelu);
    net.template add<nn::Deconv2d<T>>(256, 128, 8, 8, 5, 2, 2, 1, false, rng,
                                      opt.init_std);
    net.template add<nn::BatchNorm<T>>(128, 16 * 16, opt.bn_momentum,
                                       opt.bn_eps);
    net.template add<nn::Activation<T>>(nn::Act::kRelu);
    net.template add<nn::Deconv2d<T>>(128, 3, 16, 16, 5, 2, 2, 1, true, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else if (spec.name == "mnist") {
    std::size_t prev = in;
    for (int i = 0; i < 3; ++i) {
      net.template add<nn::Dense<T>>(prev, 500, rng, opt.init_std);
      net.template add<nn::BatchNorm<T>>(500, 1, opt.bn_momentum, opt.bn_eps);
      net.template add<nn::Activation<T>>(nn::Act::kSoftplus);
      prev = 500;
    }
    net.template add<nn::DenseWN<T>>(prev, spec.dim(), rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else if (spec.name.rfind("synthetic", 0) == 0) {
    std::size_t prev = in;
    for (int i = 0; i < 2; ++i) {
      net.template add<nn::Dense<T>>(prev, 64, rng, opt.init_std);
      net.template add<nn::BatchNorm<T>>(64, 1, opt.bn_momentum, opt.bn_eps);
      net.template add<nn::Activation<T>>(nn::Act::kSoftplus);
      prev = 64;
    }
    net.template add<nn::DenseWN<T>>(prev, spec.dim(), rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else {
    throw std::invalid_argument("build_generator: unknown dataset " +
                                spec.name);
  }
  return g;
}

template <class T>
Classifier<T> build_classifier(const DatasetSpec& spec, Rng& rng,
                               const NetworkOptions& opt) {
  Classifier<T> c;
  c.num_classes = spec.num_classes;
  c.input_dim = spec.dim();
  auto& net = c.net;
  const double slope = opt.lrelu_slope;
  if (spec.is_conv()) {
    const std::size_t f = spec.name == "cifar10" ? 96 : 64;   // first block
    const std::size_t m = spec.name == "cifar10" ? 192 : 128;  // later blocks
    net.template add<nn::GaussianNoise<T>>(opt.input_noise);
    net.template add<nn::Dropout<T>>(0.2);
    net.template add<nn::Conv2dWN<T>>(3, f, 32, 32, 3, 1, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(f, f, 32, 32, 3, 1, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(f, f, 32, 32, 3, 2, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Dropout<T>>(0.5);
    net.template add<nn::Conv2dWN<T>>(f, m, 16, 16, 3, 1, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(m, m, 16, 16, 3, 1, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    const std::size_t s2 = spec.name == "cifar10" ? 128 : m;
    net.template add<nn::Conv2dWN<T>>(m, s2, 16, 16, 3, 2, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Dropout<T>>(0.5);
    const std::size_t last = spec.name == "cifar10" ? 192 : 128;
    net.template add<nn::Conv2dWN<T>>(s2, last, 8, 8, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(last, last, 8, 8, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(last, last, 8, 8, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::GlobalAvgPool<T>>(last, 8 * 8);
    c.tap = net.size() - 1;
    c.feature_dim = last;
    net.template add<nn::DenseWN<T>>(last, spec.num_classes, rng,
                                     opt.init_std);
  } else if (spec.name == "mnist") {
    const std::size_t widths[] = {1000, 500, 250, 250, 250};
    std::size_t prev = spec.dim();
    net.template add<nn::GaussianNoise<T>>(opt.input_noise);
    for (std::size_t w : widths) {
      net.template add<nn::DenseWN<T>>(prev, w, rng, opt.init_std);
      net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
      net.template add<nn::GaussianNoise<T>>(opt.hidden_noise);
      prev = w;
    }
    c.tap = net.size() - 1;
    c.feature_dim = prev;
    net.template add<nn::DenseWN<T>>(prev, spec.num_classes, rng,
                                     opt.init_std);
  } else if (spec.name.rfind("synthetic", 0) == 0) {
    std::size_t prev = spec.dim();
    net.template add<nn::GaussianNoise<T>>(0.1);
    for (int i = 0; i < 2; ++i) {
      net.template add<nn::DenseWN<T>>(prev, 64, rng, opt.init_std);
      net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
      prev = 64;
    }
    c.tap = net.size() - 1;
    c.feature_dim = prev;
    net.template add<nn::DenseWN<T>>(prev, spec.num_classes, rng,
                                     opt.init_std);
  } else {
    throw std::invalid_argument("build_classifier: unknown dataset " +
                                spec.name);
  }
  return c;
}

template <class T>
PairDiscriminator<T> build_pair_discriminator(const DatasetSpec& spec,
                                              Rng& rng,
                                              const NetworkOptions& opt) {
  PairDiscriminator<T> d;
  d.spec = spec;
  d.conv = spec.is_conv();
  auto& net = d.net;
  const double slope = opt.lrelu_slope;
  if (d.conv) {
    const std::size_t in_c = spec.channels + spec.num_classes;
    net.template add<nn::Dropout<T>>(0.2);
    net.template add<nn::Conv2dWN<T>>(in_c, 32, 32, 32, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(32, 32, 32, 32, 3, 2, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Dropout<T>>(0.2);
    net.template add<nn::Conv2dWN<T>>(32, 64, 16, 16, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(64, 64, 16, 16, 3, 2, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Dropout<T>>(0.2);
    net.template add<nn::Conv2dWN<T>>(64, 128, 8, 8, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::Conv2dWN<T>>(128, 128, 8, 8, 3, 1, 1, rng,
                                      opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
    net.template add<nn::GlobalAvgPool<T>>(128, 8 * 8);
    net.template add<nn::DenseWN<T>>(128, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else if (spec.name == "mnist") {
    const std::size_t widths[] = {1000, 500, 250, 250, 250};
    std::size_t prev = spec.dim() + spec.num_classes;
    net.template add<nn::GaussianNoise<T>>(opt.input_noise);
    for (std::size_t w : widths) {
      net.template add<nn::DenseWN<T>>(prev, w, rng, opt.init_std);
      net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
      net.template add<nn::GaussianNoise<T>>(opt.hidden_noise);
      prev = w;
    }
    net.template add<nn::DenseWN<T>>(prev, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else if (spec.name.rfind("synthetic", 0) == 0) {
    std::size_t prev = spec.dim() + spec.num_classes;
    net.template add<nn::GaussianNoise<T>>(0.1);
    for (int i = 0; i < 2; ++i) {
      net.template add<nn::DenseWN<T>>(prev, 64, rng, opt.init_std);
      net.template add<nn::Activation<T>>(nn::Act::kLrelu, slope);
      prev = 64;
    }
    net.template add<nn::DenseWN<T>>(prev, 1, rng, opt.init_std);
    net.template add<nn::Activation<T>>(nn::Act::kSigmoid);
  } else {
    throw std::invalid_argument("build_pair_discriminator: unknown dataset " +
                                spec.name);
  }
  return d;
}

}  // namespace ganssl
