#include "ganssl/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ganssl::density {
namespace {

double sq_dist(const float* a, const float* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = double(a[j]) - double(b[j]);
    s += diff * diff;
  }
  return s;
}

}  // namespace

double median_pairwise_bandwidth(const Tensor<float>& points,
                                 std::size_t max_pairs_sample,
                                 std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (n < 2)
    throw std::invalid_argument("median bandwidth needs >= 2 points");
  const std::size_t d = points.cols();
  Rng rng = make_rng(seed, Stream::kDensity);
  std::vector<double> dists;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs <= max_pairs_sample) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        dists.push_back(std::sqrt(sq_dist(points.row(i), points.row(j), d)));
  } else {
    while (dists.size() < max_pairs_sample) {
      const std::size_t i = rng.index(n);
      const std::size_t j = rng.index(n);
      if (i == j) continue;
      dists.push_back(std::sqrt(sq_dist(points.row(i), points.row(j), d)));
    }
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2,
                   dists.end());
  const double med = dists[dists.size() / 2];
  return med > 0.0 ? med : 1.0;  // degenerate all-identical reference
}

DensityModel density_fit(const Tensor<float>& images, const std::string& kind,
                         double bandwidth, std::size_t max_reference,
                         std::uint64_t seed, EmbedFn embed) {
  if (images.rows() == 0)
    throw std::invalid_argument("density_fit: empty input");
  if (kind != "kde-pixel" && kind != "kde-feature")
    throw std::invalid_argument("density_fit: unknown kind " + kind);
  if (kind == "kde-feature" && !embed)
    throw std::invalid_argument("density_fit: kde-feature needs an embedder");

  DensityModel model;
  model.kind = kind;
  model.embed = std::move(embed);

  const std::size_t n = images.rows();
  Tensor<float> subsample;
  if (n <= max_reference) {
    subsample = images;
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed, Stream::kDensity);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    subsample = Tensor<float>(max_reference, images.cols());
    for (std::size_t r = 0; r < max_reference; ++r)
      std::copy(images.row(idx[r]), images.row(idx[r]) + images.cols(),
                subsample.row(r));
  }
  model.reference =
      model.embed ? model.embed(subsample) : std::move(subsample);
  model.bandwidth = bandwidth > 0.0
                        ? bandwidth
                        : median_pairwise_bandwidth(model.reference, 2000,
                                                    seed);
  return model;
}

std::vector<double> log_density_grad(const DensityModel& model,
                                     const Tensor<float>& q,
                                     Tensor<float>& grad) {
  const std::size_t n = model.reference.rows();
  const std::size_t d = model.reference.cols();
  if (n == 0) throw std::runtime_error("log_density: model not fit");
  if (q.cols() != d)
    throw std::invalid_argument("log_density: dimension mismatch");
  const double h2 = model.bandwidth * model.bandwidth;
  // log p(x) = logsumexp_i(-||x - r_i||^2 / 2h^2) - log n - (D/2) log(2*pi*h^2)
  const double log_norm = std::log(double(n)) +
                          0.5 * d * std::log(2.0 * M_PI * h2);
  const bool want_grad = !grad.shape.empty();
  if (want_grad && (grad.rows() != q.rows() || grad.cols() != d))
    throw std::invalid_argument("log_density_grad: grad shape mismatch");
  std::vector<double> out(q.rows());
  std::vector<double> e(n);
  for (std::size_t s = 0; s < q.rows(); ++s) {
    const float* x = q.row(s);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = -sq_dist(x, model.reference.row(i), d) / (2.0 * h2);
      mx = std::max(mx, e[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = std::exp(e[i] - mx);
      sum += e[i];
    }
    out[s] = mx + std::log(sum) - log_norm;
    if (want_grad) {
      // d log p / dx = sum_i softmax_i * (r_i - x) / h^2
      float* g = grad.row(s);
      std::fill(g, g + d, 0.0f);
      for (std::size_t i = 0; i < n; ++i) {
        const double w = e[i] / sum / h2;
        const float* r = model.reference.row(i);
        for (std::size_t j = 0; j < d; ++j)
          g[j] += static_cast<float>(w * (double(r[j]) - double(x[j])));
      }
    }
  }
  return out;
}

std::vector<double> log_density(const DensityModel& model,
                                const Tensor<float>& images) {
  const Tensor<float> q = model.embed ? model.embed(images) : images;
  Tensor<float> no_grad;
  return log_density_grad(model, q, no_grad);
}

double percentile_lower_nearest(std::vector<double> values, double q) {
  if (values.empty())
    throw std::invalid_argument("percentile over an empty set");
  std::sort(values.begin(), values.end());
  // lower-nearest rule: ceil(q/100 * n) - 1, clamped (q=50 over 4
  // values picks the 2nd)
  const double r = std::ceil(q / 100.0 * values.size()) - 1.0;
  const auto rank = static_cast<std::size_t>(std::max(r, 0.0));
  return values[std::min(rank, values.size() - 1)];
}

double calibrate_epsilon(const DensityModel& model, const Tensor<float>& set,
                         double percentile_q) {
  if (percentile_q < 0.0 || percentile_q >= 100.0)
    throw std::invalid_argument("percentile must be in [0, 100)");
  if (set.rows() == 0)
    throw std::invalid_argument("calibrate_epsilon: empty set");
  return percentile_lower_nearest(log_density(model, set), percentile_q);
}

}  // namespace ganssl::density
