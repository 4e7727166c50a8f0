#pragma once
// Pluggable density estimate behind the generator's "stay out of high
// density regions" penalty. The default is a Gaussian KDE over either
// raw pixels or a frozen classifier's feature embeddings; the embedding
// is injected as a function so this module never depends on the nets.

#include <cstdint>
#include <functional>
#include <string>

#include "ganssl/rng.hpp"
#include "ganssl/tensor.hpp"

namespace ganssl::density {

using EmbedFn = std::function<Tensor<float>(const Tensor<float>&)>;

struct DensityModel {
  std::string kind;           // "kde-pixel" or "kde-feature"
  double bandwidth = 0.0;     // kernel h, in the evaluation space
  Tensor<float> reference;    // [N, D] subsampled points (post-embedding)
  EmbedFn embed;              // set for kde-feature; applied to queries
};

// Median pairwise euclidean distance over (a subsample of) the points;
// the usual parameter-free bandwidth pick.
double median_pairwise_bandwidth(const Tensor<float>& points,
                                 std::size_t max_pairs_sample = 2000,
                                 std::uint64_t seed = 0);

// Uniform seeded subsample of up to max_reference rows. kind
// "kde-feature" requires embed; it is applied to the subsample here and
// to every query later. bandwidth <= 0 means "use the median heuristic
// on the stored reference".
DensityModel density_fit(const Tensor<float>& images, const std::string& kind,
                         double bandwidth, std::size_t max_reference,
                         std::uint64_t seed, EmbedFn embed = nullptr);

// log of the KDE, one value per query row (log-sum-exp over reference
// points; exact, no truncation).
std::vector<double> log_density(const DensityModel& model,
                                const Tensor<float>& images);

// As above, plus d log p / d query (in the evaluation space: pixels for
// kde-pixel, features for kde-feature). grad has the queries' shape.
std::vector<double> log_density_grad(const DensityModel& model,
                                     const Tensor<float>& queries_embedded,
                                     Tensor<float>& grad);

// q-th percentile (lower-nearest rule) of log_density over the set.
double calibrate_epsilon(const DensityModel& model, const Tensor<float>& set,
                         double percentile_q);

// Lower-nearest percentile of the raw values (exposed for tests).
double percentile_lower_nearest(std::vector<double> values, double q);

}  // namespace ganssl::density
