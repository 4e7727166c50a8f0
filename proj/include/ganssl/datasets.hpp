#pragma once
// Dataset ingestion and semi-supervised split machinery. Images live in
// [0,1] as row-per-sample tensors (channel-major within a row). All
// selection and batching is a pure function of (inputs, seed).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ganssl/networks.hpp"
#include "ganssl/rng.hpp"
#include "ganssl/tensor.hpp"

namespace ganssl::data {

struct LabeledSet {
  Tensor<float> images;
  std::vector<int> labels;
  std::size_t count() const { return images.rows(); }
};

struct Dataset {
  DatasetSpec spec;
  LabeledSet train;
  LabeledSet test;
  std::optional<LabeledSet> validation;
};

struct SSLSplit {
  LabeledSet labeled;
  Tensor<float> unlabeled;
  LabeledSet test;
  std::optional<LabeledSet> validation;
  std::vector<std::size_t> labeled_indices;    // into the original train set
  std::vector<std::size_t> unlabeled_indices;  // complement, ascending
  std::size_t num_classes = 0;
};

// Loads the published binary files from data_dir. File names are the
// canonical ones (IDX pair for mnist, data_batch_*.bin/test_batch.bin
// for cifar10, train_32x32.mat/test_32x32.mat for svhn). Files must
// hold at least spec.*_count records; shrunken specs are allowed so
// reduced-scale runs can use truncated files.
Dataset load_dataset(const DatasetSpec& spec, const std::string& data_dir,
                     bool verify_checksums = true,
                     bool checksum_continue = true);

// Attempts to download the canonical files listed in the manifest into
// data_dir. Only called when --allow-download is given.
void fetch_dataset(const DatasetSpec& spec, const std::string& data_dir,
                   const std::string& manifest_path);

// Synthetic desk-scale substrates: two-moons (K=2) and a ring of K
// Gaussians. Coordinates are scaled into [0,1]^2 and either embedded as
// 1x2 "images" or splatted onto an 8x8 raster when the spec says so.
Dataset make_synthetic(const DatasetSpec& spec, std::size_t n_per_class,
                       double noise, std::uint64_t seed,
                       std::size_t test_per_class = 250);

// Stratified labeled subset of n examples; when n % K != 0 the spare
// examples go to the lowest class indices. Same seed, same split.
SSLSplit stratified_select(const Dataset& ds, std::size_t n,
                           std::uint64_t seed);

// Per class, the n/K examples nearest the class centroid in per-image
// normalized pixel space. An automated stand-in for hand-curated
// "representative" labeled sets.
SSLSplit representative_select(const Dataset& ds, std::size_t n,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------

struct ZCAWhitener {
  Tensor<float> mean;  // [D]
  Tensor<float> w;     // [D, D], symmetric
  double epsilon = 0.0;

  Tensor<float> apply(const Tensor<float>& images) const;
};

ZCAWhitener zca_fit(const Tensor<float>& images, double epsilon);

// ---------------------------------------------------------------------------

// One epoch of training batches: the unlabeled pool is shuffled without
// replacement (keyed by seed and epoch, short final batch dropped); the
// labeled pool is sampled with replacement every step.
class BatchStream {
 public:
  BatchStream(const SSLSplit& split, std::size_t batch_size,
              std::uint64_t seed, std::size_t epoch);

  std::size_t steps() const { return steps_; }
  // Returns false when the epoch is exhausted.
  bool next(LabeledSet* labeled, Tensor<float>* unlabeled);

 private:
  const SSLSplit& split_;
  std::size_t batch_, steps_, cursor_ = 0;
  std::vector<std::size_t> order_;
  Rng rng_;
};

}  // namespace ganssl::data
