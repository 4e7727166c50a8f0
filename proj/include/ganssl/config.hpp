#pragma once
// Run configuration shared by the trainers and the harness. Parsed from
// flat "section.key = value" files; every field here is serialized into
// the run record so a run is replayable from its artifacts alone.

#include <cstdint>
#include <string>

namespace ganssl {

struct OptimizerConfig {
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  // epoch after which lr decays linearly to 0 at `epochs`; 0 disables
  std::uint64_t anneal_after = 0;
};

struct LossWeightConfig {
  // bad-generator loss terms (Eq. 3-style three-term sum)
  double fm = 1.0;
  double proxy = 0.1;
  double density = 0.01;
  // three-player game weights
  double alpha = 0.5;    // classifier-pseudo share of D's fake mass
  double alpha_c = 0.1;  // REINFORCE surrogate weight in C's loss
  double pseudo = 0.1;   // post-warmup generated-pair CE weight
};

struct DensityConfig {
  std::string kind = "kde-feature";  // or "kde-pixel"
  double bandwidth = 0.0;            // <= 0: median-distance heuristic
  double percentile_q = 10.0;        // threshold = q-th percentile
  std::uint64_t max_reference = 2000;
  std::uint64_t pretrain_epochs = 30;  // embedding classifier warm-up
};

struct TrainConfig {
  std::string model = "badgan";  // badgan | goodgan | supervised-baseline
  std::string dataset = "synthetic-gaussians";
  std::uint64_t labeled_count = 100;
  std::string selection = "stratified";  // or "representative"
  std::uint64_t batch_size = 100;
  std::uint64_t epochs = 100;
  std::uint64_t warmup_threshold = 200;
  std::uint64_t seed = 0;
  std::uint64_t eval_interval = 5;
  std::uint64_t checkpoint_interval = 0;  // 0: final only
  bool pseudo_pairs_as_real = false;      // D sees pseudo pairs as real
  bool fixed_split = false;  // one split for all seeds of a sweep
  double baseline_decay = 0.99;  // REINFORCE reward EMA
  OptimizerConfig optimizer;
  LossWeightConfig weights;
  DensityConfig density;
  // nonzero values shrink the dataset spec (reduced-scale smoke runs
  // against truncated files)
  std::uint64_t dataset_train_count = 0;
  std::uint64_t dataset_val_count = 0;
  std::uint64_t dataset_test_count = 0;
  std::string output_dir = "runs";
  std::string data_dir;  // empty: $GANSSL_DATA_DIR
  // synthetic substrate shape (ignored for image datasets)
  double synthetic_noise = 0.05;
  std::uint64_t synthetic_unlabeled = 2000;
  std::uint64_t synthetic_test_per_class = 250;
};

}  // namespace ganssl
