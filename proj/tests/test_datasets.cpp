// Loaders (against on-disk fixtures when present), splits, synthetic
// substrates, ZCA, and batch-stream determinism.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>

#include "ganssl/datasets.hpp"

using namespace ganssl;
namespace fs = std::filesystem;

namespace {

std::string data_dir() {
  if (const char* env = std::getenv("GANSSL_DATA_DIR")) return env;
  return "data";
}

data::Dataset toy_dataset(std::size_t n, std::size_t k) {
  data::Dataset ds;
  ds.spec = DatasetSpec::synthetic_gaussians(k);
  ds.train.images = Tensor<float>(n, 2);
  ds.train.labels.resize(n);
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) {
    ds.train.labels[i] = static_cast<int>(i % k);
    ds.train.images.at(i, 0) = static_cast<float>(rng.uniform());
    ds.train.images.at(i, 1) = static_cast<float>(rng.uniform());
  }
  ds.test = ds.train;
  return ds;
}

}  // namespace

TEST_CASE("stratified quotas: remainder goes to low class indices") {
  const auto ds = toy_dataset(200, 10);
  const auto split = data::stratified_select(ds, 25, 0);
  std::map<int, int> per_class;
  for (std::size_t i = 0; i < split.labeled.count(); ++i)
    ++per_class[split.labeled.labels[i]];
  for (int k = 0; k < 10; ++k) CHECK(per_class[k] == (k < 5 ? 3 : 2));
  CHECK(split.labeled.count() == 25);
  CHECK(split.unlabeled.rows() == 175);
  CHECK(std::is_sorted(split.labeled_indices.begin(),
                       split.labeled_indices.end()));
  // labeled and unlabeled partition the train set
  std::vector<std::size_t> all = split.labeled_indices;
  all.insert(all.end(), split.unlabeled_indices.begin(),
             split.unlabeled_indices.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("stratified selection is seed-deterministic") {
  const auto ds = toy_dataset(200, 10);
  const auto a = data::stratified_select(ds, 30, 7);
  const auto b = data::stratified_select(ds, 30, 7);
  const auto c = data::stratified_select(ds, 30, 8);
  CHECK(a.labeled_indices == b.labeled_indices);
  CHECK(a.labeled_indices != c.labeled_indices);
}

TEST_CASE("representative selection picks centroid-nearest examples") {
  data::Dataset ds;
  ds.spec = DatasetSpec::synthetic_gaussians(2);
  // class 0 clustered at x=0.2 with one outlier, class 1 at x=0.8
  const float xs[] = {0.2f, 0.21f, 0.19f, 0.95f, 0.8f, 0.81f, 0.79f, 0.1f};
  const int ys[] = {0, 0, 0, 0, 1, 1, 1, 1};
  ds.train.images = Tensor<float>(8, 2);
  ds.train.labels.assign(ys, ys + 8);
  for (std::size_t i = 0; i < 8; ++i) {
    ds.train.images.at(i, 0) = xs[i];
    ds.train.images.at(i, 1) = 0.5f;
  }
  ds.test = ds.train;
  const auto split = data::representative_select(ds, 4, 0);
  // outliers (indices 3 and 7) must not be chosen
  for (auto i : split.labeled_indices) {
    CHECK(i != 3);
    CHECK(i != 7);
  }
  const auto again = data::representative_select(ds, 4, 99);
  CHECK(split.labeled_indices == again.labeled_indices);  // seed-free choice
}

TEST_CASE("synthetic moons: ranges, counts, determinism, zero noise") {
  const auto spec = DatasetSpec::synthetic_moons();
  const auto ds = data::make_synthetic(spec, 100, 0.05, 3);
  CHECK(ds.train.count() == 200);
  CHECK(ds.test.count() == 500);
  for (float v : ds.train.images.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  int c0 = 0;
  for (int y : ds.train.labels) c0 += (y == 0);
  CHECK(c0 == 100);
  const auto ds2 = data::make_synthetic(spec, 100, 0.05, 3);
  CHECK(ds.train.images.data == ds2.train.images.data);
  const auto ds3 = data::make_synthetic(spec, 100, 0.05, 4);
  CHECK(ds.train.images.data != ds3.train.images.data);
  // zero noise: every class-0 point lies on the parametric arc
  const auto clean = data::make_synthetic(spec, 50, 0.0, 0);
  for (std::size_t i = 0; i < clean.train.count(); ++i) {
    if (clean.train.labels[i] != 0) continue;
    const double x = clean.train.images.at(i, 0) * 3.6 - 1.3;
    const double y = clean.train.images.at(i, 1) * 2.1 - 0.8;
    CHECK(std::abs(x * x + y * y - 1.0) < 1e-5);
  }
}

TEST_CASE("synthetic gaussians-ring: class centers on the ring") {
  const auto spec = DatasetSpec::synthetic_gaussians(4);
  const auto ds = data::make_synthetic(spec, 200, 0.02, 1);
  std::vector<double> cx(4, 0), cy(4, 0);
  std::vector<int> cnt(4, 0);
  for (std::size_t i = 0; i < ds.train.count(); ++i) {
    const int y = ds.train.labels[i];
    cx[y] += ds.train.images.at(i, 0);
    cy[y] += ds.train.images.at(i, 1);
    ++cnt[y];
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(cnt[k] == 200);
    const double ex = 0.5 + 0.35 * std::cos(2.0 * M_PI * k / 4);
    const double ey = 0.5 + 0.35 * std::sin(2.0 * M_PI * k / 4);
    CHECK(std::abs(cx[k] / cnt[k] - ex) < 0.01);
    CHECK(std::abs(cy[k] / cnt[k] - ey) < 0.01);
  }
}

TEST_CASE("zca: diagonal covariance inverts exactly") {
  // four points with sample covariance diag(2, 0.5)
  Tensor<float> x(4, 2);
  x.at(0, 0) = 2;  x.at(1, 0) = -2;
  x.at(2, 1) = 1;  x.at(3, 1) = -1;
  const auto zca = data::zca_fit(x, 1e-8);
  CHECK(std::abs(zca.w.at(0, 0) - 1.0 / std::sqrt(2.0)) < 1e-5);
  CHECK(std::abs(zca.w.at(1, 1) - 1.0 / std::sqrt(0.5)) < 1e-5);
  CHECK(std::abs(zca.w.at(0, 1)) < 1e-6);
  CHECK(zca.w.at(0, 1) == zca.w.at(1, 0));
  const auto w = zca.apply(x);
  // whitened covariance is the identity
  double c00 = 0, c11 = 0, c01 = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    c00 += w.at(i, 0) * w.at(i, 0) / 4;
    c11 += w.at(i, 1) * w.at(i, 1) / 4;
    c01 += w.at(i, 0) * w.at(i, 1) / 4;
  }
  CHECK(std::abs(c00 - 1.0) < 1e-4);
  CHECK(std::abs(c11 - 1.0) < 1e-4);
  CHECK(std::abs(c01) < 1e-4);
}

TEST_CASE("zca input validation") {
  Tensor<float> x(1, 2);
  CHECK_THROWS(data::zca_fit(x, 1e-2));
  Tensor<float> y(4, 2);
  CHECK_THROWS(data::zca_fit(y, 0.0));
}

TEST_CASE("batch stream: epoch coverage and determinism") {
  const auto ds = toy_dataset(107, 4);
  const auto split = data::stratified_select(ds, 8, 0);
  // 99 unlabeled, batch 10 -> 9 steps, short batch dropped
  data::BatchStream s1(split, 10, 3, 0);
  CHECK(s1.steps() == 9);
  data::LabeledSet lb;
  Tensor<float> ub;
  std::vector<float> seen1;
  std::size_t steps = 0;
  while (s1.next(&lb, &ub)) {
    ++steps;
    CHECK(lb.count() == 10);
    CHECK(ub.rows() == 10);
    seen1.insert(seen1.end(), ub.data.begin(), ub.data.end());
  }
  CHECK(steps == 9);
  data::BatchStream s2(split, 10, 3, 0);
  std::vector<float> seen2;
  while (s2.next(&lb, &ub))
    seen2.insert(seen2.end(), ub.data.begin(), ub.data.end());
  CHECK(seen1 == seen2);  // same seed+epoch, same bytes
  data::BatchStream s3(split, 10, 3, 1);
  std::vector<float> seen3;
  while (s3.next(&lb, &ub))
    seen3.insert(seen3.end(), ub.data.begin(), ub.data.end());
  CHECK(seen1 != seen3);  // new epoch, new order
}

TEST_CASE("mnist idx loader" * doctest::skip(!fs::exists(
              fs::path(data_dir()) / "mnist" / "train-images-idx3-ubyte"))) {
  auto spec = DatasetSpec::mnist();
  spec.train_count = 200;
  spec.val_count = 50;
  spec.test_count = 100;
  const auto ds = data::load_dataset(spec, data_dir());
  CHECK(ds.train.count() == 200);
  CHECK(ds.test.count() == 100);
  REQUIRE(ds.validation.has_value());
  CHECK(ds.validation->count() == 50);
  for (float v : ds.train.images.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  for (int y : ds.train.labels) {
    CHECK(y >= 0);
    CHECK(y <= 9);
  }
  // validation records start where train stopped: disjoint slices
  CHECK(std::memcmp(ds.train.images.row(0), ds.validation->images.row(0),
                    784 * sizeof(float)) != 0);
}

TEST_CASE("cifar10 bin loader" * doctest::skip(!fs::exists(
              fs::path(data_dir()) / "cifar10" / "data_batch_1.bin"))) {
  auto spec = DatasetSpec::cifar10();
  spec.train_count = 300;
  spec.val_count = 0;
  spec.test_count = 100;
  const auto ds = data::load_dataset(spec, data_dir());
  CHECK(ds.train.count() == 300);
  CHECK(ds.test.count() == 100);
  CHECK(ds.train.images.cols() == 3072);
  for (int y : ds.train.labels) {
    CHECK(y >= 0);
    CHECK(y <= 9);
  }
}

TEST_CASE("svhn mat loader" * doctest::skip(!fs::exists(
              fs::path(data_dir()) / "svhn" / "train_32x32.mat"))) {
  auto spec = DatasetSpec::svhn();
  spec.train_count = 200;
  spec.val_count = 0;
  spec.test_count = 100;
  const auto ds = data::load_dataset(spec, data_dir());
  CHECK(ds.train.count() == 200);
  CHECK(ds.test.count() == 100);
  CHECK(ds.train.images.cols() == 3072);
  bool saw_zero = false;
  for (int y : ds.train.labels) {
    CHECK(y >= 0);
    CHECK(y <= 9);
    saw_zero = saw_zero || (y == 0);  // MAT label 10 remapped to 0
  }
  CHECK(saw_zero);
}
