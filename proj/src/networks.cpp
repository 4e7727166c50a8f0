#include "ganssl/networks.hpp"

namespace ganssl {

DatasetSpec DatasetSpec::mnist() {
  return {"mnist", 28, 28, 1, 10, 50000, 10000, 10000};
}

DatasetSpec DatasetSpec::svhn() {
  return {"svhn", 32, 32, 3, 10, 73257, 0, 26032};
}

DatasetSpec DatasetSpec::cifar10() {
  return {"cifar10", 32, 32, 3, 10, 50000, 0, 10000};
}

DatasetSpec DatasetSpec::synthetic_moons(bool raster8x8) {
  DatasetSpec s{"synthetic-moons", 1, 2, 1, 2, 0, 0, 0};
  if (raster8x8) {
    s.height = 8;
    s.width = 8;
  }
  return s;
}

DatasetSpec DatasetSpec::synthetic_gaussians(std::size_t k, bool raster8x8) {
  DatasetSpec s{"synthetic-gaussians", 1, 2, 1, k, 0, 0, 0};
  if (raster8x8) {
    s.height = 8;
    s.width = 8;
  }
  return s;
}

DatasetSpec DatasetSpec::by_name(const std::string& name) {
  if (name == "mnist") return mnist();
  if (name == "svhn") return svhn();
  if (name == "cifar10") return cifar10();
  if (name == "synthetic-moons") return synthetic_moons();
  if (name == "synthetic-gaussians") return synthetic_gaussians();
  throw std::invalid_argument("unknown dataset: " + name);
}

}  // namespace ganssl
