#include <Eigen/Dense>
#include <stdexcept>

#include "ganssl/datasets.hpp"

namespace ganssl::data {

// W = E diag(1/sqrt(lambda + eps)) E^T over the pixel covariance, so the
// whitened data has (near-)identity covariance while staying in pixel space.
ZCAWhitener zca_fit(const Tensor<float>& images, double epsilon) {
  const std::size_t n = images.rows();
  const std::size_t d = images.cols();
  if (n < 2) throw std::invalid_argument("zca_fit: need at least 2 samples");
  if (epsilon <= 0.0) throw std::invalid_argument("zca_fit: epsilon must be > 0");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = images.at(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("zca_fit: eigendecomposition failed");
  const Eigen::VectorXd scale =
      (eig.eigenvalues().array() + epsilon).rsqrt();
  Eigen::MatrixXd w = eig.eigenvectors() * scale.asDiagonal() *
                      eig.eigenvectors().transpose();
  // exact symmetry survives the float cast below
  w = 0.5 * (w + w.transpose()).eval();

  ZCAWhitener zca;
  zca.epsilon = epsilon;
  zca.mean = Tensor<float>(std::vector<std::size_t>{d});
  zca.w = Tensor<float>(d, d);
  for (std::size_t j = 0; j < d; ++j)
    zca.mean.data[j] = static_cast<float>(mean(j));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      zca.w.at(i, j) = static_cast<float>(w(i, j));
  return zca;
}

}  // namespace ganssl::data
