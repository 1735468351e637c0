#pragma once

#include <Eigen/Dense>

#include "error.hpp"

namespace dfs {

// PCA encoder/decoder. `basis` columns are orthonormal; eigenvalues are of
// the sample covariance (Bessel-corrected), sorted descending.
struct PcaModel {
  Eigen::MatrixXd basis;        // D x k
  Eigen::VectorXd mean;         // D
  Eigen::VectorXd eigenvalues;  // k retained
  double threshold = 0.95;
  double total_variance = 0.0;  // sum of all nonzero eigenvalues
  int dim() const { return static_cast<int>(basis.rows()); }
  int latent_dim() const { return static_cast<int>(basis.cols()); }
};

// X rows are samples. k is the smallest count whose cumulative retained
// variance reaches the threshold. All-constant data has no variance to
// retain and raises invalid-data.
PcaModel fit_pca(const Eigen::MatrixXd& x, double threshold);

Eigen::VectorXd pca_encode(const PcaModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd pca_decode(const PcaModel& model, const Eigen::VectorXd& z);

}  // namespace dfs
