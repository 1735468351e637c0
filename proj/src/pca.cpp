#include "pca.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace dfs {

PcaModel fit_pca(const Eigen::MatrixXd& x, double threshold) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  require(n >= 2, ErrorCode::InvalidArgument, "PCA needs at least 2 samples");
  require(threshold > 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument,
          "variance threshold must be in (0, 1]");

  PcaModel model;
  model.threshold = threshold;
  model.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  const int r = static_cast<int>(sv.size());
  Eigen::VectorXd lambda(r);
  for (int i = 0; i < r; ++i) lambda(i) = sv(i) * sv(i) / (n - 1);

  // drop numerically-zero directions
  const double cutoff = lambda.size() > 0 ? lambda(0) * 1e-12 : 0.0;
  int rank = 0;
  double total = 0.0;
  for (int i = 0; i < r; ++i) {
    if (lambda(i) > cutoff) {
      ++rank;
      total += lambda(i);
    }
  }
  require(rank > 0 && total > 0.0, ErrorCode::InvalidData,
          "PCA input has no variance (all samples identical)");
  model.total_variance = total;

  int k = rank;
  double cum = 0.0;
  for (int i = 0; i < rank; ++i) {
    cum += lambda(i);
    if (cum / total >= threshold) {
      k = i + 1;
      break;
    }
  }

  model.basis = svd.matrixV().leftCols(k);
  model.eigenvalues = lambda.head(k);
  // fix column signs for reproducible serialized models: the entry of
  // largest magnitude is made positive
  for (int j = 0; j < k; ++j) {
    int arg = 0;
    model.basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.basis(arg, j) < 0.0) model.basis.col(j) *= -1.0;
  }
  (void)d;
  return model;
}

Eigen::VectorXd pca_encode(const PcaModel& model, const Eigen::VectorXd& x) {
  require(x.size() == model.mean.size(), ErrorCode::InvalidArgument,
          "encode dimension mismatch");
  return model.basis.transpose() * (x - model.mean);
}

Eigen::VectorXd pca_decode(const PcaModel& model, const Eigen::VectorXd& z) {
  require(z.size() == model.basis.cols(), ErrorCode::InvalidArgument,
          "decode dimension mismatch");
  return model.basis * z + model.mean;
}

}  // namespace dfs
