#include "geostat.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "rng.hpp"

namespace dfs {

namespace {

double correlation(const CovarianceSpec& s, double hx, double hy, double hz) {
  const double h =
      std::sqrt(hx * hx / (s.lx * s.lx) + hy * hy / (s.ly * s.ly) +
                hz * hz / (s.lz * s.lz));
  return s.model == CovarianceModel::Exponential ? std::exp(-h)
                                                 : std::exp(-h * h);
}

}  // namespace

GaussianFieldSampler::GaussianFieldSampler(const Grid& grid,
                                           const CovarianceSpec& spec)
    : grid_(grid), spec_(spec) {
  require(spec.lx > 0 && spec.ly > 0 && spec.lz > 0,
          ErrorCode::InvalidArgument, "correlation lengths must be > 0");
  require(spec.std_log_k >= 0, ErrorCode::InvalidArgument,
          "std_log_k must be >= 0");
  const int n = grid.num_cells();
  require(n <= 8192, ErrorCode::InvalidArgument,
          "grid too large for dense covariance factorization (max 8192 cells)");

  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    const auto [xi, yi, zi] = grid.cell_xyz(i);
    for (int j = 0; j <= i; ++j) {
      const auto [xj, yj, zj] = grid.cell_xyz(j);
      const double v = correlation(spec, (xi - xj) * grid.dx,
                                   (yi - yj) * grid.dy, (zi - zj) * grid.dz);
      c(i, j) = v;
      c(j, i) = v;
    }
  }

  for (double jitter : {1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd cj = c;
    cj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cj);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      return;
    }
  }
  fail(ErrorCode::Numerical,
       "covariance factorization failed after jitter escalation to 1e-6");
}

std::vector<double> GaussianFieldSampler::sample_standardized(
    std::uint64_t seed) const {
  const int n = grid_.num_cells();
  Rng rng(seed);
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi(i) = rng.normal();
  Eigen::VectorXd z = chol_ * xi;
  return std::vector<double>(z.data(), z.data() + n);
}

CellField GaussianFieldSampler::sample_permeability(std::uint64_t seed) const {
  const std::vector<double> z = sample_standardized(seed);
  CellField k = make_cell_field(grid_, 0.0, "m^2");
  for (int i = 0; i < grid_.num_cells(); ++i)
    k.values[i] = std::exp(spec_.mean_log_k + spec_.std_log_k * z[i]);
  return k;
}

CellField sample_log_perm_field(const Grid& grid, const CovarianceSpec& spec,
                                std::uint64_t seed) {
  return GaussianFieldSampler(grid, spec).sample_permeability(seed);
}

}  // namespace dfs
