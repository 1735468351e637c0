#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "grid.hpp"

namespace dfs {

enum class CovarianceModel { Exponential, Gaussian };

struct CovarianceSpec {
  CovarianceModel model = CovarianceModel::Exponential;
  double lx = 1.0, ly = 1.0, lz = 1.0;  // correlation lengths [m]
  double mean_log_k = -29.9336;         // ln(1e-13 m^2)
  double std_log_k = 1.0;
};

// Unconditional stationary Gaussian field sampler over cell centers.
// Factors the cell-center correlation matrix once (with jitter escalation
// 1e-10 -> 1e-8 -> 1e-6) and reuses the factor across realizations, so
// generating many fields for one grid/covariance pair is cheap.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const Grid& grid, const CovarianceSpec& spec);

  // Z ~ N(0, C) where C is the unit-variance correlation matrix
  std::vector<double> sample_standardized(std::uint64_t seed) const;

  // K = exp(mean_log_k + std_log_k * Z), units m^2
  CellField sample_permeability(std::uint64_t seed) const;

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  CovarianceSpec spec_;
  Eigen::MatrixXd chol_;  // lower factor of C + jitter*I
};

// one-shot convenience wrapper
CellField sample_log_perm_field(const Grid& grid, const CovarianceSpec& spec,
                                std::uint64_t seed);

}  // namespace dfs
