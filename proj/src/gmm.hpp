#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"

namespace dfs {

struct GmmModel {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;  // full covariances, SPD after ridge
  double log_likelihood = 0.0;        // on the fitting data, at convergence
  bool degenerate = false;            // collapsed to a single point
  std::vector<double> loglik_trace;   // per EM iteration

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

// EM fit with seeded initialization: means drawn as m distinct data points,
// covariances started at the data covariance plus ridge, uniform weights.
// Stops when the log-likelihood improves by less than 1e-8 or after 500
// iterations. Every M-step re-adds ridge 1e-6 * trace(Sigma)/dim * I.
GmmModel fit_gmm_em(const Eigen::MatrixXd& points, int m, std::uint64_t seed);

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x);

// Degrees of freedom for the BIC penalty. paper_dof uses
// m*(1 + n(n+1)/2) - 1; the standard count is m*n + m*n(n+1)/2 + m - 1.
long long gmm_dof(int m, int n, bool paper_dof);

double bic(const GmmModel& model, const Eigen::MatrixXd& points,
           bool paper_dof = true);

struct GmmSelection {
  GmmModel model;
  int chosen_m = 0;
  std::vector<std::pair<int, double>> bic_trace;  // (m, BIC) per candidate
};

// Fits one GMM per candidate m (seed offset by m) and keeps the BIC
// minimizer; ties resolve to the smallest m. Errors if every fit collapsed.
GmmSelection select_gmm(const Eigen::MatrixXd& points,
                        std::span<const int> candidates, std::uint64_t seed,
                        bool paper_dof = true);

// rows of the result are draws
Eigen::MatrixXd sample_gmm(const GmmModel& model, int n, std::uint64_t seed);

}  // namespace dfs
