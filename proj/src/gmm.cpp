#include "gmm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rng.hpp"

namespace dfs {

namespace {

constexpr double kConvergenceTol = 1e-8;
constexpr int kMaxIterations = 500;
constexpr double kRidgeFactor = 1e-6;
constexpr double kAbsoluteRidge = 1e-10;

void add_ridge(Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(cov.rows());
  const double tr = cov.trace();
  const double ridge = tr > 0.0 ? kRidgeFactor * tr / n : kAbsoluteRidge;
  cov.diagonal().array() += ridge;
}

struct CholCache {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

CholCache factor(const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd c = cov;
  CholCache cache;
  for (int attempt = 0; attempt < 8; ++attempt) {
    cache.llt.compute(c);
    if (cache.llt.info() == Eigen::Success) {
      cache.log_det =
          2.0 * cache.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      return cache;
    }
    add_ridge(c);
    c.diagonal().array() += kAbsoluteRidge;
  }
  fail(ErrorCode::Numerical, "GMM covariance factorization failed");
}

double log_gaussian(const CholCache& chol, const Eigen::VectorXd& mean,
                    const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  const Eigen::VectorXd diff = x - mean;
  const Eigen::VectorXd sol = chol.llt.matrixL().solve(diff);
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + chol.log_det +
                 sol.squaredNorm());
}

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// m distinct row indices, preferring rows with distinct values
std::vector<int> pick_initial_means(const Eigen::MatrixXd& pts, int m,
                                    Rng& rng) {
  const int n = static_cast<int>(pts.rows());
  std::vector<int> chosen;
  auto is_new_value = [&](int idx) {
    for (int c : chosen)
      if (pts.row(c) == pts.row(idx)) return false;
    return true;
  };
  // bounded number of draws aiming for distinct values
  for (int attempt = 0; attempt < 64 * m && static_cast<int>(chosen.size()) < m;
       ++attempt) {
    const int idx = static_cast<int>(rng.below(n));
    if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end() &&
        is_new_value(idx))
      chosen.push_back(idx);
  }
  // fall back to distinct indices when distinct values run out
  while (static_cast<int>(chosen.size()) < m) {
    const int idx = static_cast<int>(rng.below(n));
    if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end())
      chosen.push_back(idx);
  }
  return chosen;
}

}  // namespace

GmmModel fit_gmm_em(const Eigen::MatrixXd& pts, int m, std::uint64_t seed) {
  const int n = static_cast<int>(pts.rows());
  const int dim = static_cast<int>(pts.cols());
  require(m >= 1, ErrorCode::InvalidArgument, "component count must be >= 1");
  require(n >= m, ErrorCode::InvalidArgument,
          "need at least as many points as components");

  const Eigen::VectorXd data_mean = pts.colwise().mean();
  const Eigen::MatrixXd centered = pts.rowwise() - data_mean.transpose();
  Eigen::MatrixXd data_cov =
      centered.transpose() * centered / std::max(1, n - 1);

  GmmModel model;
  if (data_cov.trace() <= 0.0) {
    // all points identical: single-point component with ridge covariance
    model.weights = {1.0};
    model.means = {data_mean};
    Eigen::MatrixXd cov =
        Eigen::MatrixXd::Identity(dim, dim) * kAbsoluteRidge;
    model.covs = {cov};
    model.degenerate = true;
    const CholCache chol = factor(cov);
    double ll = 0.0;
    for (int i = 0; i < n; ++i)
      ll += log_gaussian(chol, data_mean, pts.row(i).transpose());
    model.log_likelihood = ll;
    model.loglik_trace = {ll};
    return model;
  }

  add_ridge(data_cov);
  Rng rng(seed);
  const std::vector<int> init = pick_initial_means(pts, m, rng);
  model.weights.assign(m, 1.0 / m);
  for (int c = 0; c < m; ++c) {
    model.means.push_back(pts.row(init[c]).transpose());
    model.covs.push_back(data_cov);
  }

  Eigen::MatrixXd resp(n, m);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    // E-step
    std::vector<CholCache> chols;
    chols.reserve(m);
    for (int c = 0; c < m; ++c) chols.push_back(factor(model.covs[c]));
    double ll = 0.0;
    std::vector<double> logp(m);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = pts.row(i).transpose();
      for (int c = 0; c < m; ++c)
        logp[c] = std::log(std::max(model.weights[c], 1e-300)) +
                  log_gaussian(chols[c], model.means[c], x);
      const double lse = log_sum_exp(logp);
      ll += lse;
      for (int c = 0; c < m; ++c) resp(i, c) = std::exp(logp[c] - lse);
    }
    model.loglik_trace.push_back(ll);
    model.log_likelihood = ll;
    if (std::abs(ll - prev_ll) < kConvergenceTol) break;
    prev_ll = ll;

    // M-step
    for (int c = 0; c < m; ++c) {
      const double nk = resp.col(c).sum();
      if (nk <= 1e-12) {
        // collapsed component: keep parameters, zero weight
        model.weights[c] = nk / n;
        continue;
      }
      model.weights[c] = nk / n;
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < n; ++i) mu += resp(i, c) * pts.row(i).transpose();
      mu /= nk;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd d = pts.row(i).transpose() - mu;
        cov += resp(i, c) * (d * d.transpose());
      }
      cov /= nk;
      add_ridge(cov);
      model.means[c] = mu;
      model.covs[c] = cov;
    }
  }
  return model;
}

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x) {
  std::vector<double> logp(model.components());
  for (int c = 0; c < model.components(); ++c) {
    const CholCache chol = factor(model.covs[c]);
    logp[c] = std::log(std::max(model.weights[c], 1e-300)) +
              log_gaussian(chol, model.means[c], x);
  }
  return log_sum_exp(logp);
}

long long gmm_dof(int m, int n, bool paper_dof) {
  const long long cov_terms = static_cast<long long>(n) * (n + 1) / 2;
  if (paper_dof) return static_cast<long long>(m) * (1 + cov_terms) - 1;
  return static_cast<long long>(m) * n + static_cast<long long>(m) * cov_terms +
         m - 1;
}

double bic(const GmmModel& model, const Eigen::MatrixXd& points,
           bool paper_dof) {
  const int n_points = static_cast<int>(points.rows());
  require(n_points > 0, ErrorCode::InvalidArgument, "BIC needs data");
  double ll = 0.0;
  std::vector<CholCache> chols;
  chols.reserve(model.components());
  for (int c = 0; c < model.components(); ++c)
    chols.push_back(factor(model.covs[c]));
  std::vector<double> logp(model.components());
  for (int i = 0; i < n_points; ++i) {
    const Eigen::VectorXd x = points.row(i).transpose();
    for (int c = 0; c < model.components(); ++c)
      logp[c] = std::log(std::max(model.weights[c], 1e-300)) +
                log_gaussian(chols[c], model.means[c], x);
    ll += log_sum_exp(logp);
  }
  const long long dof =
      gmm_dof(model.components(), model.dim(), paper_dof);
  return -2.0 * ll + static_cast<double>(dof) * std::log(n_points);
}

GmmSelection select_gmm(const Eigen::MatrixXd& points,
                        std::span<const int> candidates, std::uint64_t seed,
                        bool paper_dof) {
  require(!candidates.empty(), ErrorCode::InvalidArgument,
          "candidate set is empty");
  GmmSelection sel;
  double best = std::numeric_limits<double>::infinity();
  bool any_ok = false;
  for (int m : candidates) {
    GmmModel model = fit_gmm_em(points, m, seed + static_cast<std::uint64_t>(m));
    const double score = bic(model, points, paper_dof);
    sel.bic_trace.emplace_back(m, score);
    if (model.degenerate) continue;
    if (score < best) {
      best = score;
      sel.model = std::move(model);
      sel.chosen_m = m;
    }
    any_ok = true;
  }
  require(any_ok, ErrorCode::InvalidData,
          "every candidate GMM fit was degenerate");
  return sel;
}

Eigen::MatrixXd sample_gmm(const GmmModel& model, int n, std::uint64_t seed) {
  require(n >= 0, ErrorCode::InvalidArgument, "sample count must be >= 0");
  require(model.components() >= 1, ErrorCode::InvalidArgument,
          "empty mixture");
  const int dim = model.dim();
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(model.components());
  for (int c = 0; c < model.components(); ++c)
    factors.push_back(factor(model.covs[c]).llt.matrixL());

  Rng rng(seed);
  Eigen::MatrixXd out(n, dim);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int comp = 0;
    double cum = model.weights[0];
    while (u > cum && comp + 1 < model.components()) {
      ++comp;
      cum += model.weights[comp];
    }
    Eigen::VectorXd xi(dim);
    for (int d = 0; d < dim; ++d) xi(d) = rng.normal();
    out.row(i) = (model.means[comp] + factors[comp] * xi).transpose();
  }
  return out;
}

}  // namespace dfs
