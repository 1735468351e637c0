#include <doctest.h>

#include <cmath>

#include "gmm.hpp"
#include "rng.hpp"

using namespace dfs;

namespace {

Eigen::MatrixXd gaussian_blob(int n, const Eigen::VectorXd& mean, double sigma,
                              Rng& rng) {
  Eigen::MatrixXd x(n, mean.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < mean.size(); ++j)
      x(i, j) = mean(j) + sigma * rng.normal();
  return x;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace

TEST_CASE("single component fit recovers mean and covariance") {
  Rng rng(1);
  Eigen::VectorXd mu(2);
  mu << 3.0, -1.0;
  const Eigen::MatrixXd x = gaussian_blob(300, mu, 0.7, rng);
  const GmmModel g = fit_gmm_em(x, 1, 9);
  REQUIRE(g.components() == 1);
  CHECK(g.weights[0] == doctest::Approx(1.0));

  const Eigen::VectorXd sample_mean = x.colwise().mean();
  CHECK((g.means[0] - sample_mean).norm() < 1e-9);

  const Eigen::MatrixXd centered = x.rowwise() - sample_mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / x.rows();
  // ridge added in the M-step
  cov.diagonal().array() += 1e-6 * cov.trace() / 2;
  CHECK((g.covs[0] - cov).norm() < 1e-6 * cov.norm());
}

TEST_CASE("two well-separated 1D clusters are recovered") {
  Rng rng(2);
  Eigen::VectorXd m1(1), m2(1);
  m1 << -10.0;
  m2 << 10.0;
  const Eigen::MatrixXd x = vstack(gaussian_blob(200, m1, 0.5, rng),
                                   gaussian_blob(200, m2, 0.5, rng));
  const GmmModel g = fit_gmm_em(x, 2, 5);
  REQUIRE(g.components() == 2);
  const double lo = std::min(g.means[0](0), g.means[1](0));
  const double hi = std::max(g.means[0](0), g.means[1](0));
  CHECK(std::abs(lo + 10.0) < 0.2);
  CHECK(std::abs(hi - 10.0) < 0.2);
  CHECK(g.weights[0] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("EM log-likelihood never decreases") {
  Rng rng(3);
  Eigen::VectorXd m1(2), m2(2);
  m1 << 0.0, 0.0;
  m2 << 4.0, -2.0;
  const Eigen::MatrixXd x = vstack(gaussian_blob(120, m1, 1.0, rng),
                                   gaussian_blob(80, m2, 0.8, rng));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GmmModel g = fit_gmm_em(x, 3, seed);
    for (size_t i = 1; i < g.loglik_trace.size(); ++i)
      CHECK(g.loglik_trace[i] >=
            g.loglik_trace[i - 1] -
                1e-9 * std::max(1.0, std::abs(g.loglik_trace[i - 1])));
  }
}

TEST_CASE("degenerate data collapses to a flagged point mass") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(20, 3, 1.5);
  const GmmModel g = fit_gmm_em(x, 2, 1);
  CHECK(g.degenerate);
  CHECK(g.components() == 1);
  CHECK((g.means[0] - Eigen::VectorXd::Constant(3, 1.5)).norm() < 1e-12);
  CHECK_THROWS_AS(select_gmm(x, std::vector<int>{1, 2}, 3), Error);
}

TEST_CASE("BIC degrees of freedom, both conventions") {
  CHECK(gmm_dof(2, 3, true) == 13);   // 2*(1+6)-1
  CHECK(gmm_dof(1, 1, true) == 1);    // 1*(1+1)-1
  CHECK(gmm_dof(2, 3, false) == 2 * 3 + 2 * 6 + 1);
  CHECK(gmm_dof(1, 1, false) == 1 + 1 + 0);
}

TEST_CASE("BIC penalty rises with the dof at fixed likelihood") {
  Rng rng(4);
  Eigen::VectorXd mu(2);
  mu << 0.0, 0.0;
  const Eigen::MatrixXd x = gaussian_blob(100, mu, 1.0, rng);
  const GmmModel g = fit_gmm_em(x, 1, 2);
  const double b_paper = bic(g, x, true);
  const double b_std = bic(g, x, false);
  // same fit, same likelihood; the standard count has more parameters
  CHECK(b_std > b_paper);
}

TEST_CASE("select_gmm with a single candidate returns that fit") {
  Rng rng(5);
  Eigen::VectorXd mu(2);
  mu << 1.0, 2.0;
  const Eigen::MatrixXd x = gaussian_blob(80, mu, 1.0, rng);
  const GmmSelection sel = select_gmm(x, std::vector<int>{1}, 11);
  CHECK(sel.chosen_m == 1);
  CHECK(sel.bic_trace.size() == 1);
}

TEST_CASE("selection is deterministic per seed") {
  Rng rng(6);
  Eigen::VectorXd m1(2), m2(2);
  m1 << -5.0, 0.0;
  m2 << 5.0, 0.0;
  const Eigen::MatrixXd x = vstack(gaussian_blob(100, m1, 0.5, rng),
                                   gaussian_blob(100, m2, 0.5, rng));
  const std::vector<int> h{1, 2, 3, 4};
  const GmmSelection a = select_gmm(x, h, 17);
  const GmmSelection b = select_gmm(x, h, 17);
  CHECK(a.chosen_m == b.chosen_m);
  CHECK(a.bic_trace == b.bic_trace);
}

TEST_CASE("three separated clusters select m=3 in most seeds") {
  Rng rng(7);
  Eigen::VectorXd m1(2), m2(2), m3(2);
  m1 << -10.0, 0.0;
  m2 << 10.0, 0.0;
  m3 << 0.0, 10.0;
  const Eigen::MatrixXd x =
      vstack(vstack(gaussian_blob(120, m1, 0.3, rng),
                    gaussian_blob(120, m2, 0.3, rng)),
             gaussian_blob(120, m3, 0.3, rng));
  const std::vector<int> h{1, 2, 3, 4, 5, 6};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    if (select_gmm(x, h, seed).chosen_m == 3) ++hits;
  CHECK(hits >= 8);
}

TEST_CASE("sampling matches the mixture it came from") {
  Rng rng(8);
  GmmModel g;
  g.weights = {1.0};
  g.means = {Eigen::Vector2d(2.0, -3.0)};
  g.covs = {Eigen::Matrix2d::Identity() * 1e-12};
  const Eigen::MatrixXd near_delta = sample_gmm(g, 50, 3);
  for (int i = 0; i < near_delta.rows(); ++i) {
    CHECK(std::abs(near_delta(i, 0) - 2.0) < 1e-5);
    CHECK(std::abs(near_delta(i, 1) + 3.0) < 1e-5);
  }

  // Monte Carlo mean of a 2-component mixture
  GmmModel mix;
  mix.weights = {0.3, 0.7};
  mix.means = {Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(2.0, 1.0)};
  mix.covs = {Eigen::Matrix2d::Identity() * 0.25,
              Eigen::Matrix2d::Identity() * 0.25};
  const int n = 100000;
  const Eigen::MatrixXd draws = sample_gmm(mix, n, 4);
  const Eigen::Vector2d mean = draws.colwise().mean();
  const Eigen::Vector2d expected =
      0.3 * mix.means[0] + 0.7 * mix.means[1];
  // component spread dominates the mixture variance; 3 sigma / sqrt(n)
  const double sigma = 1.6;
  CHECK((mean - expected).norm() < 3 * sigma / std::sqrt(n));

  // zero-weight components are never drawn
  GmmModel zw;
  zw.weights = {1.0, 0.0};
  zw.means = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(100.0, 100.0)};
  zw.covs = {Eigen::Matrix2d::Identity() * 0.01,
             Eigen::Matrix2d::Identity() * 0.01};
  const Eigen::MatrixXd zd = sample_gmm(zw, 1000, 5);
  for (int i = 0; i < zd.rows(); ++i) CHECK(zd(i, 0) < 50.0);
}
