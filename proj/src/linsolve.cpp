#include "linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dfs {

void SparseSpd::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

void SpdBuilder::add(int row, int col, double value) {
  require(row >= 0 && row < n_ && col >= 0 && col < n_,
          ErrorCode::InvalidArgument, "matrix entry out of range");
  for (auto& [c, v] : entries_[row]) {
    if (c == col) {
      v += value;
      return;
    }
  }
  entries_[row].emplace_back(col, value);
}

SparseSpd SpdBuilder::build() const {
  SparseSpd a;
  a.n = n_;
  a.row_ptr.resize(n_ + 1, 0);
  size_t nnz = 0;
  for (const auto& row : entries_) nnz += row.size();
  a.col.reserve(nnz);
  a.val.reserve(nnz);
  for (int i = 0; i < n_; ++i) {
    auto row = entries_[i];
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      a.col.push_back(c);
      a.val.push_back(v);
    }
    a.row_ptr[i + 1] = static_cast<int>(a.col.size());
  }
  return a;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

CgResult solve_spd(const SparseSpd& a, std::span<const double> b,
                   CgOptions opts) {
  require(a.n == static_cast<int>(b.size()), ErrorCode::InvalidArgument,
          "matrix/rhs dimension mismatch");
  const int n = a.n;
  const int max_iters = opts.max_iters > 0 ? opts.max_iters : 10 * n;

  CgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return res;  // x = 0 solves exactly

  std::vector<double> inv_diag(n, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (a.col[k] == i && a.val[k] != 0.0) inv_diag[i] = 1.0 / a.val[k];
    }
  }

  std::vector<double> r(b.begin(), b.end());  // r = b - A*0
  std::vector<double> z(n), p(n), ap(n);
  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);

  const double tol = opts.rel_tol * bnorm;
  for (int it = 1; it <= max_iters; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0)
      fail(ErrorCode::Numerical, "matrix is not positive definite in CG");
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) res.x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    res.iterations = it;
    if (norm2(r) <= tol) {
      // recursive residual converged; confirm with the true residual
      a.multiply(res.x, ap);
      for (int i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      const double true_norm = norm2(r);
      if (true_norm <= tol) {
        res.rel_residual = true_norm / bnorm;
        return res;
      }
      for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      rz = dot(r, z);
      p = z;
      continue;
    }
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  std::ostringstream msg;
  msg << "CG did not converge in " << max_iters
      << " iterations; relative residual " << norm2(r) / bnorm;
  fail(ErrorCode::Numerical, msg.str());
}

}  // namespace dfs
