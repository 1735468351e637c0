#pragma once

#include <span>
#include <vector>

#include "error.hpp"

namespace dfs {

// Compressed sparse row matrix, assumed symmetric positive definite by the
// solver. The FVM assembly produces the full (symmetric) pattern.
struct SparseSpd {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
};

// Triplet-style builder with one entry per (row, col); duplicate adds fold
// into the same slot. Rows must be filled in order of assembly convenience.
class SpdBuilder {
 public:
  explicit SpdBuilder(int n) : n_(n), entries_(n) {}
  void add(int row, int col, double value);
  SparseSpd build() const;  // sorts columns within each row

 private:
  int n_;
  std::vector<std::vector<std::pair<int, double>>> entries_;
};

struct CgOptions {
  double rel_tol = 1e-10;
  int max_iters = 0;  // 0 means 10 * n
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double rel_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradient with deterministic iteration
// order. Converged when ||A x - b||_2 <= rel_tol * ||b||_2 (true residual).
// Throws Numerical with the residual attached on non-convergence.
CgResult solve_spd(const SparseSpd& a, std::span<const double> b,
                   CgOptions opts = {});

}  // namespace dfs
