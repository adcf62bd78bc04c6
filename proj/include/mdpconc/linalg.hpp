#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mdpconc/errors.hpp"

namespace mdpconc {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized for desk-scale problems (n up to a few
// hundred), so no sparsity or blocking.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // y = A x
  Vec apply(const Vec& x) const {
    Vec y(rows_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      const double* row = &a_[static_cast<std::size_t>(r) * cols_];
      for (int c = 0; c < cols_; ++c) acc += row[c] * x[c];
      y[r] = acc;
    }
    return y;
  }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

// Solves A x = b by LU factorization with partial pivoting. A is copied.
// Throws SingularSystem when a pivot collapses.
inline Vec lu_solve(Matrix a, Vec b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw DimensionMismatch("lu_solve: square system required");

  double scale = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) scale = std::max(scale, std::fabs(a(r, c)));
  const double tiny = (scale > 0 ? scale : 1.0) * 1e-13;

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::fabs(a(k, k));
    for (int r = k + 1; r < n; ++r) {
      const double v = std::fabs(a(r, k));
      if (v > best) { best = v; pivot = r; }
    }
    if (best < tiny)
      throw SingularSystem("pivot " + std::to_string(k) + " below threshold");
    if (pivot != k) {
      for (int c = 0; c < n; ++c) std::swap(a(k, c), a(pivot, c));
      std::swap(b[k], b[pivot]);
    }
    for (int r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      a(r, k) = 0.0;
      if (f == 0.0) continue;
      for (int c = k + 1; c < n; ++c) a(r, c) -= f * a(k, c);
      b[r] -= f * b[k];
    }
  }

  Vec x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a(r, c) * x[c];
    x[r] = acc / a(r, r);
  }
  return x;
}

inline double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace mdpconc
