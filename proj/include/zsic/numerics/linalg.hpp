#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "zsic/errors.hpp"
#include "zsic/numerics/matrix.hpp"

namespace zsic {

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Throws NumericalError when a pivot is not positive.
inline Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw UsageError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      const double cond = min_pivot > 0.0 && std::isfinite(min_pivot) ? max_pivot / min_pivot
                                                                       : std::numeric_limits<double>::infinity();
      throw NumericalError("cholesky: matrix is not positive definite at column " + std::to_string(j), cond);
    }
    max_pivot = std::max(max_pivot, d);
    min_pivot = std::min(min_pivot, d);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

/// Solves (L L^T) X = B given the Cholesky factor L.
inline Matrix cholesky_solve(const Matrix& l, const Matrix& b) {
  const std::size_t n = l.rows();
  if (b.rows() != n) throw UsageError("cholesky_solve: right-hand side has wrong row count");
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

/// Closed-form minimizer of ||E W - Y||_F^2 + reg ||W||_F^2 in dual form,
/// W = E^T (E E^T + reg I)^{-1} Y. E is C x d, Y is C x C, W is d x C.
inline Matrix ridge_solve(const Matrix& e, const Matrix& y, double reg) {
  if (!(reg > 0.0)) throw UsageError("ridge_solve: regularizer must be positive");
  if (e.rows() != y.rows()) throw UsageError("ridge_solve: E and Y row counts differ");
  if (!e.all_finite() || !y.all_finite()) throw UsageError("ridge_solve: non-finite input");
  const std::size_t c = e.rows();
  Matrix gram(c, c);
  matmul_nt_acc(e, e, gram);
  for (std::size_t i = 0; i < c; ++i) gram(i, i) += reg;
  const Matrix alpha = cholesky_solve(cholesky(gram), y);
  Matrix w(e.cols(), y.cols());
  matmul_tn_acc(e, alpha, w);
  return w;
}

}  // namespace zsic
