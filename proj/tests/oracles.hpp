#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "teimit/teprog.hpp"

namespace teimit::oracle {

/// Dense solve by Gaussian elimination with partial pivoting.
inline std::optional<Vector> gauss_solve(Matrix a, Vector b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    if (std::abs(a(piv, k)) < 1e-13) return std::nullopt;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      std::swap(b[k], b[piv]);
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (Eigen::Index i = n; i-- > 0;) {
    double s = b[i];
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// max c'x over {A x <= b, x >= 0} by enumerating every basic point: each
/// choice of n active constraints among the m + n that has a unique solution
/// and is feasible.
inline double vertex_enumeration_max(const CanonicalLP& lp) {
  const Matrix A(lp.A);
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const int total = m + n;
  Matrix G(total, n);
  Vector h(total);
  G.topRows(m) = A;
  h.head(m) = lp.b;
  G.bottomRows(n) = -Matrix::Identity(n, n);
  h.tail(n).setZero();

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  for (;;) {
    Matrix M(n, n);
    Vector r(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = G.row(pick[static_cast<std::size_t>(i)]);
      r[i] = h[pick[static_cast<std::size_t>(i)]];
    }
    if (auto x = gauss_solve(M, r)) {
      const Vector slack = h - G * *x;
      const double tol = 1e-9 * (1.0 + h.cwiseAbs().maxCoeff());
      if (slack.minCoeff() >= -tol) best = std::max(best, lp.c.dot(*x));
    }
    int i = n - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == total - n + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return best;
}

}  // namespace teimit::oracle
