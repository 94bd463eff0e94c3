// Test-only reference implementations, deliberately independent of the
// library code paths they check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Cyclic Jacobi eigenvalue iteration for symmetric matrices; returns the
// eigenvalues sorted descending. No Eigen decompositions involved.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a,
                                              int sweeps = 60) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * a.squaredNorm()) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

inline std::vector<double> gram_singular_values(const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd gram = s.transpose() * s;
  std::vector<double> eig = jacobi_eigenvalues(gram);
  for (double& v : eig) v = std::sqrt(std::max(0.0, v));
  return eig;
}

// Plain Gaussian elimination with partial pivoting.
inline Eigen::MatrixXd dense_solve(Eigen::MatrixXd a, Eigen::MatrixXd b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a(row, col)) > std::abs(a(pivot, col))) pivot = row;
    a.row(col).swap(a.row(pivot));
    b.row(col).swap(b.row(pivot));
    for (int row = col + 1; row < n; ++row) {
      const double factor = a(row, col) / a(col, col);
      a.row(row) -= factor * a.row(col);
      b.row(row) -= factor * b.row(col);
    }
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, b.cols());
  for (int row = n - 1; row >= 0; --row) {
    Eigen::RowVectorXd acc = b.row(row);
    for (int col = row + 1; col < n; ++col) acc -= a(row, col) * x.row(col);
    x.row(row) = acc / a(row, row);
  }
  return x;
}

}  // namespace oracle
