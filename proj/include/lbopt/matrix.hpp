#pragma once

#include <cstddef>
#include <vector>

namespace lbopt {

// Small dense square matrix of doubles, row-major. Used for moment bases and
// per-node Jacobians; sizes stay <= 28 so nothing fancy is needed.
struct Matrix {
  int n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static Matrix identity(int size);
  Matrix transposed() const;
};

Matrix operator*(const Matrix& lhs, const Matrix& rhs);

// y = M x (x, y length n).
void matvec(const Matrix& m, const double* x, double* y);
// y = M^T x.
void matvec_t(const Matrix& m, const double* x, double* y);

// Inverse via LU with full pivoting (delegated to Eigen). Returns the absolute
// determinant through |det|; throws ConfigError when |det| < tol.
Matrix inverse(const Matrix& m, double* abs_det = nullptr, double tol = 1e-12);

}  // namespace lbopt
