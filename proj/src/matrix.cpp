#include "lbopt/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "lbopt/errors.hpp"

namespace lbopt {

Matrix Matrix::identity(int size) {
  Matrix m(size);
  for (int i = 0; i < size; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t.at(j, i) = at(i, j);
  return t;
}

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
  Matrix out(lhs.n);
  for (int i = 0; i < lhs.n; ++i)
    for (int k = 0; k < lhs.n; ++k) {
      const double v = lhs.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < lhs.n; ++j) out.at(i, j) += v * rhs.at(k, j);
    }
  return out;
}

void matvec(const Matrix& m, const double* x, double* y) {
  for (int i = 0; i < m.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n; ++j) s += m.at(i, j) * x[j];
    y[i] = s;
  }
}

void matvec_t(const Matrix& m, const double* x, double* y) {
  for (int j = 0; j < m.n; ++j) y[j] = 0.0;
  for (int i = 0; i < m.n; ++i) {
    const double v = x[i];
    if (v == 0.0) continue;
    for (int j = 0; j < m.n; ++j) y[j] += m.at(i, j) * v;
  }
}

Matrix inverse(const Matrix& m, double* abs_det, double tol) {
  using Emat = Eigen::MatrixXd;
  Emat em(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) em(i, j) = m.at(i, j);

  Eigen::FullPivLU<Emat> lu(em);
  const double det = std::abs(lu.determinant());
  if (abs_det) *abs_det = det;
  if (!(det > tol)) throw ConfigError("matrix not invertible (|det| <= tolerance)");

  const Emat inv = lu.inverse();
  Matrix out(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) out.at(i, j) = inv(i, j);
  return out;
}

}  // namespace lbopt
