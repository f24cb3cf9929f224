#include "krrd/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "krrd/errors.hpp"

namespace krrd {

CholFactor chol_shifted(const Matrix& G, double shift) {
  if (G.rows() != G.cols()) throw DimensionMismatch("chol_shifted: matrix must be square");
  if (!(shift > 0.0)) throw InvalidArgument("chol_shifted: shift must be positive");
  const double scale = std::max(G.diagonal().mean(), shift);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 11; ++attempt) {
    Matrix A = G;
    A.diagonal().array() += shift + jitter;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) return CholFactor{Matrix(llt.matrixL()), shift, jitter};
    jitter = (jitter == 0.0) ? 1e-12 * scale : 2.0 * jitter;
  }
  throw FactorizationFailed("chol_shifted: matrix not positive definite after jitter escalation (n=" +
                            std::to_string(G.rows()) + ")");
}

Matrix solve(const CholFactor& F, const Matrix& B) {
  if (B.rows() != F.lower.rows()) throw DimensionMismatch("solve: dimension mismatch");
  Matrix Y = F.lower.triangularView<Eigen::Lower>().solve(B);
  return F.lower.transpose().triangularView<Eigen::Upper>().solve(Y);
}

Vector solve(const CholFactor& F, const Vector& b) {
  if (b.size() != F.lower.rows()) throw DimensionMismatch("solve: dimension mismatch");
  Vector y = F.lower.triangularView<Eigen::Lower>().solve(b);
  return F.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

double logdet(const CholFactor& F) { return 2.0 * F.lower.diagonal().array().log().sum(); }

}  // namespace krrd
