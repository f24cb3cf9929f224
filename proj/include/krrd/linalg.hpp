#pragma once

#include "krrd/types.hpp"

namespace krrd {

/// Cholesky factor of G + (shift + jitter) I with the jitter actually applied.
struct CholFactor {
  Matrix lower;
  double shift = 0.0;
  double jitter_used = 0.0;

  Index n() const { return lower.rows(); }
};

/// Factorizes G + shift I, escalating an absolute diagonal jitter from
/// 1e-12 * mean(diag G) through 10 doublings before giving up.
CholFactor chol_shifted(const Matrix& G, double shift);

/// (G + (shift + jitter) I)^{-1} B via two triangular solves.
Matrix solve(const CholFactor& F, const Matrix& B);
Vector solve(const CholFactor& F, const Vector& b);

/// log det(G + (shift + jitter) I)
double logdet(const CholFactor& F);

}  // namespace krrd
