#pragma once

#include <optional>
#include <string>

#include "krrd/kernels.hpp"
#include "krrd/linalg.hpp"
#include "krrd/types.hpp"

namespace krrd {

/// Fitted kernel ridge regression model. One fit serves every derivative
/// order: predictions of any order read the same dual weights and lambda.
/// Immutable after construction and safe to share across threads.
struct FittedKRR {
  KernelSpec kernel;
  Matrix X;
  Vector dual_weights;  // (K(X,X) + n lambda I)^{-1} y
  CholFactor chol;
  double lambda = 0.0;
  std::optional<double> sigma2;

  Index n() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }
};

FittedKRR fit(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda,
              std::optional<double> sigma2 = std::nullopt);

/// [partial^beta K(x_t, X)] dual_weights for each query row x_t.
Vector predict_deriv(const FittedKRR& m, const MultiIndex& beta, const Matrix& xs);

/// Pointwise variance sigma^2 r^T (K + n lambda I)^{-2} r under Gaussian noise.
Vector predict_variance(const FittedKRR& m, const MultiIndex& beta, const Matrix& xs);

/// Max-abs gap at the training points between the closed-form predictions and
/// an independent conjugate-gradient minimizer of the penalized least-squares
/// objective (1/n)|y - Kc|^2 + lambda c^T K c.
double representer_check(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda);

std::string model_to_json(const FittedKRR& m);
FittedKRR model_from_json(const std::string& text);

}  // namespace krrd
