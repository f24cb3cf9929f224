#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "krrd/kernels.hpp"
#include "krrd/types.hpp"

namespace krrd {

struct TuneResult {
  double lambda = 0.0;
  double sigma2 = 0.0;
  std::optional<double> nu;
  double objective_value = 0.0;  // maximized LML, or minimized LOO MSE for tune_nu
  std::vector<std::pair<double, double>> trace;
};

/// Marginal likelihood of y | X ~ N(0, sigma^2 (n lambda)^{-1} K + sigma^2 I),
/// evaluated through one Cholesky of K + n lambda I.
double log_marginal_likelihood(const KernelSpec& kernel, const Matrix& X, const Vector& y,
                               double lambda, double sigma2);
/// Same, with the Gram matrix supplied directly.
double log_marginal_likelihood_gram(const Matrix& G, const Vector& y, double lambda, double sigma2);

/// Grid search over lambda with sigma^2 profiled in closed form, refined by
/// golden section on log lambda between the grid neighbors of the maximizer.
TuneResult tune_mmle(const KernelSpec& kernel, const Matrix& X, const Vector& y,
                     const std::vector<double>& lambda_grid);

/// Closed-form leave-one-out residuals e_i = (y_i - f_i) / (1 - H_ii).
Vector loo_residuals(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda);
double loo_mse(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda);

/// Matern nu by leave-one-out CV of the regression fit; lambda and sigma^2 by
/// MMLE per candidate. Ties break toward smaller nu.
TuneResult tune_nu(const Matrix& X, const Vector& y, const std::vector<double>& nu_candidates,
                   const std::vector<double>& lambda_grid);

/// count log-spaced values on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> default_lambda_grid();
std::vector<double> default_nu_candidates();

}  // namespace krrd
