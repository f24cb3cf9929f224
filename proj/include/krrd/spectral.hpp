#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "krrd/kernels.hpp"
#include "krrd/types.hpp"

namespace krrd {

/// Truncated eigen-system mu_i = i^{-2 alpha} on the orthonormal Fourier basis
/// psi_1 = 1, psi_{2j} = sqrt2 cos(2 pi j x), psi_{2j+1} = sqrt2 sin(2 pi j x),
/// realizing a kernel with polynomially decaying eigenvalues on [0,1].
struct SpectralKernel {
  double alpha = 0.0;
  Vector mu;

  Index terms() const { return mu.size(); }
  static SpectralKernel create(double alpha, Index terms);
  /// Truncation heuristic keeping the tail of the order-m sums below 0.1%.
  static Index default_terms(double alpha, double lambda_min);
  /// The same eigen-system as a KernelSpec for the estimator path.
  KernelSpec as_kernel_spec() const;
};

/// Fourier-coefficient function with summable i^alpha |f_i| tail.
struct HolderFunction {
  Vector coefficients;
  double alpha_smoothness = 0.0;
  double holder_norm = 0.0;  // sum_i i^alpha |f_i|

  /// f_i = A i^{-alpha-1.01} with alternating signs, A scaled so sup|f| ~= 1.
  static HolderFunction standard(double alpha, Index terms);
  /// Term-wise k-th derivative at x; requires k <= floor(alpha).
  double eval(int k, double x) const;
  int max_order() const { return static_cast<int>(alpha_smoothness); }
};

struct BoundReport {
  double kappa_tilde2 = 0.0;       // sup of the equivalent-kernel diagonal
  double kappa_tilde_beta2 = 0.0;  // its order-beta analog
  double kappa_beta = 0.0;         // sqrt sup of the order-beta kernel diagonal
  double C_n_kappa = 0.0;
  double flambda_gap_sup = 0.0;  // sup_x |d^beta f_lambda - d^beta f_0|
  double flambda_gap0_sup = 0.0;
  double bound_value = 0.0;
  std::string caveat;  // records that unknown universal constants are set to 1
};

struct SupNorm {
  double value = 0.0;      // max |series| over the evaluation grid
  double gap_bound = 0.0;  // Lipschitz bound on the grid-induced underestimate
};

/// nu_i = mu_i / (lambda + mu_i), the equivalent-kernel eigenvalues.
Vector equivalent_eigenvalues(const SpectralKernel& k, double lambda);

/// kappa-tilde_{alpha,mm}^2 = sup_x sum_i nu_i (psi_i^(m)(x))^2. Even orders
/// attain the sup at x = 0; odd orders are scanned on a 2001-point grid.
double effective_dimension_beta(const SpectralKernel& k, double lambda, int m);

/// sqrt sup_x of sum_i w_i (psi_i^(m)(x))^2 with w = mu (the plain kernel).
double kappa_beta(const SpectralKernel& k, int m);
/// Grid-sup route for arbitrary kernels: sqrt sup_x d^{beta,beta} K(x,x) over
/// a 2001-point-per-axis grid on [0,1]^d, d <= 2.
double kappa_beta(const KernelSpec& k, const MultiIndex& beta);

/// Ridge-shrunk coefficients (mu_i / (mu_i + lambda)) f_i of the proximate
/// function; the gap f_lambda - f_0 has coefficients -(lambda/(lambda+mu_i)) f_i.
Vector f_lambda_expand(const Vector& f0_coeffs, const SpectralKernel& k, double lambda);
Vector f_lambda_gap_coeffs(const Vector& f0_coeffs, const SpectralKernel& k, double lambda);

/// Sup of |sum_i c_i psi_i^(m)(x)| over a uniform grid, with a reported bound
/// on how far below the true sup the grid value can sit.
SupNorm fourier_sup_norm(const Vector& coeffs, int m, int grid_points = 2001);
/// Series value at one point.
double fourier_eval(const Vector& coeffs, int m, double x);

BoundReport theorem1_bound(const SpectralKernel& k, const HolderFunction& f0, double lambda,
                           Index n, double sigma, int beta_order);
BoundReport theorem2_bound(const SpectralKernel& k, const HolderFunction& f0, double lambda,
                           Index n, double sigma, int beta_order, double delta);

struct NormCheckResult {
  double max_ratio_equivalent = 0.0;  // |d^m f|_inf / (kt_m |f|_{H~})
  double max_ratio_plain = 0.0;       // |d^m f|_inf / (kappa_m |f|_H)
  double max_ratio() const { return std::max(max_ratio_equivalent, max_ratio_plain); }
};

/// Randomized check of the derivative/norm inequalities: draws f with
/// coefficients g_i mu_i^s and returns the largest observed ratios, which the
/// theory caps at 1.
NormCheckResult rkhs_norm_inequality_check(const SpectralKernel& k, double lambda, int m,
                                           int trials, std::uint64_t seed, double exponent = 0.5);

}  // namespace krrd
