#include "krrd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "krrd/errors.hpp"
#include "krrd/rng.hpp"

namespace krrd {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kGrid = 2001;

// cos(theta + k pi/2) and sin(theta + k pi/2) from (cos theta, sin theta)
double cos_shift(int k, double ct, double st) {
  switch (((k % 4) + 4) % 4) {
    case 0: return ct;
    case 1: return -st;
    case 2: return -ct;
    default: return st;
  }
}
double sin_shift(int k, double ct, double st) {
  switch (((k % 4) + 4) % 4) {
    case 0: return st;
    case 1: return ct;
    case 2: return -st;
    default: return -ct;
  }
}

// sup_x sum_i w_i (psi_i^(m)(x))^2 for non-negative decreasing weights.
// Pairs fold to S(x) = B + (-1)^m sum_j r_j cos(4 pi j x) with r_j >= 0, so
// even m attains the sup at x = 0 exactly; odd m is scanned on the grid and
// the truncated tail is added as an upper correction.
double weighted_diag_sup(const Vector& w, int m) {
  const Index N = w.size();
  const Index pairs = N / 2;
  double base = (m == 0) ? w[0] : 0.0;
  Vector ripple(pairs);
  for (Index j = 1; j <= pairs; ++j) {
    const double wc = w[2 * j - 1];
    const double ws = (2 * j + 1 <= N) ? w[2 * j] : 0.0;
    const double fac = std::pow(kTwoPi * static_cast<double>(j), 2 * m);
    base += fac * (wc + ws);
    ripple[j - 1] = fac * (wc - ws);
  }
  if (m % 2 == 0) return base + ripple.sum();

  // keep only the ripple head that matters; the dropped tail is added back
  // as an upper bound
  const double total = ripple.sum();
  Index cut = pairs;
  double tail = 0.0;
  while (cut > 1 && tail + ripple[cut - 1] <= 1e-13 * (base + total)) {
    tail += ripple[cut - 1];
    --cut;
  }
  double best = -total;
  for (int g = 0; g < kGrid; ++g) {
    const double x = static_cast<double>(g) / (kGrid - 1);
    const std::complex<double> rot = std::polar(1.0, 2.0 * kTwoPi * x);
    std::complex<double> z = rot;
    double s = 0.0;
    for (Index j = 1; j <= cut; ++j) {
      if (j % 256 == 0) z = std::polar(1.0, 2.0 * kTwoPi * x * static_cast<double>(j));
      s -= ripple[j - 1] * z.real();
      z *= rot;
    }
    best = std::max(best, s);
  }
  return base + best + tail;
}

}  // namespace

SpectralKernel SpectralKernel::create(double alpha, Index terms) {
  if (!(alpha > 0.0)) throw InvalidArgument("SpectralKernel: alpha must be positive");
  if (terms < 1) throw InvalidArgument("SpectralKernel: terms must be >= 1");
  SpectralKernel k;
  k.alpha = alpha;
  k.mu.resize(terms);
  for (Index i = 0; i < terms; ++i) k.mu[i] = std::pow(static_cast<double>(i + 1), -2.0 * alpha);
  return k;
}

Index SpectralKernel::default_terms(double alpha, double lambda_min) {
  const double by_lambda = 50.0 * std::pow(lambda_min, -1.0 / (2.0 * alpha));
  return std::max<Index>(100000, static_cast<Index>(std::ceil(by_lambda)));
}

KernelSpec SpectralKernel::as_kernel_spec() const {
  return KernelSpec::spectral(alpha, static_cast<int>(terms()));
}

Vector equivalent_eigenvalues(const SpectralKernel& k, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("equivalent_eigenvalues: lambda must be positive");
  return k.mu.array() / (lambda + k.mu.array());
}

double effective_dimension_beta(const SpectralKernel& k, double lambda, int m) {
  if (m < 0) throw InvalidArgument("effective_dimension_beta: m must be >= 0");
  if (!(k.alpha > m + 0.5))
    throw SmoothnessViolation("effective_dimension_beta: requires alpha > m + 1/2 (alpha=" +
                              std::to_string(k.alpha) + ", m=" + std::to_string(m) + ")");
  return weighted_diag_sup(equivalent_eigenvalues(k, lambda), m);
}

double kappa_beta(const SpectralKernel& k, int m) {
  if (!(k.alpha > m + 0.5))
    throw SmoothnessViolation("kappa_beta: requires alpha > m + 1/2");
  return std::sqrt(weighted_diag_sup(k.mu, m));
}

double kappa_beta(const KernelSpec& k, const MultiIndex& beta) {
  if (const auto* sp = std::get_if<kernel_detail::Spectral>(&k.family())) {
    SpectralKernel s;
    s.alpha = sp->alpha;
    s.mu = *sp->mu;
    return kappa_beta(s, beta[0]);
  }
  const int d = beta.dim();
  if (d > 2) throw InvalidArgument("kappa_beta: grid sup implemented for d <= 2");
  double best = 0.0;
  if (d == 1) {
    for (int g = 0; g < kGrid; ++g) {
      const Vector x = point1(static_cast<double>(g) / (kGrid - 1));
      best = std::max(best, partial(k, beta, beta, x, x));
    }
  } else {
    for (int g = 0; g < kGrid; ++g)
      for (int h = 0; h < kGrid; ++h) {
        Vector x(2);
        x << static_cast<double>(g) / (kGrid - 1), static_cast<double>(h) / (kGrid - 1);
        best = std::max(best, partial(k, beta, beta, x, x));
      }
  }
  return std::sqrt(best);
}

Vector f_lambda_expand(const Vector& f0_coeffs, const SpectralKernel& k, double lambda) {
  if (lambda < 0.0) throw InvalidArgument("f_lambda_expand: lambda must be >= 0");
  if (f0_coeffs.size() > k.terms())
    throw DimensionMismatch("f_lambda_expand: more coefficients than kernel terms");
  const auto mu = k.mu.head(f0_coeffs.size()).array();
  return (mu / (mu + lambda)) * f0_coeffs.array();
}

Vector f_lambda_gap_coeffs(const Vector& f0_coeffs, const SpectralKernel& k, double lambda) {
  if (lambda < 0.0) throw InvalidArgument("f_lambda_gap_coeffs: lambda must be >= 0");
  if (f0_coeffs.size() > k.terms())
    throw DimensionMismatch("f_lambda_gap_coeffs: more coefficients than kernel terms");
  const auto mu = k.mu.head(f0_coeffs.size()).array();
  return (-lambda / (lambda + mu)) * f0_coeffs.array();
}

double fourier_eval(const Vector& coeffs, int m, double x) {
  const Index M = coeffs.size();
  double acc = (m == 0) ? coeffs[0] : 0.0;
  const std::complex<double> rot = std::polar(1.0, kTwoPi * x);
  std::complex<double> z = rot;
  for (Index j = 1; 2 * j <= M; ++j) {
    if (j % 256 == 0) z = std::polar(1.0, kTwoPi * x * static_cast<double>(j));
    const double fac = std::numbers::sqrt2 * std::pow(kTwoPi * static_cast<double>(j), m);
    acc += fac * coeffs[2 * j - 1] * cos_shift(m, z.real(), z.imag());
    if (2 * j + 1 <= M) acc += fac * coeffs[2 * j] * sin_shift(m, z.real(), z.imag());
    z *= rot;
  }
  return acc;
}

SupNorm fourier_sup_norm(const Vector& coeffs, int m, int grid_points) {
  SupNorm out;
  for (int g = 0; g < grid_points; ++g) {
    const double x = static_cast<double>(g) / (grid_points - 1);
    out.value = std::max(out.value, std::abs(fourier_eval(coeffs, m, x)));
  }
  double lip = 0.0;
  for (Index i = 1; i < coeffs.size(); ++i) {
    const double freq = static_cast<double>((i + 1) / 2);
    lip += std::abs(coeffs[i]) * std::numbers::sqrt2 * std::pow(kTwoPi * freq, m + 1);
  }
  out.gap_bound = lip * 0.5 / (grid_points - 1);
  return out;
}

HolderFunction HolderFunction::standard(double alpha, Index terms) {
  if (!(alpha > 0.0)) throw InvalidArgument("HolderFunction: alpha must be positive");
  HolderFunction f;
  f.alpha_smoothness = alpha;
  f.coefficients.resize(terms);
  for (Index i = 0; i < terms; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    f.coefficients[i] = sign * std::pow(static_cast<double>(i + 1), -alpha - 1.01);
  }
  const double sup = fourier_sup_norm(f.coefficients, 0).value;
  f.coefficients /= sup;
  f.holder_norm = 0.0;
  for (Index i = 0; i < terms; ++i)
    f.holder_norm += std::pow(static_cast<double>(i + 1), alpha) * std::abs(f.coefficients[i]);
  return f;
}

double HolderFunction::eval(int k, double x) const {
  if (k > max_order())
    throw UnsupportedDerivativeOrder("HolderFunction: derivative order exceeds floor(alpha)");
  return fourier_eval(coefficients, k, x);
}

BoundReport theorem1_bound(const SpectralKernel& k, const HolderFunction& f0, double lambda,
                           Index n, double sigma, int beta_order) {
  BoundReport rep;
  rep.caveat = "universal constant C set to 1; calibration value, not a certified bound";
  rep.kappa_tilde2 = effective_dimension_beta(k, lambda, 0);
  rep.kappa_tilde_beta2 = effective_dimension_beta(k, lambda, beta_order);
  rep.kappa_beta = kappa_beta(k, beta_order);
  const double t = std::sqrt(20.0 * std::log(static_cast<double>(n)) / static_cast<double>(n));
  const double kt = std::sqrt(rep.kappa_tilde2);
  rep.C_n_kappa = rep.kappa_tilde2 * t * (4.0 + 4.0 * kt * t / 3.0);
  const Vector gap = f_lambda_gap_coeffs(f0.coefficients, k, lambda);
  const SupNorm gm = fourier_sup_norm(gap, beta_order);
  const SupNorm g0 = fourier_sup_norm(gap, 0);
  rep.flambda_gap_sup = gm.value + gm.gap_bound;
  rep.flambda_gap0_sup = g0.value + g0.gap_bound;
  if (rep.C_n_kappa >= 1.0)
    throw NonContractive("theorem1_bound: C(n, kappa~) = " + std::to_string(rep.C_n_kappa) +
                         " >= 1; bound non-informative at this (n, lambda)");
  const double ktb = std::sqrt(rep.kappa_tilde_beta2);
  const double contraction = rep.C_n_kappa / (1.0 - rep.C_n_kappa);
  rep.bound_value = rep.flambda_gap_sup + ktb / kt * contraction * rep.flambda_gap0_sup +
                    1.0 / (1.0 - rep.C_n_kappa) * ktb * kt * sigma * t;
  return rep;
}

BoundReport theorem2_bound(const SpectralKernel& k, const HolderFunction& f0, double lambda,
                           Index n, double sigma, int beta_order, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) throw InvalidArgument("theorem2_bound: delta in (0,1)");
  BoundReport rep;
  rep.caveat = "universal constant C set to 1; calibration value, not a certified bound";
  rep.kappa_tilde2 = effective_dimension_beta(k, lambda, 0);
  rep.kappa_tilde_beta2 = effective_dimension_beta(k, lambda, beta_order);
  rep.kappa_beta = kappa_beta(k, beta_order);
  const double t = std::sqrt(20.0 * std::log(static_cast<double>(n)) / static_cast<double>(n));
  rep.C_n_kappa = rep.kappa_tilde2 * t * (4.0 + 4.0 * std::sqrt(rep.kappa_tilde2) * t / 3.0);
  const Vector gap = f_lambda_gap_coeffs(f0.coefficients, k, lambda);
  const SupNorm gm = fourier_sup_norm(gap, beta_order);
  const SupNorm g0 = fourier_sup_norm(gap, 0);
  rep.flambda_gap_sup = gm.value + gm.gap_bound;
  rep.flambda_gap0_sup = g0.value + g0.gap_bound;
  const double kappa = kappa_beta(k, 0);
  const SupNorm f0sup = fourier_sup_norm(f0.coefficients, 0);
  const double big_m = std::max(f0sup.value + f0sup.gap_bound, sigma);
  const double logd = std::log(1.0 / delta);
  const double rootn = std::sqrt(static_cast<double>(n));
  const double stoch = 2.0 * kappa * rep.kappa_beta * big_m * std::sqrt(logd) / (rootn * lambda) *
                       (10.0 + 2.0 + 8.0 * kappa * std::sqrt(logd) /
                                          (3.0 * std::sqrt(static_cast<double>(n) * lambda)));
  rep.bound_value = rep.flambda_gap_sup + stoch;
  return rep;
}

NormCheckResult rkhs_norm_inequality_check(const SpectralKernel& k, double lambda, int m,
                                           int trials, std::uint64_t seed, double exponent) {
  if (exponent < 0.5) throw InvalidArgument("rkhs_norm_inequality_check: exponent must be >= 1/2");
  const Index M = std::min<Index>(k.terms(), 2000);
  // basis-derivative design matrix on the grid, one column per basis function
  Matrix psi(kGrid, M);
  for (int g = 0; g < kGrid; ++g) {
    const double x = static_cast<double>(g) / (kGrid - 1);
    psi(g, 0) = (m == 0) ? 1.0 : 0.0;
    const std::complex<double> rot = std::polar(1.0, kTwoPi * x);
    std::complex<double> z = rot;
    for (Index j = 1; 2 * j <= M; ++j) {
      if (j % 256 == 0) z = std::polar(1.0, kTwoPi * x * static_cast<double>(j));
      const double fac = std::numbers::sqrt2 * std::pow(kTwoPi * static_cast<double>(j), m);
      psi(g, 2 * j - 1) = fac * cos_shift(m, z.real(), z.imag());
      if (2 * j + 1 <= M) psi(g, 2 * j) = fac * sin_shift(m, z.real(), z.imag());
      z *= rot;
    }
  }
  Rng rng(seed);
  Matrix coef(M, trials);
  for (int t = 0; t < trials; ++t)
    for (Index i = 0; i < M; ++i) coef(i, t) = rng.normal() * std::pow(k.mu[i], exponent);
  const Matrix vals = psi * coef;
  const double kt_m = std::sqrt(effective_dimension_beta(k, lambda, m));
  const double kap_m = kappa_beta(k, m);
  const auto mu = k.mu.head(M).array();
  NormCheckResult out;
  for (int t = 0; t < trials; ++t) {
    const double sup = vals.col(t).cwiseAbs().maxCoeff();
    const auto c2 = coef.col(t).array().square();
    const double norm_equiv = std::sqrt((c2 * (lambda + mu) / mu).sum());
    const double norm_plain = std::sqrt((c2 / mu).sum());
    out.max_ratio_equivalent = std::max(out.max_ratio_equivalent, sup / (kt_m * norm_equiv));
    out.max_ratio_plain = std::max(out.max_ratio_plain, sup / (kap_m * norm_plain));
  }
  return out;
}

}  // namespace krrd
