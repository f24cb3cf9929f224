#include "krrd/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "krrd/errors.hpp"

namespace krrd {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIter = 30000;

// Taylor coefficients of 1/Gamma(1+t) around t = 0.
constexpr double kInvGamma[] = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.04200263503409523553,
    0.16653861138229148950,
    -0.04219773455554433675,
    -0.00962197152787697356,
    0.00721894324666309954,
};

// gam1 = [1/Gamma(1-mu) - 1/Gamma(1+mu)] / (2 mu), gam2 = [1/Gamma(1-mu) + 1/Gamma(1+mu)] / 2.
// The difference cancels badly for small mu, where the Taylor form takes over.
void temme_gammas(double mu, double& gam1, double& gam2) {
  if (std::abs(mu) < 1e-3) {
    const double m2 = mu * mu;
    gam1 = -(kInvGamma[1] + m2 * (kInvGamma[3] + m2 * (kInvGamma[5] + m2 * kInvGamma[7])));
    gam2 = kInvGamma[0] + m2 * (kInvGamma[2] + m2 * (kInvGamma[4] + m2 * kInvGamma[6]));
  } else {
    const double gp = 1.0 / std::tgamma(1.0 + mu);
    const double gm = 1.0 / std::tgamma(1.0 - mu);
    gam1 = (gm - gp) / (2.0 * mu);
    gam2 = (gm + gp) / 2.0;
  }
}

// Temme's series for K_mu and K_{mu+1}; requires |mu| <= 1/2 and 0 < x <= 2.
void bessel_k_small(double mu, double x, double& kmu, double& kmu1) {
  const double x2 = x / 2.0;
  const double pimu = std::numbers::pi * mu;
  const double fact = (std::abs(pimu) < kEps) ? 1.0 : pimu / std::sin(pimu);
  const double d = -std::log(x2);
  const double e = mu * d;
  const double fact2 = (std::abs(e) < kEps) ? 1.0 : std::sinh(e) / e;
  double gam1, gam2;
  temme_gammas(mu, gam1, gam2);
  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  const double ee = std::exp(e);
  double p = 0.5 * ee / (gam2 - mu * gam1);    // 0.5 (2/x)^mu Gamma(1+mu)
  double q = 0.5 / (ee * (gam2 + mu * gam1));  // 0.5 (x/2)^mu Gamma(1-mu)
  double c = 1.0;
  const double x4 = x2 * x2;
  double sum1 = p;
  for (int k = 1; k <= kMaxIter; ++k) {
    ff = (k * ff + p + q) / (k * k - mu * mu);
    c *= x4 / k;
    p /= (k - mu);
    q /= (k + mu);
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - k * ff);
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  kmu = sum;
  kmu1 = sum1 * (2.0 / x);
}

// Steed/Thompson-Barnett continued fraction CF2; requires |mu| <= 1/2 and x > 2.
void bessel_k_large(double mu, double x, double& kmu, double& kmu1) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h = a1 * h;
  const double rk = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  kmu = rk;
  kmu1 = rk * (mu + x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(double nu, double x) {
  nu = std::abs(nu);
  if (!(x > 0.0)) throw DomainViolation("bessel_k: argument must be positive");
  const int nl = static_cast<int>(std::floor(nu + 0.5));
  const double mu = nu - nl;  // in [-1/2, 1/2]
  double kmu, kmu1;
  if (x <= 2.0)
    bessel_k_small(mu, x, kmu, kmu1);
  else
    bessel_k_large(mu, x, kmu, kmu1);
  if (nl == 0) return kmu;
  double km = kmu;
  double k1 = kmu1;
  for (int i = 1; i < nl; ++i) {
    const double knew = 2.0 * (mu + i) / x * k1 + km;
    km = k1;
    k1 = knew;
  }
  return k1;
}

}  // namespace krrd
