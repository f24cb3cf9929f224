#include "krrd/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>

#include "krrd/bessel.hpp"
#include "krrd/errors.hpp"

namespace krrd {
namespace {

using kernel_detail::GaussianRbf;
using kernel_detail::Matern;
using kernel_detail::Product;
using kernel_detail::Sobolev2;
using kernel_detail::Spectral;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Sobolev2 on [0,1]: K(s,t) = 1 + s t + s^2 (3 t - s) / 6 for s <= t.
// Mixed partials up to order 2 per argument; the piecewise derivative table
// below is for the s <= t branch. At the knot s == t the first argument is
// treated as the left limit.
// ---------------------------------------------------------------------------

double sob2_branch(int a, int b, double s, double t) {
  if (b >= 2) return 0.0;
  if (b == 0) {
    switch (a) {
      case 0: return 1.0 + s * t + s * s * (3.0 * t - s) / 6.0;
      case 1: return t + s * t - s * s / 2.0;
      case 2: return t - s;
    }
  } else {
    switch (a) {
      case 0: return s + s * s / 2.0;
      case 1: return 1.0 + s;
      case 2: return 1.0;
    }
  }
  return 0.0;
}

void sob2_check_domain(double x) {
  if (x < 0.0 || x > 1.0) throw DomainViolation("sobolev2 kernel is defined on [0,1]");
}

double sob2_partial(int a, int b, double x, double x2) {
  sob2_check_domain(x);
  sob2_check_domain(x2);
  if (x <= x2) return sob2_branch(a, b, x, x2);
  return sob2_branch(b, a, x2, x);
}

// ---------------------------------------------------------------------------
// Matern. With r = sqrt(2 nu) |u| and g(r) = c_nu r^nu B_nu(r) the kernel is
// phi(u) = g(r). Derivatives follow from d/dr [r^s B_s(r)] = -r^s B_{s-1}(r):
// D^p h_nu is a signed sum of r^{2j-p} h_{nu-j} terms, and every surviving term
// has j >= p/2, so no negative powers of r appear for offered orders p < 2 nu.
// ---------------------------------------------------------------------------

struct BesselTerm {
  double coef;
  int rpow;
  int shift;
};

const std::vector<BesselTerm>& matern_terms(int p) {
  static const std::vector<std::vector<BesselTerm>> cache = [] {
    std::vector<std::vector<BesselTerm>> all;
    all.push_back({{1.0, 0, 0}});
    for (int order = 1; order <= 10; ++order) {
      std::map<std::pair<int, int>, double> next;
      for (const BesselTerm& t : all.back()) {
        if (t.rpow > 0) next[{t.rpow - 1, t.shift}] += t.coef * t.rpow;
        next[{t.rpow + 1, t.shift + 1}] -= t.coef;
      }
      std::vector<BesselTerm> v;
      for (const auto& [key, coef] : next)
        if (coef != 0.0) v.push_back({coef, key.first, key.second});
      all.push_back(std::move(v));
    }
    return all;
  }();
  return cache.at(static_cast<std::size_t>(p));
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

double matern_profile_deriv(double nu, int p, double u) {
  const double c = std::sqrt(2.0 * nu);
  const double r = c * std::abs(u);
  if (r < 1e-12) {
    // zero-lag limits: odd orders vanish, even orders from the series expansion
    if (p % 2 == 1) return 0.0;
    const int j = p / 2;
    double val = std::pow(c, p) * factorial(p) / (std::pow(4.0, j) * factorial(j));
    for (int l = 1; l <= j; ++l) val /= (l - nu);
    return val;
  }
  const double cnu = std::pow(2.0, 1.0 - nu) / std::tgamma(nu);
  double acc = 0.0;
  for (const BesselTerm& t : matern_terms(p)) {
    const double s = nu - t.shift;
    acc += t.coef * std::pow(r, t.rpow + s) * bessel_k(s, r);
  }
  acc *= cnu * std::pow(c, p);
  if (u < 0.0 && p % 2 == 1) acc = -acc;
  return acc;
}

namespace {

double matern_partial(const Matern& m, const MultiIndex& a, const MultiIndex& b, const Vector& x,
                      const Vector& x2) {
  const int d = static_cast<int>(x.size());
  if (d == 1) {
    const int p = a[0] + b[0];
    double v = matern_profile_deriv(m.nu, p, x[0] - x2[0]);
    return (b[0] % 2 == 0) ? v : -v;
  }
  // d > 1 isotropic: first-order partials per argument only
  const Vector u = x - x2;
  const double rho = u.norm();
  int ai = -1, bj = -1;
  for (int i = 0; i < d; ++i) {
    if (a[i] == 1) ai = i;
    if (b[i] == 1) bj = i;
  }
  if (a.is_zero() && b.is_zero()) return matern_profile_deriv(m.nu, 0, rho);
  const double p1 = matern_profile_deriv(m.nu, 1, rho);
  if (b.is_zero()) return rho == 0.0 ? 0.0 : p1 * u[ai] / rho;
  if (a.is_zero()) return rho == 0.0 ? 0.0 : -p1 * u[bj] / rho;
  const double p2 = matern_profile_deriv(m.nu, 2, rho);
  const double diag = (ai == bj) ? 1.0 : 0.0;
  if (rho < 1e-12) return -p2 * diag;
  return -(p2 - p1 / rho) * (u[ai] * u[bj]) / (rho * rho) - p1 / rho * diag;
}

// ---------------------------------------------------------------------------
// Gaussian RBF: exp(-|x - x'|^2 / (2 l^2)) factorizes over coordinates, and the
// 1-D factor derivatives are Hermite polynomials.
// ---------------------------------------------------------------------------

double hermite(int p, double z) {
  if (p == 0) return 1.0;
  double h0 = 1.0;
  double h1 = 2.0 * z;
  for (int k = 1; k < p; ++k) {
    const double h2 = 2.0 * z * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

double rbf_factor(double ell, int a, int b, double u) {
  const double sl = std::numbers::sqrt2 * ell;
  const double z = u / sl;
  const int p = a + b;
  double v = std::pow(sl, -p) * hermite(p, z) * std::exp(-z * z);
  return (a % 2 == 0) ? v : -v;
}

double rbf_partial(const GaussianRbf& k, const MultiIndex& a, const MultiIndex& b, const Vector& x,
                   const Vector& x2) {
  double acc = 1.0;
  for (int i = 0; i < x.size(); ++i) acc *= rbf_factor(k.lengthscale, a[i], b[i], x[i] - x2[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Spectral kernel on [0,1]: truncated sum over the orthonormal Fourier system
// psi_1 = 1, psi_{2j} = sqrt2 cos(2 pi j x), psi_{2j+1} = sqrt2 sin(2 pi j x).
// Products fold into cosines of x - x' and x + x', so one pass over the pair
// index j evaluates any mixed partial. Rotations are re-synced periodically to
// keep the recurrence at full double accuracy.
// ---------------------------------------------------------------------------

void spectral_check_domain(double x) {
  if (x < 0.0 || x > 1.0) throw DomainViolation("spectral kernel is defined on [0,1]");
}

// cos(theta + k pi/2) from (cos theta, sin theta)
double quarter_shift(int k, double ct, double st) {
  switch (((k % 4) + 4) % 4) {
    case 0: return ct;
    case 1: return -st;
    case 2: return -ct;
    default: return st;
  }
}

double spectral_partial(const Spectral& sp, int a, int b, double x, double x2) {
  spectral_check_domain(x);
  spectral_check_domain(x2);
  const Vector& mu = *sp.mu;
  const int N = sp.terms;
  const int p = a + b;
  double acc = (p == 0) ? mu[0] : 0.0;
  const double dm = std::abs(x - x2);  // |.| keeps eval(x,x') == eval(x',x) bit-exact
  const double dp = x + x2;
  const int ph_m = (x >= x2) ? (a - b) : (b - a);
  const int ph_p = a + b;
  const std::complex<double> wm = std::polar(1.0, kTwoPi * dm);
  const std::complex<double> wp = std::polar(1.0, kTwoPi * dp);
  std::complex<double> zm = wm;
  std::complex<double> zp = wp;
  for (int j = 1; 2 * j <= N; ++j) {
    if (j % 256 == 0) {  // re-sync rotation drift
      zm = std::polar(1.0, kTwoPi * j * dm);
      zp = std::polar(1.0, kTwoPi * j * dp);
    }
    const double mc = mu[2 * j - 1];
    const double ms = (2 * j + 1 <= N) ? mu[2 * j] : 0.0;
    const double fac = (p == 0) ? 1.0 : std::pow(kTwoPi * j, p);
    acc += fac * ((mc + ms) * quarter_shift(ph_m, zm.real(), zm.imag()) +
                  (mc - ms) * quarter_shift(ph_p, zp.real(), zp.imag()));
    zm *= wm;
    zp *= wp;
  }
  return acc;
}

int spectral_max_total_order(double alpha) {
  // partial (a, b) offered iff a + b < 2 alpha - 1 (series of derivatives
  // converges uniformly)
  int k = static_cast<int>(std::ceil(2.0 * alpha - 1.0)) - 1;
  return std::max(k, 0);
}

// ---------------------------------------------------------------------------

struct PartialVisitor {
  const MultiIndex& a;
  const MultiIndex& b;
  const Vector& x;
  const Vector& x2;

  double operator()(const Sobolev2&) const { return sob2_partial(a[0], b[0], x[0], x2[0]); }
  double operator()(const Matern& m) const { return matern_partial(m, a, b, x, x2); }
  double operator()(const GaussianRbf& k) const { return rbf_partial(k, a, b, x, x2); }
  double operator()(const Spectral& sp) const { return spectral_partial(sp, a[0], b[0], x[0], x2[0]); }
  double operator()(const Product& pr) const {
    double acc = 1.0;
    for (std::size_t f = 0; f < pr.factors.size(); ++f) {
      const int i = static_cast<int>(f);
      acc *= partial(pr.factors[f], MultiIndex{a[i]}, MultiIndex{b[i]}, point1(x[i]), point1(x2[i]));
    }
    return acc;
  }
};

}  // namespace

KernelSpec KernelSpec::sobolev2() { return KernelSpec(Sobolev2{}); }

KernelSpec KernelSpec::matern(double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("matern: nu must be positive");
  return KernelSpec(Matern{nu});
}

KernelSpec KernelSpec::gaussian_rbf(double lengthscale) {
  if (!(lengthscale > 0.0)) throw InvalidArgument("rbf: lengthscale must be positive");
  return KernelSpec(GaussianRbf{lengthscale});
}

KernelSpec KernelSpec::product(std::vector<KernelSpec> factors) {
  if (factors.empty()) throw InvalidArgument("product: needs at least one factor");
  for (const KernelSpec& f : factors) {
    if (std::holds_alternative<Product>(f.family()))
      throw InvalidArgument("product: nested products are not supported");
    if (!f.accepts_dim(1)) throw InvalidArgument("product: factors must be one-dimensional");
  }
  return KernelSpec(Product{std::move(factors)});
}

KernelSpec KernelSpec::spectral(double alpha, int terms) {
  if (!(alpha > 0.0)) throw InvalidArgument("spectral: alpha must be positive");
  if (terms < 1) throw InvalidArgument("spectral: terms must be >= 1");
  auto mu = std::make_shared<Vector>(terms);
  for (int i = 0; i < terms; ++i) (*mu)[i] = std::pow(static_cast<double>(i + 1), -2.0 * alpha);
  return KernelSpec(Spectral{alpha, terms, std::move(mu)});
}

bool KernelSpec::accepts_dim(int d) const {
  if (d < 1) return false;
  return std::visit(
      [d](const auto& fam) -> bool {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Sobolev2> || std::is_same_v<T, Spectral>)
          return d == 1;
        else if constexpr (std::is_same_v<T, Product>)
          return d == static_cast<int>(fam.factors.size());
        else
          return true;
      },
      family_);
}

bool KernelSpec::offers(const MultiIndex& a, const MultiIndex& b) const {
  if (a.dim() != b.dim() || !accepts_dim(a.dim())) return false;
  return std::visit(
      [&](const auto& fam) -> bool {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Sobolev2>) {
          return a[0] <= 2 && b[0] <= 2;
        } else if constexpr (std::is_same_v<T, Matern>) {
          if (a.dim() == 1) return a[0] + b[0] < 2.0 * fam.nu;
          int amax = 0, bmax = 0;
          for (int i = 0; i < a.dim(); ++i) {
            amax = std::max(amax, a[i]);
            bmax = std::max(bmax, b[i]);
          }
          return a.order() <= 1 && b.order() <= 1 && amax <= 1 && bmax <= 1 &&
                 a.order() + b.order() < 2.0 * fam.nu;
        } else if constexpr (std::is_same_v<T, GaussianRbf>) {
          return a.order() + b.order() <= 16;
        } else if constexpr (std::is_same_v<T, Spectral>) {
          return a[0] + b[0] <= spectral_max_total_order(fam.alpha);
        } else {  // Product
          for (std::size_t f = 0; f < fam.factors.size(); ++f) {
            const int i = static_cast<int>(f);
            if (!fam.factors[f].offers(MultiIndex{a[i]}, MultiIndex{b[i]})) return false;
          }
          return true;
        }
      },
      family_);
}

int KernelSpec::max_uni_order() const {
  return std::visit(
      [](const auto& fam) -> int {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Sobolev2>) {
          return 2;
        } else if constexpr (std::is_same_v<T, Matern>) {
          const int k = static_cast<int>(std::ceil(2.0 * fam.nu)) - 1;
          return std::max(k, 0);
        } else if constexpr (std::is_same_v<T, GaussianRbf>) {
          return 16;
        } else if constexpr (std::is_same_v<T, Spectral>) {
          return spectral_max_total_order(fam.alpha);
        } else {
          int m = 1000;
          for (const KernelSpec& f : fam.factors) m = std::min(m, f.max_uni_order());
          return m;
        }
      },
      family_);
}

std::string KernelSpec::to_string() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Sobolev2>) {
          os << "sobolev2";
        } else if constexpr (std::is_same_v<T, Matern>) {
          os << "matern:" << fam.nu;
        } else if constexpr (std::is_same_v<T, GaussianRbf>) {
          os << "rbf:" << fam.lengthscale;
        } else if constexpr (std::is_same_v<T, Spectral>) {
          os << "spectral:alpha=" << fam.alpha << ",terms=" << fam.terms;
        } else {
          os << "product:";
          for (std::size_t f = 0; f < fam.factors.size(); ++f) {
            if (f) os << ",";
            os << fam.factors[f].to_string();
          }
        }
      },
      family_);
  return os.str();
}

double eval(const KernelSpec& k, const Vector& x, const Vector& x2) {
  const int d = static_cast<int>(x.size());
  return partial(k, MultiIndex::zero(d), MultiIndex::zero(d), x, x2);
}

double partial(const KernelSpec& k, const MultiIndex& a, const MultiIndex& b, const Vector& x,
               const Vector& x2) {
  if (x.size() != x2.size()) throw DimensionMismatch("partial: point dimensions differ");
  const int d = static_cast<int>(x.size());
  if (a.dim() != d || b.dim() != d)
    throw DimensionMismatch("partial: multi-index dimension does not match points");
  if (!k.accepts_dim(d)) throw DimensionMismatch("partial: kernel does not accept this dimension");
  if (!k.offers(a, b))
    throw UnsupportedDerivativeOrder("partial: derivative order (" + std::to_string(a.order()) +
                                     "," + std::to_string(b.order()) +
                                     ") exceeds the declared smoothness of " + k.to_string());
  return std::visit(PartialVisitor{a, b, x, x2}, k.family());
}

Matrix gram(const KernelSpec& k, const Matrix& X) {
  const Index n = X.rows();
  if (n < 1) throw InvalidArgument("gram: need at least one design point");
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i) {
    const Vector xi = X.row(i);
    for (Index j = i; j < n; ++j) {
      const double v = eval(k, xi, Vector(X.row(j)));
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

Vector cross_partial_row(const KernelSpec& k, const MultiIndex& beta, const Vector& x,
                         const Matrix& X) {
  const Index n = X.rows();
  Vector row(n);
  const MultiIndex zero = MultiIndex::zero(beta.dim());
  for (Index j = 0; j < n; ++j) row[j] = partial(k, beta, zero, x, Vector(X.row(j)));
  return row;
}

namespace {

std::string trim_lower(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

double parse_positive_real(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("parse_kernel: bad " + what + " '" + s + "'");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("parse_kernel: bad " + what + " '" + s + "'");
  }
}

}  // namespace

KernelSpec parse_kernel(const std::string& text) {
  const std::string s = trim_lower(text);
  if (s == "sobolev2") return KernelSpec::sobolev2();
  if (s.rfind("matern:", 0) == 0) return KernelSpec::matern(parse_positive_real(s.substr(7), "nu"));
  if (s.rfind("rbf:", 0) == 0)
    return KernelSpec::gaussian_rbf(parse_positive_real(s.substr(4), "lengthscale"));
  if (s.rfind("spectral:", 0) == 0) {
    double alpha = 0.0;
    int terms = 2000;
    std::stringstream ss(s.substr(9));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.rfind("alpha=", 0) == 0) {
        alpha = parse_positive_real(item.substr(6), "alpha");
      } else if (item.rfind("terms=", 0) == 0) {
        terms = static_cast<int>(parse_positive_real(item.substr(6), "terms"));
      } else {
        throw InvalidArgument("parse_kernel: unknown spectral field '" + item + "'");
      }
    }
    if (alpha == 0.0) throw InvalidArgument("parse_kernel: spectral needs alpha=<a>");
    return KernelSpec::spectral(alpha, terms);
  }
  if (s.rfind("product:", 0) == 0) {
    std::vector<KernelSpec> factors;
    std::stringstream ss(s.substr(8));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.rfind("spectral", 0) == 0 || item.rfind("product", 0) == 0)
        throw InvalidArgument("parse_kernel: '" + item + "' cannot appear inside product");
      factors.push_back(parse_kernel(item));
    }
    return KernelSpec::product(std::move(factors));
  }
  throw InvalidArgument("parse_kernel: unrecognized kernel '" + text + "'");
}

}  // namespace krrd
