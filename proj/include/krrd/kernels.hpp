#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "krrd/types.hpp"

namespace krrd {

class KernelSpec;

namespace kernel_detail {

struct Sobolev2 {};
struct Matern {
  double nu;
};
struct GaussianRbf {
  double lengthscale;
};
struct Product {
  std::vector<KernelSpec> factors;
};
struct Spectral {
  double alpha;
  int terms;
  std::shared_ptr<const Vector> mu;  // mu_i = i^{-2 alpha}, i = 1..terms
};

using Family = std::variant<Sobolev2, Matern, GaussianRbf, Product, Spectral>;

}  // namespace kernel_detail

/// Immutable kernel description. Evaluation and analytic mixed partial
/// derivatives live in the free functions below; objects are cheap to copy
/// and safe to share across threads.
class KernelSpec {
 public:
  static KernelSpec sobolev2();
  static KernelSpec matern(double nu);
  static KernelSpec gaussian_rbf(double lengthscale);
  static KernelSpec product(std::vector<KernelSpec> factors);
  static KernelSpec spectral(double alpha, int terms);

  bool accepts_dim(int d) const;
  /// True when the mixed partial (a, b) is within the declared smoothness.
  bool offers(const MultiIndex& a, const MultiIndex& b) const;
  /// Highest k such that partial(uni(k), 0) is offered in one dimension.
  int max_uni_order() const;

  const kernel_detail::Family& family() const { return family_; }
  std::string to_string() const;

 private:
  explicit KernelSpec(kernel_detail::Family f) : family_(std::move(f)) {}
  kernel_detail::Family family_;
};

double eval(const KernelSpec& k, const Vector& x, const Vector& x2);
double partial(const KernelSpec& k, const MultiIndex& a, const MultiIndex& b, const Vector& x,
               const Vector& x2);
Matrix gram(const KernelSpec& k, const Matrix& X);
/// Row [partial^beta K(x, X_j)]_j of Eq.-style cross-derivatives against a design.
Vector cross_partial_row(const KernelSpec& k, const MultiIndex& beta, const Vector& x,
                         const Matrix& X);

/// Grammar: sobolev2 | matern:<nu> | rbf:<lengthscale> |
///          product:<spec>,<spec>,... | spectral:alpha=<a>[,terms=<N>]
KernelSpec parse_kernel(const std::string& text);

/// Stationary Matern profile derivative phi^(p)(u) where K(x, x') = phi(x - x')
/// in one dimension. Exposed for the spectral module and tests.
double matern_profile_deriv(double nu, int p, double u);

}  // namespace krrd
