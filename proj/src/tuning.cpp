#include "krrd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "krrd/errors.hpp"
#include "krrd/linalg.hpp"

namespace krrd {
namespace {

double sigma2_floor(const Vector& y) {
  const double n = static_cast<double>(y.size());
  const double var = (y.array() - y.mean()).square().sum() / std::max(n, 1.0);
  return 1e-12 * var + 1e-300;
}

struct ProfilePoint {
  double lml;
  double sigma2;
};

// profiled sigma^2(lambda) = lambda y^T (K + n lambda I)^{-1} y, and the
// marginal likelihood at that sigma^2
ProfilePoint profiled_lml(const Matrix& G, const Vector& y, double lambda, double floor) {
  const double n = static_cast<double>(y.size());
  CholFactor F = chol_shifted(G, n * lambda);
  const double q = y.dot(solve(F, y));
  const double s2 = std::max(lambda * q, floor);
  const double quad = n * lambda * q / s2;
  const double ld = n * std::log(s2 / (n * lambda)) + logdet(F);
  const double lml = -0.5 * quad - 0.5 * ld - 0.5 * n * std::log(2.0 * std::numbers::pi);
  return {lml, s2};
}

}  // namespace

double log_marginal_likelihood_gram(const Matrix& G, const Vector& y, double lambda, double sigma2) {
  if (!(lambda > 0.0) || !(sigma2 > 0.0))
    throw InvalidArgument("log_marginal_likelihood: lambda and sigma2 must be positive");
  if (G.rows() != y.size()) throw DimensionMismatch("log_marginal_likelihood: sizes differ");
  const double n = static_cast<double>(y.size());
  CholFactor F = chol_shifted(G, n * lambda);
  // C = sigma^2 (n lambda)^{-1} (K + n lambda I)
  const double quad = y.dot(solve(F, y)) * n * lambda / sigma2;
  const double ld = n * std::log(sigma2 / (n * lambda)) + logdet(F);
  return -0.5 * quad - 0.5 * ld - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const KernelSpec& kernel, const Matrix& X, const Vector& y,
                               double lambda, double sigma2) {
  return log_marginal_likelihood_gram(gram(kernel, X), y, lambda, sigma2);
}

TuneResult tune_mmle(const KernelSpec& kernel, const Matrix& X, const Vector& y,
                     const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw InvalidArgument("tune_mmle: empty lambda grid");
  std::vector<double> grid = lambda_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double l : grid)
    if (!(l > 0.0)) throw InvalidArgument("tune_mmle: lambda grid must be positive");

  const Matrix G = gram(kernel, X);
  const double floor = sigma2_floor(y);

  TuneResult res;
  std::size_t best = 0;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = profiled_lml(G, y, grid[i], floor).lml;
    res.trace.emplace_back(grid[i], values[i]);
    if (values[i] > values[best]) best = i;
  }

  double lo = grid[best > 0 ? best - 1 : best];
  double hi = grid[best + 1 < grid.size() ? best + 1 : best];
  double best_lambda = grid[best];
  double best_value = values[best];
  if (lo < hi) {
    // golden section on log lambda, shrunk far enough that reruns with
    // permuted inputs land on the same maximizer
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(lo), b = std::log(hi);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = profiled_lml(G, y, std::exp(x1), floor).lml;
    double f2 = profiled_lml(G, y, std::exp(x2), floor).lml;
    while (b - a > 1e-12) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = profiled_lml(G, y, std::exp(x1), floor).lml;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = profiled_lml(G, y, std::exp(x2), floor).lml;
      }
    }
    const double lam = std::exp((a + b) / 2.0);
    const double val = profiled_lml(G, y, lam, floor).lml;
    res.trace.emplace_back(lam, val);
    if (val > best_value) {
      best_value = val;
      best_lambda = lam;
    }
  }

  const ProfilePoint fin = profiled_lml(G, y, best_lambda, floor);
  res.lambda = best_lambda;
  res.sigma2 = fin.sigma2;
  res.objective_value = fin.lml;
  return res;
}

Vector loo_residuals(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("loo_residuals: lambda must be positive");
  const Index n = X.rows();
  const Matrix G = gram(kernel, X);
  CholFactor F = chol_shifted(G, static_cast<double>(n) * lambda);
  const Vector alpha = solve(F, y);
  const Matrix Ainv = solve(F, Matrix(Matrix::Identity(n, n)));
  const double nl = static_cast<double>(n) * lambda;
  Vector e(n);
  for (Index i = 0; i < n; ++i) {
    const double one_minus_h = nl * Ainv(i, i);  // 1 - H_ii with H = K (K + n lambda I)^{-1}
    if (one_minus_h <= 1e-12)
      throw DegenerateSystem("loo_residuals: hat diagonal within 1e-12 of one (lambda too small)");
    e[i] = alpha[i] / Ainv(i, i);
  }
  return e;
}

double loo_mse(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda) {
  return loo_residuals(kernel, X, y, lambda).squaredNorm() / static_cast<double>(y.size());
}

TuneResult tune_nu(const Matrix& X, const Vector& y, const std::vector<double>& nu_candidates,
                   const std::vector<double>& lambda_grid) {
  if (nu_candidates.empty()) throw InvalidArgument("tune_nu: no candidates");
  std::vector<double> cands = nu_candidates;
  std::sort(cands.begin(), cands.end());
  TuneResult best;
  bool have = false;
  std::vector<std::pair<double, double>> trace;
  for (double nu : cands) {
    const KernelSpec k = KernelSpec::matern(nu);
    TuneResult tr = tune_mmle(k, X, y, lambda_grid);
    const double mse = loo_mse(k, X, y, tr.lambda);
    trace.emplace_back(nu, mse);
    if (!have || mse < best.objective_value) {
      best = tr;
      best.nu = nu;
      best.objective_value = mse;
      have = true;
    }
  }
  best.trace = std::move(trace);
  return best;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("log_grid: bad range");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  return g;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-8, 1.0, 25); }

std::vector<double> default_nu_candidates() { return {0.5, 1.5, 2.5, 3.5, 4.5}; }

}  // namespace krrd
