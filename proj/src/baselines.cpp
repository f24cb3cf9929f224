#include "krrd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "krrd/errors.hpp"
#include "krrd/rng.hpp"
#include "krrd/tuning.hpp"

namespace krrd {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// one weighted fit; returns false when the weighted design is rank deficient
bool fit_window(const Vector& X, const Vector& y, int p, double h, double x0, int k, double& out) {
  const Index n = X.size();
  Matrix V(n, p + 1);
  Vector sw(n);
  for (Index i = 0; i < n; ++i) {
    const double z = (X[i] - x0) / h;  // scaled offsets keep the columns conditioned
    sw[i] = std::exp(-0.25 * z * z);   // sqrt of the Gaussian weight
    double zp = 1.0;
    for (int j = 0; j <= p; ++j) {
      V(i, j) = sw[i] * zp;
      zp *= z;
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(V);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) return false;
  const Vector c = qr.solve(Vector(sw.asDiagonal() * y));
  out = factorial(k) * c[k] / std::pow(h, k);
  return true;
}

}  // namespace

LocpolyResult locpoly_deriv(const Vector& X, const Vector& y, const LocalPolyConfig& cfg, int k,
                            const Vector& xs) {
  if (k < 0 || k > cfg.degree)
    throw UnsupportedDerivativeOrder("locpoly_deriv: need derivative order <= degree");
  if (!(cfg.bandwidth > 0.0)) throw InvalidArgument("locpoly_deriv: bandwidth must be positive");
  if (X.size() != y.size()) throw DimensionMismatch("locpoly_deriv: X and y lengths differ");
  LocpolyResult res;
  res.values.resize(xs.size());
  res.missing.assign(static_cast<std::size_t>(xs.size()), 0);
  for (Index t = 0; t < xs.size(); ++t) {
    double v = std::numeric_limits<double>::quiet_NaN();
    if (!fit_window(X, y, cfg.degree, cfg.bandwidth, xs[t], k, v))
      res.missing[static_cast<std::size_t>(t)] = 1;
    res.values[t] = v;
  }
  return res;
}

double cv_bandwidth(const Vector& X, const Vector& y, int degree, const std::vector<double>& h_grid,
                    std::uint64_t seed) {
  if (h_grid.empty()) throw InvalidArgument("cv_bandwidth: empty bandwidth grid");
  const Index n = X.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(hash_combine(seed, 0));
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  constexpr int kFolds = 5;
  std::vector<double> grid = h_grid;
  std::sort(grid.begin(), grid.end());
  double best_h = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    if (!(h > 0.0)) throw InvalidArgument("cv_bandwidth: bandwidths must be positive");
    double score = 0.0;
    for (int f = 0; f < kFolds; ++f) {
      std::vector<Index> train, test;
      for (Index i = 0; i < n; ++i)
        (static_cast<int>(i % kFolds) == f ? test : train).push_back(idx[static_cast<std::size_t>(i)]);
      Vector Xt(static_cast<Index>(train.size())), yt(static_cast<Index>(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i) {
        Xt[static_cast<Index>(i)] = X[train[i]];
        yt[static_cast<Index>(i)] = y[train[i]];
      }
      Vector Xq(static_cast<Index>(test.size()));
      for (std::size_t i = 0; i < test.size(); ++i) Xq[static_cast<Index>(i)] = X[test[i]];
      const LocpolyResult pred = locpoly_deriv(Xt, yt, {degree, h}, 0, Xq);
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (pred.missing[i]) {
          score = std::numeric_limits<double>::infinity();
          break;
        }
        const double r = y[test[i]] - pred.values[static_cast<Index>(i)];
        score += r * r;
      }
      if (std::isinf(score)) break;
    }
    if (score < best_score) {
      best_score = score;
      best_h = h;
    }
  }
  return best_h;
}

std::vector<double> default_bandwidth_grid() { return log_grid(0.01, 0.5, 12); }

}  // namespace krrd
