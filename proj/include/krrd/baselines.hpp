#pragma once

#include <cstdint>
#include <vector>

#include "krrd/types.hpp"

namespace krrd {

/// Local polynomial regression with a Gaussian weight kernel.
struct LocalPolyConfig {
  int degree = 2;
  double bandwidth = 0.0;
};

struct LocpolyResult {
  Vector values;
  std::vector<std::uint8_t> missing;  // per-query rank-deficient-window flag

  bool any_missing() const {
    for (auto m : missing)
      if (m) return true;
    return false;
  }
};

/// k-th derivative estimate at each query point: weighted least squares fit of
/// a degree-p polynomial in (X_i - x), derivative read off as k! c_k.
LocpolyResult locpoly_deriv(const Vector& X, const Vector& y, const LocalPolyConfig& cfg, int k,
                            const Vector& xs);

/// 5-fold cross validation of the regression fit (k = 0); ties go to the
/// smaller bandwidth. Fold assignment is a deterministic shuffle of the seed.
double cv_bandwidth(const Vector& X, const Vector& y, int degree, const std::vector<double>& h_grid,
                    std::uint64_t seed);

std::vector<double> default_bandwidth_grid();

}  // namespace krrd
