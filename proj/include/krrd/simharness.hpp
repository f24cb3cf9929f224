#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "krrd/kernels.hpp"
#include "krrd/spectral.hpp"
#include "krrd/types.hpp"

namespace krrd {

enum class TargetKind { F01, F02, SpectralHolder };

struct Target {
  TargetKind kind = TargetKind::F02;
  std::shared_ptr<const HolderFunction> holder;  // SpectralHolder only
  double holder_alpha = 0.0;

  static Target f01();
  static Target f02();
  static Target spectral_holder(double alpha, Index terms = 10000);

  std::string name() const;
  int max_order() const;
};

/// k-th derivative of the target at x in [0,1].
double truth(const Target& t, int k, double x);

enum class DesignKind { RandomUniform, FixedEquispaced };

struct MethodSpec {
  enum class Kind { Krr, KrrTuneNu, Locpoly };
  Kind kind = Kind::Krr;
  std::string name;                   // config string, echoed in reports
  std::optional<KernelSpec> kernel;   // Krr
  int degree = 2;                     // Locpoly

  /// krr:<kernelspec> | krr:matern (nu tuned by LOOCV) | locpoly[:degree=<p>]
  static MethodSpec parse(const std::string& text);
};

struct SimulationConfig {
  Target target = Target::f02();
  DesignKind design = DesignKind::RandomUniform;
  Index n = 500;
  double sigma = 0.2;
  std::vector<MethodSpec> methods;
  std::vector<int> orders = {0, 1, 2, 3};
  int replications = 20;
  int eval_grid = 100;
  std::uint64_t master_seed = 1;
  std::optional<double> lambda_override;
  std::vector<double> lambda_grid;     // empty -> default
  std::vector<double> nu_candidates;   // empty -> default, filtered by max order
  std::vector<double> bandwidth_grid;  // empty -> default
  int threads = 1;

  void validate() const;
};

struct RmseRow {
  std::string method;
  std::string target;
  int k = 0;
  int rep = 0;
  double rmse = 0.0;
  std::optional<double> lambda, sigma2, nu;
};

struct RmseReport {
  std::vector<RmseRow> rows;
  std::vector<std::string> failures;  // "rep <i> method <m>: <reason>"

  std::string to_csv() const;
  /// median and IQR per (method, k)
  std::string summary_csv() const;
  double median_rmse(const std::string& method, int k) const;
};

struct RateFit {
  int k = 0;
  double alpha = 0.0;
  double sigma = 0.0;
  std::vector<Index> n_values;
  std::vector<double> lambdas;
  std::vector<double> mean_log_error;
  double slope = 0.0;
  double slope_se = 0.0;
  double theory_slope = 0.0;

  std::string to_csv() const;
};

struct AdaptivityReport {
  std::vector<double> lambda_grid;
  std::vector<int> orders;
  Matrix mean_rmse;              // orders x grid
  std::vector<int> argmin_cell;  // per order
  int spread_cells = 0;

  std::string to_csv() const;
};

std::pair<Matrix, Vector> generate(const SimulationConfig& cfg, int replication_index);
double rmse(const Vector& estimate, const Vector& truth_values);

/// One tuning per replication and method; every requested derivative order is
/// served by that single fit, so KRR rows within a replication share lambda,
/// sigma2 and nu exactly. The locpoly competitor re-tunes its bandwidth per
/// order.
RmseReport run_montecarlo(const SimulationConfig& cfg);

/// Theorem-5-style rate experiment on the spectral kernel with the schedule
/// lambda(n) = (log n / n)^{2 alpha / (2 alpha + 1)}; fits the slope of mean
/// log L2 error against log(log n / n).
RateFit run_rate_experiment(int k, double alpha, const std::vector<Index>& n_values,
                            int replications, std::uint64_t seed, double sigma = 0.5,
                            int threads = 1);

/// Scans a lambda grid for k in {0,1,2} and reports how far apart the
/// RMSE-minimizing cells sit.
AdaptivityReport run_adaptivity_check(double alpha, Index n, int replications, std::uint64_t seed,
                                      std::vector<double> lambda_grid = {}, double sigma = 0.3,
                                      int threads = 1);

/// Exact Woodbury solve in the truncated eigenbasis; returns the series
/// coefficients of the fitted function so that any derivative is a cheap
/// term-wise evaluation. Equivalent to the dense estimator path.
Vector spectral_fit_coeffs(const SpectralKernel& k, const Vector& X, const Vector& y,
                           double lambda);

void parallel_for(int tasks, int threads, const std::function<void(int)>& body);

}  // namespace krrd
