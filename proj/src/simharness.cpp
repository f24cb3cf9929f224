#include "krrd/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "krrd/baselines.hpp"
#include "krrd/errors.hpp"
#include "krrd/estimator.hpp"
#include "krrd/io.hpp"
#include "krrd/linalg.hpp"
#include "krrd/rng.hpp"
#include "krrd/tuning.hpp"

namespace krrd {
namespace {

// f01(x) = exp(-4 (1-2x)^2) (1-2x), differentiated through u = 1 - 2x
double f01_deriv(int k, double x) {
  const double u = 1.0 - 2.0 * x;
  const double e = std::exp(-4.0 * u * u);
  switch (k) {
    case 0: return e * u;
    case 1: return -2.0 * e * (1.0 - 8.0 * u * u);
    case 2: return 4.0 * e * (64.0 * u * u * u - 24.0 * u);
    case 3: return e * (4096.0 * u * u * u * u - 3072.0 * u * u + 192.0);
    default: throw UnsupportedDerivativeOrder("f01: derivatives supplied up to order 3");
  }
}

// f02(x) = sin(8x) + cos(8x) + log(4/3 + x)
double f02_deriv(int k, double x) {
  const double s = std::sin(8.0 * x);
  const double c = std::cos(8.0 * x);
  const double q = 4.0 / 3.0 + x;
  switch (k) {
    case 0: return s + c + std::log(q);
    case 1: return 8.0 * c - 8.0 * s + 1.0 / q;
    case 2: return -64.0 * s - 64.0 * c - 1.0 / (q * q);
    case 3: return -512.0 * c + 512.0 * s + 2.0 / (q * q * q);
    default: throw UnsupportedDerivativeOrder("f02: derivatives supplied up to order 3");
  }
}

Vector truth_on_grid(const Target& t, int k, const Vector& xs) {
  Vector v(xs.size());
  for (Index i = 0; i < xs.size(); ++i) v[i] = truth(t, k, xs[i]);
  return v;
}

Vector eval_grid_points(int count) {
  Vector xs(count);
  for (int i = 0; i < count; ++i) xs[i] = static_cast<double>(i) / (count - 1);
  return xs;
}

std::vector<double> filtered_nu_candidates(const std::vector<double>& requested, int max_k) {
  std::vector<double> base = requested.empty() ? default_nu_candidates() : requested;
  std::vector<double> out;
  for (double nu : base)
    if (2.0 * nu > max_k) out.push_back(nu);
  return out;
}

struct OlsFit {
  double slope = 0.0;
  double se = 0.0;
};

OlsFit ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsFit fit;
  fit.slope = sxy / sxx;
  if (n > 2) {
    double rss = 0.0;
    const double b0 = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - b0 - fit.slope * x[i];
      rss += r * r;
    }
    fit.se = std::sqrt(rss / (static_cast<double>(n) - 2.0) / sxx);
  }
  return fit;
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

Target Target::f01() {
  Target t;
  t.kind = TargetKind::F01;
  return t;
}

Target Target::f02() {
  Target t;
  t.kind = TargetKind::F02;
  return t;
}

Target Target::spectral_holder(double alpha, Index terms) {
  Target t;
  t.kind = TargetKind::SpectralHolder;
  t.holder = std::make_shared<HolderFunction>(HolderFunction::standard(alpha, terms));
  t.holder_alpha = alpha;
  return t;
}

std::string Target::name() const {
  switch (kind) {
    case TargetKind::F01: return "f01";
    case TargetKind::F02: return "f02";
    default: {
      std::ostringstream os;
      os << "holder" << holder_alpha;
      return os.str();
    }
  }
}

int Target::max_order() const {
  switch (kind) {
    case TargetKind::F01:
    case TargetKind::F02: return 3;
    default: return holder->max_order();
  }
}

double truth(const Target& t, int k, double x) {
  if (x < 0.0 || x > 1.0) throw DomainViolation("truth: x must lie in [0,1]");
  switch (t.kind) {
    case TargetKind::F01: return f01_deriv(k, x);
    case TargetKind::F02: return f02_deriv(k, x);
    default: return t.holder->eval(k, x);
  }
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec m;
  m.name = text;
  if (text == "krr:matern") {
    m.kind = Kind::KrrTuneNu;
    return m;
  }
  if (text.rfind("krr:", 0) == 0) {
    m.kind = Kind::Krr;
    m.kernel = parse_kernel(text.substr(4));
    return m;
  }
  if (text == "locpoly") {
    m.kind = Kind::Locpoly;
    return m;
  }
  if (text.rfind("locpoly:degree=", 0) == 0) {
    m.kind = Kind::Locpoly;
    m.degree = std::stoi(text.substr(15));
    if (m.degree < 0) throw InvalidArgument("locpoly degree must be >= 0");
    return m;
  }
  throw InvalidArgument("unknown method '" + text + "'");
}

void SimulationConfig::validate() const {
  if (n < 10) throw InvalidArgument("SimulationConfig: n >= 10 required");
  if (replications < 1) throw InvalidArgument("SimulationConfig: replications >= 1 required");
  if (sigma < 0.0) throw InvalidArgument("SimulationConfig: sigma >= 0 required");
  if (eval_grid < 2) throw InvalidArgument("SimulationConfig: eval_grid >= 2 required");
  if (methods.empty()) throw InvalidArgument("SimulationConfig: no methods");
  if (orders.empty()) throw InvalidArgument("SimulationConfig: no derivative orders");
  for (int k : orders)
    if (k < 0 || k > target.max_order())
      throw InvalidArgument("SimulationConfig: order " + std::to_string(k) +
                            " not available for target " + target.name());
}

std::pair<Matrix, Vector> generate(const SimulationConfig& cfg, int replication_index) {
  Rng rng = replication_stream(cfg.master_seed, static_cast<std::uint64_t>(replication_index));
  Matrix X(cfg.n, 1);
  if (cfg.design == DesignKind::RandomUniform) {
    for (Index i = 0; i < cfg.n; ++i) X(i, 0) = rng.uniform();
  } else {
    for (Index i = 0; i < cfg.n; ++i) X(i, 0) = static_cast<double>(i + 1) / static_cast<double>(cfg.n);
  }
  Vector y(cfg.n);
  for (Index i = 0; i < cfg.n; ++i) y[i] = truth(cfg.target, 0, X(i, 0)) + cfg.sigma * rng.normal();
  return {std::move(X), std::move(y)};
}

double rmse(const Vector& estimate, const Vector& truth_values) {
  if (estimate.size() != truth_values.size()) throw DimensionMismatch("rmse: length mismatch");
  return std::sqrt((estimate - truth_values).squaredNorm() / static_cast<double>(estimate.size()));
}

void parallel_for(int tasks, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, tasks));
  if (threads == 1) {
    for (int i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

RmseReport run_montecarlo(const SimulationConfig& cfg) {
  cfg.validate();
  const Vector xs = eval_grid_points(cfg.eval_grid);
  const Matrix xs_mat = xs;
  const int max_k = *std::max_element(cfg.orders.begin(), cfg.orders.end());
  const std::vector<double> lgrid = cfg.lambda_grid.empty() ? default_lambda_grid() : cfg.lambda_grid;
  const std::vector<double> hgrid =
      cfg.bandwidth_grid.empty() ? default_bandwidth_grid() : cfg.bandwidth_grid;

  std::vector<Vector> truths;
  for (int k : cfg.orders) truths.push_back(truth_on_grid(cfg.target, k, xs));

  struct RepResult {
    std::vector<RmseRow> rows;
    std::vector<std::string> failures;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(cfg.replications));

  parallel_for(cfg.replications, cfg.threads, [&](int rep) {
    RepResult& out = results[static_cast<std::size_t>(rep)];
    const auto [X, y] = generate(cfg, rep);
    for (const MethodSpec& method : cfg.methods) {
      try {
        if (method.kind == MethodSpec::Kind::Locpoly) {
          for (std::size_t ki = 0; ki < cfg.orders.size(); ++ki) {
            const int k = cfg.orders[ki];
            if (k > method.degree) {
              out.failures.push_back("rep " + std::to_string(rep) + " " + method.name + " k=" +
                                     std::to_string(k) + ": order exceeds degree");
              continue;
            }
            // bandwidth re-selected for every order; the CV target is the
            // regression fit, mirroring the competitor protocol
            const double h =
                cv_bandwidth(X.col(0), y, method.degree,hgrid,
                             hash_combine(cfg.master_seed, 1000003 * rep + 7 * k));
            const LocpolyResult lp = locpoly_deriv(X.col(0), y, {method.degree, h}, k, xs);
            if (lp.any_missing()) {
              out.failures.push_back("rep " + std::to_string(rep) + " " + method.name + " k=" +
                                     std::to_string(k) + ": rank-deficient window");
              continue;
            }
            RmseRow row{method.name, cfg.target.name(), k, rep, rmse(lp.values, truths[ki]), {}, {}, {}};
            row.lambda = h;  // bandwidth recorded in the tuning column
            out.rows.push_back(std::move(row));
          }
          continue;
        }

        // KRR variants: tune once, reuse for every order
        double lambda = 0.0;
        std::optional<double> sigma2, nu;
        KernelSpec kernel = KernelSpec::sobolev2();
        if (method.kind == MethodSpec::Kind::KrrTuneNu) {
          const std::vector<double> cands = filtered_nu_candidates(cfg.nu_candidates, max_k);
          if (cands.empty()) throw InvalidArgument("no Matern nu candidate supports the orders");
          if (cfg.lambda_override) {
            // fixed lambda: still pick nu by LOOCV at that lambda
            double best_mse = 0.0;
            bool have = false;
            for (double cand : cands) {
              const KernelSpec k = KernelSpec::matern(cand);
              const double mse = loo_mse(k, X, y, *cfg.lambda_override);
              if (!have || mse < best_mse) {
                best_mse = mse;
                nu = cand;
                have = true;
              }
            }
            lambda = *cfg.lambda_override;
          } else {
            const TuneResult tr = tune_nu(X, y, cands, lgrid);
            lambda = tr.lambda;
            sigma2 = tr.sigma2;
            nu = tr.nu;
          }
          kernel = KernelSpec::matern(*nu);
        } else {
          kernel = *method.kernel;
          if (cfg.lambda_override) {
            lambda = *cfg.lambda_override;
          } else {
            const TuneResult tr = tune_mmle(kernel, X, y, lgrid);
            lambda = tr.lambda;
            sigma2 = tr.sigma2;
          }
        }
        if (kernel.max_uni_order() < max_k)
          throw UnsupportedDerivativeOrder("kernel " + kernel.to_string() +
                                           " cannot serve order " + std::to_string(max_k));
        const FittedKRR model = fit(kernel, X, y, lambda, sigma2);
        for (std::size_t ki = 0; ki < cfg.orders.size(); ++ki) {
          const int k = cfg.orders[ki];
          const Vector pred = predict_deriv(model, MultiIndex::uni(k), xs_mat);
          RmseRow row{method.name, cfg.target.name(), k, rep, rmse(pred, truths[ki]), {}, {}, {}};
          row.lambda = lambda;
          row.sigma2 = sigma2;
          row.nu = nu;
          out.rows.push_back(std::move(row));
        }
      } catch (const Error& e) {
        out.failures.push_back("rep " + std::to_string(rep) + " " + method.name + ": " + e.what());
      }
    }
  });

  RmseReport report;
  for (const RepResult& r : results) {
    report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
    report.failures.insert(report.failures.end(), r.failures.begin(), r.failures.end());
  }
  return report;
}

std::string RmseReport::to_csv() const {
  std::string out = "method,target,k,rep,rmse,lambda,sigma2,nu\n";
  for (const RmseRow& r : rows)
    out += csv_line({r.method, r.target, std::to_string(r.k), std::to_string(r.rep),
                     format_double(r.rmse), opt_str(r.lambda), opt_str(r.sigma2), opt_str(r.nu)});
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

std::string RmseReport::summary_csv() const {
  std::vector<std::pair<std::string, int>> keys;
  for (const RmseRow& r : rows) {
    const auto key = std::make_pair(r.method, r.k);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::string out = "method,k,count,median_rmse,q25,q75\n";
  for (const auto& [method, k] : keys) {
    std::vector<double> vals;
    for (const RmseRow& r : rows)
      if (r.method == method && r.k == k) vals.push_back(r.rmse);
    std::sort(vals.begin(), vals.end());
    out += csv_line({method, std::to_string(k), std::to_string(vals.size()),
                     format_double(quantile_sorted(vals, 0.5)), format_double(quantile_sorted(vals, 0.25)),
                     format_double(quantile_sorted(vals, 0.75))});
  }
  return out;
}

double RmseReport::median_rmse(const std::string& method, int k) const {
  std::vector<double> vals;
  for (const RmseRow& r : rows)
    if (r.method == method && r.k == k) vals.push_back(r.rmse);
  std::sort(vals.begin(), vals.end());
  return quantile_sorted(vals, 0.5);
}

Vector spectral_fit_coeffs(const SpectralKernel& k, const Vector& X, const Vector& y,
                           double lambda) {
  const Index n = X.size();
  const Index N = k.terms();
  const double c = static_cast<double>(n) * lambda;
  // B = Phi D^{1/2}; (B B^T + c I)^{-1} y = (y - B (c I + B^T B)^{-1} B^T y)/c
  Matrix B(n, N);
  const Vector root = k.mu.cwiseSqrt();
  for (Index i = 0; i < n; ++i) {
    const double x = X[i];
    B(i, 0) = root[0];
    const std::complex<double> rot = std::polar(1.0, 2.0 * std::numbers::pi * x);
    std::complex<double> z = rot;
    for (Index j = 1; 2 * j <= N; ++j) {
      if (j % 256 == 0) z = std::polar(1.0, 2.0 * std::numbers::pi * x * static_cast<double>(j));
      B(i, 2 * j - 1) = root[2 * j - 1] * std::numbers::sqrt2 * z.real();
      if (2 * j + 1 <= N) B(i, 2 * j) = root[2 * j] * std::numbers::sqrt2 * z.imag();
      z *= rot;
    }
  }
  Matrix M = Matrix::Zero(N, N);
  M.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
  M.diagonal().array() += c;
  const Vector bty = B.transpose() * y;
  const Vector v = Eigen::LLT<Matrix>(M).solve(bty);  // LLT reads the lower triangle
  const Vector w = (y - B * v) / c;
  // coefficient of psi_i in the fit: mu_i (Phi^T w)_i = sqrt(mu_i) (B^T w)_i
  return root.asDiagonal() * (B.transpose() * w);
}

RateFit run_rate_experiment(int k, double alpha, const std::vector<Index>& n_values,
                            int replications, std::uint64_t seed, double sigma, int threads) {
  if (n_values.size() < 4) throw InvalidArgument("run_rate_experiment: need >= 4 sample sizes");
  if (!std::is_sorted(n_values.begin(), n_values.end()))
    throw InvalidArgument("run_rate_experiment: n_values must be increasing");
  if (!(alpha > k + 0.5)) throw SmoothnessViolation("run_rate_experiment: requires alpha > k + 1/2");

  const Index basis_terms = 1200;
  const SpectralKernel kern = SpectralKernel::create(alpha, basis_terms);
  const HolderFunction f0 = HolderFunction::standard(alpha, 10000);
  const int grid_n = 400;
  const Vector xs = eval_grid_points(grid_n);
  Vector truth_k(grid_n);
  for (int g = 0; g < grid_n; ++g) truth_k[g] = f0.eval(k, xs[g]);

  RateFit fit;
  fit.k = k;
  fit.alpha = alpha;
  fit.sigma = sigma;
  fit.n_values = n_values;
  fit.theory_slope = (alpha - k) / (2.0 * alpha + 1.0);
  fit.lambdas.resize(n_values.size());
  fit.mean_log_error.assign(n_values.size(), 0.0);

  const int total = static_cast<int>(n_values.size()) * replications;
  std::vector<double> log_errs(static_cast<std::size_t>(total));
  parallel_for(total, threads, [&](int task) {
    const std::size_t ni = static_cast<std::size_t>(task) / replications;
    const int rep = task % static_cast<int>(replications);
    const Index n = n_values[ni];
    const double lambda =
        std::pow(std::log(static_cast<double>(n)) / static_cast<double>(n),
                 2.0 * alpha / (2.0 * alpha + 1.0));
    Rng rng = replication_stream(hash_combine(seed, 7919 * ni), static_cast<std::uint64_t>(rep));
    Vector X(n), y(n);
    for (Index i = 0; i < n; ++i) X[i] = rng.uniform();
    for (Index i = 0; i < n; ++i) y[i] = f0.eval(0, X[i]) + sigma * rng.normal();
    const Vector coeffs = spectral_fit_coeffs(kern, X, y, lambda);
    Vector est(grid_n);
    for (int g = 0; g < grid_n; ++g) est[g] = fourier_eval(coeffs, k, xs[g]);
    log_errs[static_cast<std::size_t>(task)] = std::log(rmse(est, truth_k));
  });

  std::vector<double> log_rate(n_values.size());
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const double n = static_cast<double>(n_values[ni]);
    fit.lambdas[ni] = std::pow(std::log(n) / n, 2.0 * alpha / (2.0 * alpha + 1.0));
    double acc = 0.0;
    for (int rep = 0; rep < replications; ++rep)
      acc += log_errs[ni * static_cast<std::size_t>(replications) + static_cast<std::size_t>(rep)];
    fit.mean_log_error[ni] = acc / replications;
    log_rate[ni] = std::log(std::log(n) / n);
  }
  const OlsFit ols = ols_slope(log_rate, fit.mean_log_error);
  fit.slope = ols.slope;
  fit.slope_se = ols.se;
  return fit;
}

std::string RateFit::to_csv() const {
  std::string out = "k,alpha,sigma,n,lambda,mean_log_l2_error,slope,slope_se,theory_slope\n";
  for (std::size_t i = 0; i < n_values.size(); ++i)
    out += csv_line({std::to_string(k), format_double(alpha), format_double(sigma),
                     std::to_string(n_values[i]), format_double(lambdas[i]),
                     format_double(mean_log_error[i]), format_double(slope), format_double(slope_se),
                     format_double(theory_slope)});
  return out;
}

AdaptivityReport run_adaptivity_check(double alpha, Index n, int replications, std::uint64_t seed,
                                      std::vector<double> lambda_grid, double sigma, int threads) {
  if (!(alpha > 2.5)) throw SmoothnessViolation("run_adaptivity_check: requires alpha > 5/2");
  if (lambda_grid.empty()) lambda_grid = log_grid(1e-5, 1e-1, 17);  // quarter-decade cells
  AdaptivityReport rep;
  rep.lambda_grid = lambda_grid;
  rep.orders = {0, 1, 2};
  const Index L = static_cast<Index>(lambda_grid.size());
  rep.mean_rmse = Matrix::Zero(3, L);

  const Index basis_terms = 600;
  const SpectralKernel kern = SpectralKernel::create(alpha, basis_terms);
  const HolderFunction f0 = HolderFunction::standard(alpha, 10000);
  const int grid_n = 100;
  const Vector xs = eval_grid_points(grid_n);
  Matrix truth_k(3, grid_n);
  for (int k = 0; k < 3; ++k)
    for (int g = 0; g < grid_n; ++g) truth_k(k, g) = f0.eval(k, xs[g]);

  std::vector<Matrix> per_rep(static_cast<std::size_t>(replications));
  parallel_for(replications, threads, [&](int r) {
    Rng rng = replication_stream(seed, static_cast<std::uint64_t>(r));
    Vector X(n), y(n);
    for (Index i = 0; i < n; ++i) X[i] = rng.uniform();
    for (Index i = 0; i < n; ++i) y[i] = f0.eval(0, X[i]) + sigma * rng.normal();
    Matrix acc = Matrix::Zero(3, L);
    for (Index li = 0; li < L; ++li) {
      const Vector coeffs = spectral_fit_coeffs(kern, X, y, lambda_grid[static_cast<std::size_t>(li)]);
      for (int k = 0; k < 3; ++k) {
        Vector est(grid_n);
        for (int g = 0; g < grid_n; ++g) est[g] = fourier_eval(coeffs, k, xs[g]);
        acc(k, li) = rmse(est, Vector(truth_k.row(k)));
      }
    }
    per_rep[static_cast<std::size_t>(r)] = std::move(acc);
  });
  for (const Matrix& m : per_rep) rep.mean_rmse += m / static_cast<double>(replications);

  rep.argmin_cell.resize(3);
  for (int k = 0; k < 3; ++k) {
    Index best = 0;
    rep.mean_rmse.row(k).minCoeff(&best);
    rep.argmin_cell[static_cast<std::size_t>(k)] = static_cast<int>(best);
  }
  const auto [mn, mx] =
      std::minmax_element(rep.argmin_cell.begin(), rep.argmin_cell.end());
  rep.spread_cells = *mx - *mn;
  return rep;
}

std::string AdaptivityReport::to_csv() const {
  std::string out = "k,lambda,mean_rmse,argmin_lambda,spread_cells\n";
  for (std::size_t k = 0; k < orders.size(); ++k)
    for (std::size_t li = 0; li < lambda_grid.size(); ++li)
      out += csv_line({std::to_string(orders[k]), format_double(lambda_grid[li]),
                       format_double(mean_rmse(static_cast<Index>(k), static_cast<Index>(li))),
                       format_double(lambda_grid[static_cast<std::size_t>(argmin_cell[k])]),
                       std::to_string(spread_cells)});
  return out;
}

}  // namespace krrd
