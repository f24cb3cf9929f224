#include "krrd/estimator.hpp"

#include <cmath>

#include <json.hpp>

#include "krrd/errors.hpp"

namespace krrd {

FittedKRR fit(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda,
              std::optional<double> sigma2) {
  if (X.rows() != y.size()) throw DimensionMismatch("fit: X rows and y length differ");
  if (X.rows() < 1) throw InvalidArgument("fit: need at least one observation");
  if (!(lambda > 0.0)) throw InvalidArgument("fit: lambda must be positive");
  if (sigma2 && *sigma2 < 0.0) throw InvalidArgument("fit: sigma2 must be non-negative");
  if (!kernel.accepts_dim(static_cast<int>(X.cols())))
    throw DimensionMismatch("fit: kernel does not accept dimension " + std::to_string(X.cols()));
  Matrix G = gram(kernel, X);
  CholFactor F = chol_shifted(G, static_cast<double>(X.rows()) * lambda);
  Vector w = solve(F, y);
  return FittedKRR{kernel, X, std::move(w), std::move(F), lambda, sigma2};
}

Vector predict_deriv(const FittedKRR& m, const MultiIndex& beta, const Matrix& xs) {
  if (beta.dim() != m.dim()) throw DimensionMismatch("predict_deriv: beta dimension mismatch");
  if (xs.cols() != m.X.cols()) throw DimensionMismatch("predict_deriv: query dimension mismatch");
  Vector out(xs.rows());
  for (Index t = 0; t < xs.rows(); ++t)
    out[t] = cross_partial_row(m.kernel, beta, Vector(xs.row(t)), m.X).dot(m.dual_weights);
  return out;
}

Vector predict_variance(const FittedKRR& m, const MultiIndex& beta, const Matrix& xs) {
  if (!m.sigma2) throw MissingSigma2("predict_variance: model has no sigma2");
  if (xs.cols() != m.X.cols()) throw DimensionMismatch("predict_variance: query dimension mismatch");
  Vector out(xs.rows());
  for (Index t = 0; t < xs.rows(); ++t) {
    Vector r = cross_partial_row(m.kernel, beta, Vector(xs.row(t)), m.X);
    Vector u = solve(m.chol, r);
    out[t] = *m.sigma2 * u.squaredNorm();
  }
  return out;
}

double representer_check(const KernelSpec& kernel, const Matrix& X, const Vector& y, double lambda) {
  const Index n = X.rows();
  Matrix K = gram(kernel, X);
  // stationarity of the objective: K [(K/n + lambda I) c - y/n] = 0; CG on the
  // PSD system M c = K y / n with M = K K / n + lambda K, matrix-free
  const auto apply = [&](const Vector& v) -> Vector {
    Vector kv = K * v;
    return Vector(K * kv / static_cast<double>(n) + lambda * kv);
  };
  const Vector rhs = K * y / static_cast<double>(n);
  Vector c = Vector::Zero(n);
  Vector r = rhs;
  Vector p = r;
  double rs = r.squaredNorm();
  const double tol2 = std::pow(1e-14 * std::max(1.0, rhs.norm()), 2);
  const int max_iter = 200 * static_cast<int>(n);
  for (int it = 0; it < max_iter && rs > tol2; ++it) {
    Vector mp = apply(p);
    const double denom = p.dot(mp);
    if (denom <= 0.0) break;
    const double step = rs / denom;
    c += step * p;
    r -= step * mp;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  const Vector w = solve(chol_shifted(K, static_cast<double>(n) * lambda), y);
  return (K * (c - w)).cwiseAbs().maxCoeff();
}

std::string model_to_json(const FittedKRR& m) {
  nlohmann::json j;
  j["kernel"] = m.kernel.to_string();
  j["lambda"] = m.lambda;
  if (m.sigma2)
    j["sigma2"] = *m.sigma2;
  else
    j["sigma2"] = nullptr;
  j["n"] = m.n();
  j["d"] = m.dim();
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.X.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.X.cols(); ++c) row.push_back(m.X(i, c));
    rows.push_back(std::move(row));
  }
  j["X"] = std::move(rows);
  nlohmann::json w = nlohmann::json::array();
  for (Index i = 0; i < m.dual_weights.size(); ++i) w.push_back(m.dual_weights[i]);
  j["dual_weights"] = std::move(w);
  return j.dump(2);
}

FittedKRR model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("model_from_json: ") + e.what());
  }
  const KernelSpec kernel = parse_kernel(j.at("kernel").get<std::string>());
  const double lambda = j.at("lambda").get<double>();
  std::optional<double> sigma2;
  if (!j.at("sigma2").is_null()) sigma2 = j.at("sigma2").get<double>();
  const Index n = j.at("n").get<Index>();
  const Index d = j.at("d").get<Index>();
  Matrix X(n, d);
  const auto& rows = j.at("X");
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) X(i, c) = rows.at(i).at(c).get<double>();
  Vector w(n);
  const auto& wj = j.at("dual_weights");
  for (Index i = 0; i < n; ++i) w[i] = wj.at(i).get<double>();
  // the factor is not serialized; rebuild it so variance queries keep working
  CholFactor F = chol_shifted(gram(kernel, X), static_cast<double>(n) * lambda);
  return FittedKRR{kernel, std::move(X), std::move(w), std::move(F), lambda, sigma2};
}

}  // namespace krrd
