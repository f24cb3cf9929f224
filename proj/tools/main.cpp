// krrd command line: fit/predict for the plug-in derivative estimator, tuning,
// theory validation tables, and the Monte Carlo benchmark harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "krrd/baselines.hpp"
#include "krrd/errors.hpp"
#include "krrd/estimator.hpp"
#include "krrd/io.hpp"
#include "krrd/kernels.hpp"
#include "krrd/simharness.hpp"
#include "krrd/spectral.hpp"
#include "krrd/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  std::string subcommand;
  std::uint64_t seed = 1;
  int threads = 1;
  fs::path out_dir = ".";
  json config;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string read_input(const fs::path& p) {
    std::string content = krrd::read_file(p);
    input_digests[p.string()] = krrd::fnv1a_hex(content);
    return content;
  }

  void write_output(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    krrd::atomic_write_file(p, content);
    output_digests[p.string()] = krrd::fnv1a_hex(content);
  }

  fs::path in_out_dir(const std::string& name) const { return out_dir / name; }

  void write_manifest(const std::vector<std::string>& failures = {}) {
    json m;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["seed"] = seed;
    m["artifact_version"] = kVersion;
    m["inputs"] = input_digests;
    m["outputs"] = output_digests;
    if (!failures.empty()) m["failures"] = failures;
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fs::create_directories(out_dir);
    krrd::atomic_write_file(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

std::vector<double> parse_lambda_grid_spec(const std::string& spec) {
  // lo:hi:count, log spaced
  const auto c1 = spec.find(':');
  const auto c2 = spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw krrd::InvalidArgument("--lambda-grid expects lo:hi:count");
  return krrd::log_grid(std::stod(spec.substr(0, c1)), std::stod(spec.substr(c1 + 1, c2 - c1 - 1)),
                        std::stoi(spec.substr(c2 + 1)));
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

json tune_to_json(const krrd::TuneResult& tr) {
  json t;
  t["lambda"] = tr.lambda;
  t["sigma2"] = tr.sigma2;
  if (tr.nu) t["nu"] = *tr.nu;
  t["objective_value"] = tr.objective_value;
  json trace = json::array();
  for (const auto& [cand, obj] : tr.trace) trace.push_back({cand, obj});
  t["trace"] = std::move(trace);
  return t;
}

// ---------------------------------------------------------------------------

int cmd_fit(RunContext& ctx, const std::string& data_path, const std::string& kernel_spec,
            std::optional<double> lambda, bool tune, const std::string& lambda_grid_spec,
            const std::string& nu_list, std::optional<double> sigma2, const std::string& out_path) {
  const krrd::DataSet ds = krrd::read_data_csv(ctx.read_input(data_path));
  const std::vector<double> lgrid = lambda_grid_spec.empty()
                                        ? krrd::default_lambda_grid()
                                        : parse_lambda_grid_spec(lambda_grid_spec);
  std::optional<krrd::TuneResult> tuned;
  krrd::KernelSpec kernel = krrd::KernelSpec::sobolev2();
  if (!nu_list.empty()) {
    tuned = krrd::tune_nu(ds.X, ds.y, parse_double_list(nu_list), lgrid);
    kernel = krrd::KernelSpec::matern(*tuned->nu);
  } else {
    kernel = krrd::parse_kernel(kernel_spec);
    if (tune) tuned = krrd::tune_mmle(kernel, ds.X, ds.y, lgrid);
  }
  double lam = 0.0;
  std::optional<double> s2 = sigma2;
  if (tuned) {
    lam = tuned->lambda;
    if (!s2) s2 = tuned->sigma2;
  } else if (lambda) {
    lam = *lambda;
  } else {
    throw krrd::InvalidArgument("fit: need --lambda or --tune (or --nu-candidates)");
  }
  const krrd::FittedKRR model = krrd::fit(kernel, ds.X, ds.y, lam, s2);
  json j = json::parse(krrd::model_to_json(model));
  if (tuned) j["tuning"] = tune_to_json(*tuned);
  ctx.write_output(out_path, j.dump(2) + "\n");
  ctx.config = {{"data", data_path},    {"kernel", kernel.to_string()},
                {"lambda", lam},        {"tuned", tuned.has_value()},
                {"out", out_path},      {"sigma2", s2 ? json(*s2) : json(nullptr)}};
  ctx.write_manifest();
  return 0;
}

int cmd_predict(RunContext& ctx, const std::string& model_path, const std::string& query_path,
                const std::string& orders_list, bool variance, const std::string& out_path) {
  const krrd::FittedKRR model = krrd::model_from_json(ctx.read_input(model_path));
  const auto rows = krrd::read_csv(ctx.read_input(query_path));
  if (rows.size() < 2) throw krrd::IoError("query csv: need a header and at least one row");
  const krrd::Index d = static_cast<krrd::Index>(rows[0].size());
  if (d != model.dim())
    throw krrd::DimensionMismatch("query csv has " + std::to_string(d) + " columns, model has d=" +
                                  std::to_string(model.dim()));
  krrd::Matrix xs(static_cast<krrd::Index>(rows.size()) - 1, d);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (krrd::Index c = 0; c < d; ++c) xs(static_cast<krrd::Index>(i) - 1, c) =
        std::stod(rows[i][static_cast<std::size_t>(c)]);

  const std::vector<int> orders = parse_int_list(orders_list);
  std::vector<std::string> header;
  for (krrd::Index c = 0; c < d; ++c) header.push_back("x" + std::to_string(c + 1));
  std::vector<krrd::Vector> preds, vars;
  for (int k : orders) {
    const krrd::MultiIndex beta =
        (d == 1) ? krrd::MultiIndex::uni(k) : krrd::MultiIndex(std::vector<int>(d, 0));
    if (d > 1 && k != 0)
      throw krrd::UnsupportedDerivativeOrder("predict: multi-dimensional queries take k=0 here; "
                                             "use the library API for mixed partials");
    preds.push_back(krrd::predict_deriv(model, beta, xs));
    header.push_back("deriv_k" + std::to_string(k));
    if (variance) vars.push_back(krrd::predict_variance(model, beta, xs));
  }
  if (variance)
    for (int k : orders) header.push_back("var_k" + std::to_string(k));
  std::string out = krrd::csv_line(header);
  for (krrd::Index i = 0; i < xs.rows(); ++i) {
    std::vector<std::string> row;
    for (krrd::Index c = 0; c < d; ++c) row.push_back(krrd::format_double(xs(i, c)));
    for (const auto& p : preds) row.push_back(krrd::format_double(p[i]));
    for (const auto& v : vars) row.push_back(krrd::format_double(v[i]));
    out += krrd::csv_line(row);
  }
  ctx.write_output(out_path, out);
  ctx.config = {{"model", model_path}, {"query", query_path}, {"orders", orders},
                {"variance", variance}, {"out", out_path}};
  ctx.write_manifest();
  return 0;
}

int cmd_tune(RunContext& ctx, const std::string& data_path, const std::string& kernel_spec,
             const std::string& lambda_grid_spec, const std::string& nu_list,
             const std::string& out_path) {
  const krrd::DataSet ds = krrd::read_data_csv(ctx.read_input(data_path));
  const std::vector<double> lgrid = lambda_grid_spec.empty()
                                        ? krrd::default_lambda_grid()
                                        : parse_lambda_grid_spec(lambda_grid_spec);
  krrd::TuneResult tr;
  if (!nu_list.empty()) {
    tr = krrd::tune_nu(ds.X, ds.y, parse_double_list(nu_list), lgrid);
  } else {
    tr = krrd::tune_mmle(krrd::parse_kernel(kernel_spec), ds.X, ds.y, lgrid);
  }
  ctx.write_output(out_path, tune_to_json(tr).dump(2) + "\n");
  ctx.config = {{"data", data_path}, {"kernel", kernel_spec}, {"out", out_path}};
  ctx.write_manifest();
  return 0;
}

// ---------------------------------------------------------------------------

krrd::SimulationConfig parse_sim_config(const json& j, std::uint64_t default_seed, int threads) {
  krrd::SimulationConfig cfg;
  const auto& tj = j.at("target");
  if (tj.is_string()) {
    const std::string t = tj.get<std::string>();
    if (t == "f01")
      cfg.target = krrd::Target::f01();
    else if (t == "f02")
      cfg.target = krrd::Target::f02();
    else
      throw krrd::InvalidArgument("config: unknown target '" + t + "'");
  } else {
    const auto& h = tj.at("spectral_holder");
    cfg.target = krrd::Target::spectral_holder(h.at("alpha").get<double>(),
                                               h.value("terms", krrd::Index{10000}));
  }
  const std::string design = j.value("design", std::string("random_uniform"));
  if (design == "random_uniform")
    cfg.design = krrd::DesignKind::RandomUniform;
  else if (design == "fixed_equispaced")
    cfg.design = krrd::DesignKind::FixedEquispaced;
  else
    throw krrd::InvalidArgument("config: unknown design '" + design + "'");
  cfg.n = j.value("n", krrd::Index{500});
  cfg.sigma = j.value("sigma", 0.2);
  for (const auto& m : j.at("methods")) cfg.methods.push_back(krrd::MethodSpec::parse(m.get<std::string>()));
  cfg.orders.clear();
  for (const auto& k : j.at("orders")) cfg.orders.push_back(k.get<int>());
  cfg.replications = j.value("replications", 20);
  cfg.eval_grid = j.value("eval_grid", 100);
  cfg.master_seed = j.value("master_seed", default_seed);
  if (j.contains("lambda_override") && !j.at("lambda_override").is_null())
    cfg.lambda_override = j.at("lambda_override").get<double>();
  if (j.contains("lambda_grid")) {
    const auto& g = j.at("lambda_grid");
    if (g.is_array())
      for (const auto& v : g) cfg.lambda_grid.push_back(v.get<double>());
    else
      cfg.lambda_grid = krrd::log_grid(g.at("lo").get<double>(), g.at("hi").get<double>(),
                                       g.at("count").get<int>());
  }
  if (j.contains("nu_candidates"))
    for (const auto& v : j.at("nu_candidates")) cfg.nu_candidates.push_back(v.get<double>());
  if (j.contains("bandwidth_grid"))
    for (const auto& v : j.at("bandwidth_grid")) cfg.bandwidth_grid.push_back(v.get<double>());
  cfg.threads = threads;
  return cfg;
}

int cmd_simulate(RunContext& ctx, const std::string& config_path, bool plotdata, bool full) {
  json j = json::parse(ctx.read_input(config_path));
  krrd::SimulationConfig cfg = parse_sim_config(j, ctx.seed, ctx.threads);
  if (full) cfg.replications = 100;
  ctx.config = j;
  ctx.config["resolved_replications"] = cfg.replications;
  const krrd::RmseReport report = krrd::run_montecarlo(cfg);
  ctx.write_output(ctx.in_out_dir("rmse.csv"), report.to_csv());
  ctx.write_output(ctx.in_out_dir("summary.csv"), report.summary_csv());
  if (plotdata) {
    const std::string design =
        cfg.design == krrd::DesignKind::RandomUniform ? "random" : "fixed";
    for (int k : cfg.orders) {
      std::string out = "method,target,rep,rmse\n";
      for (const auto& r : report.rows)
        if (r.k == k)
          out += krrd::csv_line({r.method, r.target, std::to_string(r.rep), krrd::format_double(r.rmse)});
      ctx.write_output(
          ctx.in_out_dir("plot_" + cfg.target.name() + "_" + design + "_k" + std::to_string(k) + ".csv"),
          out);
    }
  }
  ctx.write_manifest(report.failures);
  // a method with zero surviving rows counts as fully failed
  for (const auto& m : cfg.methods) {
    bool any = false;
    for (const auto& r : report.rows) any = any || r.method == m.name;
    if (!any) {
      std::cerr << "method " << m.name << " produced no results\n";
      return 1;
    }
  }
  return 0;
}

int cmd_theory(RunContext& ctx, const std::string& config_path) {
  json j = json::parse(ctx.read_input(config_path));
  ctx.config = j;

  if (j.contains("kappa_slopes")) {
    const auto& s = j.at("kappa_slopes");
    const double alpha = s.at("alpha").get<double>();
    const double lo = s.value("lambda_lo", 1e-8);
    const double hi = s.value("lambda_hi", 1e-2);
    const int count = s.value("count", 13);
    const krrd::Index terms = s.value("terms", krrd::SpectralKernel::default_terms(alpha, lo));
    const krrd::SpectralKernel kern = krrd::SpectralKernel::create(alpha, terms);
    const std::vector<double> grid = krrd::log_grid(lo, hi, count);
    std::string values = "order,lambda,kappa_tilde_beta2\n";
    std::string slopes = "order,slope,theory_slope\n";
    for (const auto& mj : s.at("orders")) {
      const int m = mj.get<int>();
      std::vector<double> lx, ly;
      for (double lam : grid) {
        const double v = krrd::effective_dimension_beta(kern, lam, m);
        values += krrd::csv_line({std::to_string(m), krrd::format_double(lam), krrd::format_double(v)});
        lx.push_back(std::log(lam));
        ly.push_back(std::log(v));
      }
      double mx = 0, my = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
      mx /= static_cast<double>(lx.size());
      my /= static_cast<double>(lx.size());
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
      }
      slopes += krrd::csv_line({std::to_string(m), krrd::format_double(sxy / sxx),
                                krrd::format_double(-(2.0 * m + 1.0) / (2.0 * alpha))});
    }
    ctx.write_output(ctx.in_out_dir("kappa_values.csv"), values);
    ctx.write_output(ctx.in_out_dir("kappa_slopes.csv"), slopes);
  }

  if (j.contains("flambda_slopes")) {
    const auto& s = j.at("flambda_slopes");
    const double alpha = s.at("alpha").get<double>();
    const double lo = s.value("lambda_lo", 1e-8);
    const double hi = s.value("lambda_hi", 1e-4);
    const int count = s.value("count", 9);
    const krrd::Index cterms = s.value("coeff_terms", krrd::Index{20000});
    const krrd::SpectralKernel kern = krrd::SpectralKernel::create(alpha, cterms);
    const krrd::HolderFunction f0 = krrd::HolderFunction::standard(alpha, cterms);
    const std::vector<double> grid = krrd::log_grid(lo, hi, count);
    std::string values = "order,lambda,gap_sup\n";
    std::string slopes = "order,slope,theory_slope\n";
    for (const auto& kj : s.at("orders")) {
      const int k = kj.get<int>();
      std::vector<double> lx, ly;
      for (double lam : grid) {
        const krrd::Vector gap = krrd::f_lambda_gap_coeffs(f0.coefficients, kern, lam);
        const double v = krrd::fourier_sup_norm(gap, k).value;
        values += krrd::csv_line({std::to_string(k), krrd::format_double(lam), krrd::format_double(v)});
        lx.push_back(std::log(lam));
        ly.push_back(std::log(v));
      }
      double mx = 0, my = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
      mx /= static_cast<double>(lx.size());
      my /= static_cast<double>(lx.size());
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
      }
      slopes += krrd::csv_line({std::to_string(k), krrd::format_double(sxy / sxx),
                                krrd::format_double(0.5 - k / (2.0 * alpha))});
    }
    ctx.write_output(ctx.in_out_dir("flambda_values.csv"), values);
    ctx.write_output(ctx.in_out_dir("flambda_slopes.csv"), slopes);
  }

  if (j.contains("bounds")) {
    std::string out =
        "theorem,alpha,lambda,n,sigma,beta,delta,kappa_tilde2,kappa_tilde_beta2,kappa_beta,"
        "C_n_kappa,flambda_gap_sup,bound_value,status,caveat\n";
    for (const auto& b : j.at("bounds")) {
      const double alpha = b.at("alpha").get<double>();
      const double lam = b.at("lambda").get<double>();
      const krrd::Index n = b.at("n").get<krrd::Index>();
      const double sigma = b.value("sigma", 0.0);
      const int beta = b.value("beta", 1);
      const double delta = b.value("delta", 0.01);
      const std::string which = b.value("theorem", std::string("1"));
      const krrd::Index terms = b.value("terms", krrd::Index{100000});
      const krrd::SpectralKernel kern = krrd::SpectralKernel::create(alpha, terms);
      const krrd::HolderFunction f0 =
          krrd::HolderFunction::standard(alpha, std::min<krrd::Index>(terms, 20000));
      auto row = [&](const krrd::BoundReport& r, const std::string& status) {
        out += krrd::csv_line({which, krrd::format_double(alpha), krrd::format_double(lam),
                               std::to_string(n), krrd::format_double(sigma), std::to_string(beta),
                               krrd::format_double(delta), krrd::format_double(r.kappa_tilde2),
                               krrd::format_double(r.kappa_tilde_beta2),
                               krrd::format_double(r.kappa_beta), krrd::format_double(r.C_n_kappa),
                               krrd::format_double(r.flambda_gap_sup),
                               krrd::format_double(r.bound_value), status, r.caveat});
      };
      try {
        const krrd::BoundReport r = (which == "2")
                                        ? krrd::theorem2_bound(kern, f0, lam, n, sigma, beta, delta)
                                        : krrd::theorem1_bound(kern, f0, lam, n, sigma, beta);
        row(r, "ok");
      } catch (const krrd::NonContractive&) {
        krrd::BoundReport r;
        r.caveat = "C(n,kappa~) >= 1";
        row(r, "non_informative");
      }
    }
    ctx.write_output(ctx.in_out_dir("bounds.csv"), out);
  }

  if (j.contains("norm_checks")) {
    const auto& s = j.at("norm_checks");
    const double alpha = s.at("alpha").get<double>();
    const double lam = s.value("lambda", 1e-4);
    const int m = s.value("order", 1);
    const int trials = s.value("trials", 500);
    const krrd::Index terms = s.value("terms", krrd::Index{2000});
    const krrd::SpectralKernel kern = krrd::SpectralKernel::create(alpha, terms);
    const krrd::NormCheckResult r =
        krrd::rkhs_norm_inequality_check(kern, lam, m, trials, ctx.seed);
    std::string out = "alpha,lambda,order,trials,max_ratio_equivalent,max_ratio_plain\n";
    out += krrd::csv_line({krrd::format_double(alpha), krrd::format_double(lam), std::to_string(m),
                           std::to_string(trials), krrd::format_double(r.max_ratio_equivalent),
                           krrd::format_double(r.max_ratio_plain)});
    ctx.write_output(ctx.in_out_dir("norm_checks.csv"), out);
  }

  if (j.contains("rate")) {
    const auto& s = j.at("rate");
    const double alpha = s.at("alpha").get<double>();
    std::vector<krrd::Index> ns;
    for (const auto& v : s.at("n_values")) ns.push_back(v.get<krrd::Index>());
    const int reps = s.value("replications", 20);
    const double sigma = s.value("sigma", 0.5);
    std::string out;
    for (const auto& kj : s.at("orders")) {
      const krrd::RateFit fit = krrd::run_rate_experiment(kj.get<int>(), alpha, ns, reps, ctx.seed,
                                                          sigma, ctx.threads);
      if (out.empty())
        out = fit.to_csv();
      else {
        const std::string csv = fit.to_csv();
        out += csv.substr(csv.find('\n') + 1);
      }
    }
    ctx.write_output(ctx.in_out_dir("rate.csv"), out);
  }

  if (j.contains("adaptivity")) {
    const auto& s = j.at("adaptivity");
    const krrd::AdaptivityReport rep = krrd::run_adaptivity_check(
        s.at("alpha").get<double>(), s.at("n").get<krrd::Index>(), s.value("replications", 20),
        ctx.seed, {}, s.value("sigma", 0.3), ctx.threads);
    ctx.write_output(ctx.in_out_dir("adaptivity.csv"), rep.to_csv());
  }

  ctx.write_manifest();
  return 0;
}

int dispatch(RunContext& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const krrd::UnsupportedDerivativeOrder& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const krrd::MissingSigma2& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const krrd::SmoothnessViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const krrd::FactorizationFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const krrd::DegenerateSystem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const krrd::NonContractive& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const krrd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plug-in kernel ridge regression for function derivatives"};
  app.require_subcommand(1);

  RunContext ctx;
  std::string out_dir = ".";
  app.add_option("--seed", ctx.seed, "master seed; every random draw derives from it");
  app.add_option("--threads", ctx.threads, "worker threads for replications");
  app.add_option("--out-dir", out_dir, "directory for outputs and the run manifest");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a model from a data csv (header x1,...,xd,y)");
  std::string data_path, kernel_spec = "matern:2.5", lambda_grid_spec, nu_list, out_path = "model.json";
  double lambda_opt = -1.0, sigma2_opt = -1.0;
  bool tune_flag = false;
  fit_cmd->add_option("data", data_path, "input csv")->required();
  fit_cmd->add_option("--kernel", kernel_spec, "kernel spec, e.g. sobolev2 | matern:2.5 | rbf:0.3");
  fit_cmd->add_option("--lambda", lambda_opt, "fixed regularization parameter");
  fit_cmd->add_flag("--tune", tune_flag, "tune lambda and sigma2 by marginal likelihood");
  fit_cmd->add_option("--lambda-grid", lambda_grid_spec, "lo:hi:count log grid for tuning");
  fit_cmd->add_option("--nu-candidates", nu_list, "comma list; selects Matern nu by LOOCV");
  fit_cmd->add_option("--sigma2", sigma2_opt, "noise variance for predictive variance");
  fit_cmd->add_option("--out", out_path, "model file");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "evaluate derivatives of a fitted model");
  std::string model_path, query_path, orders_list = "0", pred_out = "preds.csv";
  bool variance = false;
  pred_cmd->add_option("model", model_path, "model json from fit")->required();
  pred_cmd->add_option("query", query_path, "query csv (header x1,...,xd)")->required();
  pred_cmd->add_option("--k", orders_list, "comma list of derivative orders");
  pred_cmd->add_flag("--variance", variance, "append pointwise variance columns");
  pred_cmd->add_option("--out", pred_out, "output csv");

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "hyperparameter search only");
  std::string tdata, tkernel = "matern:2.5", tgrid, tnu, tout = "tune.json";
  tune_cmd->add_option("data", tdata, "input csv")->required();
  tune_cmd->add_option("--kernel", tkernel, "kernel spec");
  tune_cmd->add_option("--lambda-grid", tgrid, "lo:hi:count log grid");
  tune_cmd->add_option("--nu-candidates", tnu, "comma list; selects Matern nu by LOOCV");
  tune_cmd->add_option("--out", tout, "result json");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo benchmark from a json config");
  std::string sim_config;
  bool plotdata = false, full = false;
  sim_cmd->add_option("config", sim_config, "simulation config json")->required();
  sim_cmd->add_flag("--plotdata", plotdata, "emit per-order long-format files for plotting");
  sim_cmd->add_flag("--full", full, "100 replications instead of the config value");

  // theory
  auto* theory_cmd = app.add_subcommand("theory", "bound reports and slope tables from a json config");
  std::string theory_config;
  theory_cmd->add_option("config", theory_config, "theory config json")->required();

  CLI11_PARSE(app, argc, argv);
  ctx.out_dir = out_dir;

  if (fit_cmd->parsed()) {
    ctx.subcommand = "fit";
    return dispatch(ctx, [&] {
      return cmd_fit(ctx, data_path, kernel_spec,
                     lambda_opt > 0 ? std::optional<double>(lambda_opt) : std::nullopt, tune_flag,
                     lambda_grid_spec, nu_list,
                     sigma2_opt >= 0 ? std::optional<double>(sigma2_opt) : std::nullopt, out_path);
    });
  }
  if (pred_cmd->parsed()) {
    ctx.subcommand = "predict";
    return dispatch(ctx,
                    [&] { return cmd_predict(ctx, model_path, query_path, orders_list, variance, pred_out); });
  }
  if (tune_cmd->parsed()) {
    ctx.subcommand = "tune";
    return dispatch(ctx, [&] { return cmd_tune(ctx, tdata, tkernel, tgrid, tnu, tout); });
  }
  if (sim_cmd->parsed()) {
    ctx.subcommand = "simulate";
    return dispatch(ctx, [&] { return cmd_simulate(ctx, sim_config, plotdata, full); });
  }
  ctx.subcommand = "theory";
  return dispatch(ctx, [&] { return cmd_theory(ctx, theory_config); });
}
