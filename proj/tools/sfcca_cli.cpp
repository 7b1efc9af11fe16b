#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfcca/io.hpp"
#include "sfcca/simulation.hpp"

namespace fs = std::filesystem;
using namespace sfcca;
using io::json;

namespace {

struct SimulateArgs {
  sim::SimConfig cfg;
  Eigen::Index n = 200;
  Eigen::Index n_test = 0;
  std::string out_dir = ".";
};

struct FitArgs {
  std::string curves;
  std::string covariates;
  int rank = 3;
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  int folds = 5;
  std::uint64_t seed = 0;
  bool center_x = true;
  bool scale_x = false;
  std::string method = "riemannian";
  std::string output = "model.json";
};

struct CvArgs {
  std::string curves;
  std::string covariates;
  std::vector<int> rank_grid{1, 2, 3, 4, 5};
  std::vector<double> lambda_grid;
  int folds = 5;
  std::uint64_t seed = 0;
  bool scale_x = false;
  std::string output = "cv.csv";
  std::string model_output;
};

struct EvaluateArgs {
  std::string model;
  std::string truth;
  std::string curves;
  std::string covariates;
  std::string output = "metrics.csv";
};

struct ModeArgs {
  std::string model;
  int k = 1;
  double c = 1.0;
  std::string output = "mode.csv";
};

struct TrialsArgs {
  sim::SimConfig cfg;
  std::vector<Eigen::Index> n_list{50, 200, 800};
  int trials = 15;
  std::vector<std::string> methods{"riemannian"};
  int folds = 5;
  Eigen::Index n_test = 2000;
  std::string output = "trials.csv";
};

std::vector<std::string> subject_ids(Eigen::Index n, const std::string& prefix = "s") {
  std::vector<std::string> ids;
  const auto width = std::to_string(n).size();
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string num = std::to_string(i + 1);
    ids.push_back(prefix + std::string(width - num.size(), '0') + num);
  }
  return ids;
}

void add_sim_config(CLI::App* cmd, sim::SimConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "Base random seed")->capture_default_str();
  cmd->add_option("--p", cfg.p, "Covariate dimension")->capture_default_str();
  cmd->add_option("-d,--rank", cfg.d, "Number of principal fields")->capture_default_str();
  cmd->add_option("--m", cfg.m, "Matrix dimension")->capture_default_str();
  cmd->add_option("--grid-size", cfg.grid_size, "Time points per curve")->capture_default_str();
  cmd->add_option("--support-size", cfg.support_size, "Nonzero rows of the canonical vectors")->capture_default_str();
  cmd->add_option("--gammas", cfg.gammas, "Canonical correlations")->delimiter(',')->capture_default_str();
  cmd->add_option("--contamination-variance", cfg.contamination_variance, "Variance of the extra mode")
      ->capture_default_str();
}

void run_simulate(const SimulateArgs& a) {
  sim::SimConfig cfg = a.cfg;
  cfg.K = static_cast<int>(cfg.gammas.size());
  cfg.validate();
  if (a.n < 2) throw ValidationError("--n must be at least 2");
  const sim::SimTruth truth = sim::make_truth(cfg);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);

  auto emit = [&](Eigen::Index n, std::uint64_t stream, const std::string& prefix, const std::string& tag) {
    const auto sample = sim::sample_multivariate(truth, n, sim::derive_seed(cfg.seed, stream, 0));
    const auto curves = sim::synthesize_curves(truth, sample.y, sim::derive_seed(cfg.seed, stream + 1, 0));
    const auto ids = subject_ids(n, tag);
    io::write_file(dir / (prefix + "curves.csv"), io::curves_csv(ids, curves));
    io::write_file(dir / (prefix + "covariates.csv"), io::covariates_csv(ids, sample.x));
  };
  emit(a.n, 1, "", "s");
  if (a.n_test > 0) emit(a.n_test, 3, "test_", "t");
  io::write_file(dir / "truth.json", io::dump(io::truth_to_json(truth)));
  std::cout << "wrote " << a.n << " training subjects" << (a.n_test > 0 ? " and " + std::to_string(a.n_test) + " test subjects" : "")
            << " to " << dir.string() << "\n";
}

void print_summary(const CCAModel& cca, double lambda, const std::vector<std::string>& warnings) {
  std::cout << "lambda: " << io::format_double(lambda) << "\n";
  std::cout << "canonical pairs: " << cca.rank() << "\n";
  for (Eigen::Index k = 0; k < cca.correlations.size(); ++k) {
    std::cout << "correlation " << k + 1 << ": " << io::format_double(cca.correlations(k)) << "\n";
  }
  std::vector<int> support;
  for (Eigen::Index i = 0; i < cca.T.rows(); ++i) {
    if (cca.T.row(i).norm() > 0.0) support.push_back(static_cast<int>(i + 1));
  }
  std::cout << "selected covariates (" << support.size() << "):";
  for (int s : support) std::cout << " x" << s;
  std::cout << "\n";
  if (cca.ties_flagged) std::cout << "warning: tied canonical correlations\n";
  for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
}

// Centered (and optionally unit-variance) covariates, as the fit sees them.
Matrix cv_design(const Matrix& x, bool scale) {
  Matrix xs = x.rowwise() - x.colwise().mean();
  if (scale) {
    const Vector sd = xs.colwise().norm().transpose() / std::sqrt(static_cast<double>(xs.rows()));
    if ((sd.array() <= 0.0).any()) throw ValidationError("a covariate column is constant and cannot be scaled");
    xs = xs * sd.cwiseInverse().asDiagonal();
  }
  return xs;
}

json fit_config(const FitArgs& a, double lambda) {
  return json{{"command", "fit"},      {"method", a.method},     {"rank", a.rank},
              {"lambda", lambda},      {"lambda_fixed", a.lambda.has_value()},
              {"lambda_grid", a.lambda_grid}, {"folds", a.folds}, {"center_x", a.center_x},
              {"scale_x", a.scale_x}};
}

void run_fit(const FitArgs& a) {
  const io::Dataset ds = io::load_dataset(a.curves, a.covariates);
  const sim::Method method = sim::parse_method(a.method);
  if (a.lambda && *a.lambda < 0.0) throw ValidationError("--lambda must be nonnegative");
  FitOptions opts;
  opts.scale_x = a.scale_x;
  if (a.lambda && *a.lambda == 0.0) opts.solver.kkt_tol = 1e-11;
  std::vector<double> grid = a.lambda_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  io::ModelArtifact art;
  art.meta.seed = a.seed;
  if (method == sim::Method::Riemannian) {
    RFPCAFit pca = rfpca_fit(ds.curves, a.rank, opts.frechet);
    double lambda = 0.0;
    if (a.lambda) {
      lambda = *a.lambda;
    } else {
      lambda = cv_lambda(pca.scores, pca.basis.eigenvalues, cv_design(ds.x, a.scale_x), a.folds, a.seed, opts.solver,
                         grid);
    }
    art.kind = "functional_cca";
    art.functional = fit_from_rfpca(std::move(pca), ds.x, lambda, opts);
    if (!a.center_x) art.functional.x_transform.center.setZero();
    art.meta.config = fit_config(a, lambda);
    print_summary(art.functional.cca, lambda, art.functional.warnings);
  } else {
    const auto coefs = euclidean_coefficients(ds.curves);
    const TimeGrid& tg = ds.curves.front().grid();
    const MfpcaResult pca = mfpca(coefs, a.rank, tg);
    double lambda = 0.0;
    if (a.lambda) {
      lambda = *a.lambda;
    } else {
      lambda = cv_lambda(pca.scores, pca.eigenvalues, cv_design(ds.x, a.scale_x), a.folds, a.seed, opts.solver, grid);
    }
    art.kind = "euclidean_cca";
    art.euclidean = fit_euclidean_from_mfpca(pca, tg, ds.curves.front().dim(), ds.x, lambda, opts);
    if (!a.center_x) art.euclidean.x_transform.center.setZero();
    art.meta.config = fit_config(a, lambda);
    print_summary(art.euclidean.cca, lambda, art.euclidean.warnings);
  }
  io::write_file(a.output, io::dump(io::artifact_to_json(art)));
}

void run_cv(const CvArgs& a) {
  const io::Dataset ds = io::load_dataset(a.curves, a.covariates);
  FitCvOptions opts;
  opts.fit.scale_x = a.scale_x;
  opts.lambdas = a.lambda_grid;
  std::sort(opts.lambdas.begin(), opts.lambdas.end(), std::greater<>());
  opts.folds = a.folds;
  opts.seed = a.seed;
  const FitCvResult res = fit_cv(ds.curves, ds.x, a.rank_grid, opts);

  std::size_t width = 0;
  for (const auto& row : res.table) width = std::max(width, row.correlations.size());
  std::ostringstream os;
  os << "d,lambda,error_mean,error_sd";
  for (std::size_t k = 0; k < width; ++k) os << ",cv_corr" << k + 1;
  os << "\n";
  for (const auto& row : res.table) {
    os << row.d << "," << io::format_double(row.lambda) << "," << io::format_double(row.error_mean) << ","
       << io::format_double(row.error_sd);
    for (std::size_t k = 0; k < width; ++k) {
      os << ",";
      if (k < row.correlations.size()) os << io::format_double(row.correlations[k]);
    }
    os << "\n";
  }
  io::write_file(a.output, os.str());
  for (std::size_t g = 0; g < res.scree.size(); ++g) {
    std::cout << "d=" << res.scree[g].first << " lambda=" << io::format_double(res.chosen_lambda[g].second)
              << " scree=" << io::format_double(res.scree[g].second) << "\n";
  }
  std::cout << "selected d=" << res.d << " lambda=" << io::format_double(res.lambda) << "\n";
  if (!a.model_output.empty()) {
    io::ModelArtifact art;
    art.kind = "functional_cca";
    art.functional = res.model;
    art.meta.seed = a.seed;
    art.meta.config = json{{"command", "cv"},       {"rank_grid", a.rank_grid}, {"lambda_grid", a.lambda_grid},
                           {"folds", a.folds},      {"scale_x", a.scale_x},     {"rank", res.d},
                           {"lambda", res.lambda}};
    io::write_file(a.model_output, io::dump(io::artifact_to_json(art)));
  }
}

SymCurve as_sym_curve(const TangentField& f) { return SymCurve{f.base()->grid(), f.values()}; }

void run_evaluate(const EvaluateArgs& a) {
  const io::ModelArtifact art = io::model_from_json(json::parse(io::read_file(a.model)));
  const sim::SimTruth truth = io::truth_from_json(json::parse(io::read_file(a.truth)));
  const io::Dataset ds = io::load_dataset(a.curves, a.covariates);
  const CCAModel& cca = art.cca();
  if (cca.rank() == 0) throw NumericError("model has no canonical pairs to evaluate");
  if (cca.T.rows() != truth.thetas.rows()) throw ValidationError("model and truth have different covariate dimensions");

  std::vector<std::pair<std::string, double>> metrics;
  if (art.kind == "functional_cca") {
    const auto& model = art.functional;
    const double s = sim::alignment_sign(truth.psis[0], model.canonical_functions[0]);
    const TangentField psi_hat = model.canonical_functions[0] * s;
    const Vector theta_hat = s * cca.T.col(0);
    metrics.emplace_back("A_norm_error", sim::metric_norm_error(truth.thetas.col(0), theta_hat));
    metrics.emplace_back("B_f1", sim::metric_f1(truth.support, theta_hat));
    metrics.emplace_back("C_pt_error", sim::metric_pt_error(truth.psis[0], psi_hat));
    metrics.emplace_back("D_tangent_corr", sim::metric_tangent_corr(truth.mu, psi_hat, theta_hat, ds.curves, ds.x));
    metrics.emplace_back("E_euclid_corr", sim::metric_euclid_corr(as_sym_curve(psi_hat), theta_hat, ds.curves, ds.x));
  } else {
    const auto& model = art.euclidean;
    Vector theta_hat = cca.T.col(0);
    if (theta_hat.dot(truth.sigma_x * truth.thetas.col(0)) < 0.0) theta_hat = -theta_hat;
    const double s = theta_hat.dot(cca.T.col(0)) < 0.0 ? -1.0 : 1.0;
    SymCurve psi_hat = model.canonical_functions[0];
    for (auto& v : psi_hat.values) v = v * s;
    metrics.emplace_back("A_norm_error", sim::metric_norm_error(truth.thetas.col(0), theta_hat));
    metrics.emplace_back("B_f1", sim::metric_f1(truth.support, theta_hat));
    metrics.emplace_back("E_euclid_corr", sim::metric_euclid_corr(psi_hat, theta_hat, ds.curves, ds.x));
  }
  std::ostringstream os;
  os << "metric,value\n";
  for (const auto& [name, value] : metrics) {
    os << name << "," << io::format_double(value) << "\n";
    std::cout << name << " = " << io::format_double(value) << "\n";
  }
  io::write_file(a.output, os.str());
}

void run_mode(const ModeArgs& a) {
  const io::ModelArtifact art = io::model_from_json(json::parse(io::read_file(a.model)));
  if (art.kind != "functional_cca") throw ValidationError("mode curves require a riemannian model");
  const auto& model = art.functional;
  auto [minus, plus] = mode_extremes(model, a.k, a.c);
  std::vector<SPDCurve> curves{*model.basis.mean_curve, std::move(minus), std::move(plus)};
  io::write_file(a.output, io::curves_csv({"mean", "minus", "plus"}, curves));
}

void run_trials_cmd(const TrialsArgs& a) {
  sim::SimConfig cfg = a.cfg;
  cfg.K = static_cast<int>(cfg.gammas.size());
  std::vector<sim::Method> methods;
  for (const auto& m : a.methods) methods.push_back(sim::parse_method(m));
  sim::TrialOptions opts;
  opts.folds = a.folds;
  opts.n_test = a.n_test;
  const auto records = sim::run_trials(cfg, a.n_list, a.trials, methods, opts);
  io::write_file(a.output, sim::trials_csv(records));
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error.empty() ? 0 : 1;
  std::cout << records.size() << " trial records, " << failed << " failed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse functional CCA between SPD-matrix-valued curves and high-dimensional covariates"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with a known truth");
  add_sim_config(simulate, sa.cfg);
  simulate->add_option("--n", sa.n, "Training subjects")->capture_default_str();
  simulate->add_option("--n-test", sa.n_test, "Test subjects (0 for none)")->capture_default_str();
  simulate->add_option("--out-dir", sa.out_dir, "Output directory")->capture_default_str();

  FitArgs fa;
  auto* fitc = app.add_subcommand("fit", "Fit a sparse functional CCA model");
  fitc->add_option("--curves", fa.curves, "Curves CSV")->required();
  fitc->add_option("--covariates", fa.covariates, "Covariates CSV")->required();
  fitc->add_option("-d,--rank", fa.rank, "Number of principal fields")->capture_default_str();
  auto* lambda_opt = fitc->add_option("--lambda", fa.lambda, "Group-lasso penalty on the (2/N)||M - XB||^2 loss; lambda/4 under the 1/(2N) convention (omit to cross-validate)");
  fitc->add_option("--lambda-grid", fa.lambda_grid, "Comma-separated penalties for cross-validation")
      ->delimiter(',')
      ->excludes(lambda_opt);
  fitc->add_option("--folds", fa.folds, "Cross-validation folds")->capture_default_str();
  fitc->add_option("--seed", fa.seed, "Fold assignment seed")->capture_default_str();
  fitc->add_flag("--center-x,!--no-center-x", fa.center_x, "Center covariates when forming variates")
      ->capture_default_str();
  fitc->add_flag("--scale-x,!--no-scale-x", fa.scale_x, "Scale covariates to unit variance")->capture_default_str();
  fitc->add_option("--method", fa.method, "riemannian or euclidean")
      ->check(CLI::IsMember({"riemannian", "euclidean"}))
      ->capture_default_str();
  fitc->add_option("--output", fa.output, "Model JSON")->capture_default_str();

  CvArgs ca;
  auto* cv = app.add_subcommand("cv", "Cross-validate rank and penalty");
  cv->add_option("--curves", ca.curves, "Curves CSV")->required();
  cv->add_option("--covariates", ca.covariates, "Covariates CSV")->required();
  cv->add_option("--rank-grid", ca.rank_grid, "Comma-separated candidate ranks")->delimiter(',')->capture_default_str();
  cv->add_option("--lambda-grid", ca.lambda_grid, "Comma-separated penalties")->delimiter(',');
  cv->add_option("--folds", ca.folds, "Cross-validation folds")->capture_default_str();
  cv->add_option("--seed", ca.seed, "Fold assignment seed")->capture_default_str();
  cv->add_flag("--scale-x,!--no-scale-x", ca.scale_x, "Scale covariates to unit variance")->capture_default_str();
  cv->add_option("--output", ca.output, "CV table CSV")->capture_default_str();
  cv->add_option("--model-output", ca.model_output, "Also write the selected model JSON");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model against a simulation truth");
  evaluate->add_option("--model", ea.model, "Model JSON")->required();
  evaluate->add_option("--truth", ea.truth, "Truth JSON")->required();
  evaluate->add_option("--curves", ea.curves, "Test curves CSV")->required();
  evaluate->add_option("--covariates", ea.covariates, "Test covariates CSV")->required();
  evaluate->add_option("--output", ea.output, "Metrics CSV")->capture_default_str();

  ModeArgs ma;
  auto* mode = app.add_subcommand("mode", "Curves along a canonical function, Exp(+-c psi_k)");
  mode->add_option("--model", ma.model, "Model JSON")->required();
  mode->add_option("--k", ma.k, "Canonical pair (1-based)")->capture_default_str();
  mode->add_option("--c", ma.c, "Step size")->capture_default_str();
  mode->add_option("--output", ma.output, "Curves CSV")->capture_default_str();

  TrialsArgs ta;
  auto* trials = app.add_subcommand("trials", "Repeated simulation trials with metrics");
  add_sim_config(trials, ta.cfg);
  trials->add_option("--n-list", ta.n_list, "Comma-separated training sizes")->delimiter(',')->capture_default_str();
  trials->add_option("--trials", ta.trials, "Trials per size")->capture_default_str();
  trials->add_option("--methods", ta.methods, "riemannian,euclidean")->delimiter(',')->capture_default_str();
  trials->add_option("--folds", ta.folds, "Cross-validation folds")->capture_default_str();
  trials->add_option("--n-test", ta.n_test, "Test subjects per trial")->capture_default_str();
  trials->add_option("--output", ta.output, "Results CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*simulate) run_simulate(sa);
    if (*fitc) run_fit(fa);
    if (*cv) run_cv(ca);
    if (*evaluate) run_evaluate(ea);
    if (*mode) run_mode(ma);
    if (*trials) run_trials_cmd(ta);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
