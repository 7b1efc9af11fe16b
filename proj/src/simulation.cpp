#include "sfcca/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace sfcca::sim {

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = nd(rng);
  }
  return out;
}

// Gram-Schmidt of the columns of v in the inner product a^T S b, then
// normalization to a^T S a = 1.
Matrix orthonormalize(Matrix v, const Matrix& s) {
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) {
        v.col(k) -= (v.col(j).transpose() * s * v.col(k)).value() * v.col(j);
      }
    }
    const double nrm = std::sqrt((v.col(k).transpose() * s * v.col(k)).value());
    if (!(nrm > 1e-12)) throw NumericError("degenerate random vectors while building canonical pairs");
    v.col(k) /= nrm;
  }
  return v;
}

Matrix rotation(Eigen::Index m, double angle) {
  Matrix r = Matrix::Identity(m, m);
  if (m >= 2) {
    r(0, 0) = std::cos(angle);
    r(0, 1) = -std::sin(angle);
    r(1, 0) = std::sin(angle);
    r(1, 1) = std::cos(angle);
  }
  return r;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  std::ostringstream os;
  if (p < 1 || d < 1 || m < 1 || K < 1) os << "sizes must be positive; ";
  if (K > d || d > p) os << "need K <= d <= p; ";
  if (support_size < K || support_size > p) os << "need K <= support size <= p; ";
  if (grid_size < 2) os << "need at least two time points; ";
  if (static_cast<int>(gammas.size()) != K) os << "need one correlation per canonical pair; ";
  for (double g : gammas) {
    if (!(g >= 0.0 && g < 1.0)) os << "correlations must lie in [0, 1); ";
  }
  if (contamination_variance < 0.0) os << "contamination variance must be nonnegative; ";
  if (max_degree < 0 || max_degree >= grid_size) os << "invalid polynomial degree; ";
  if (d + 1 > m * (m + 1) / 2 * (max_degree + 1)) os << "not enough (frame, degree) pairs for d + 1 fields; ";
  const std::string msg = os.str();
  if (!msg.empty()) throw ValidationError("invalid simulation config: " + msg.substr(0, msg.size() - 2));
}

Matrix SimTruth::joint_covariance() const {
  const Eigen::Index d = sigma_y.rows();
  const Eigen::Index p = sigma_x.rows();
  const Matrix syx = sigma_y * etas * gammas.asDiagonal() * thetas.transpose() * sigma_x;
  Matrix c(d + p, d + p);
  c.topLeftCorner(d, d) = sigma_y;
  c.topRightCorner(d, p) = syx;
  c.bottomLeftCorner(p, d) = syx.transpose();
  c.bottomRightCorner(p, p) = sigma_x;
  return c;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(splitmix(base) ^ stream) ^ index);
}

Matrix discrete_legendre(const TimeGrid& grid, int max_degree) {
  const auto len = static_cast<Eigen::Index>(grid.size());
  Matrix p(len, max_degree + 1);
  for (Eigen::Index l = 0; l < len; ++l) {
    const double t = grid[static_cast<std::size_t>(l)];
    p(l, 0) = 1.0;
    if (max_degree >= 1) p(l, 1) = t;
    for (int n = 2; n <= max_degree; ++n) {
      p(l, n) = ((2.0 * n - 1.0) * t * p(l, n - 1) - (n - 1.0) * p(l, n - 2)) / n;
    }
  }
  Vector w(len);
  for (Eigen::Index l = 0; l < len; ++l) w(l) = grid.weights()[static_cast<std::size_t>(l)];
  return orthonormalize(p, Matrix(w.asDiagonal()));
}

SimTruth make_truth(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SimTruth truth;
  truth.config = cfg;
  const Eigen::Index m = cfg.m;

  // Mean curve: random eigenvectors at t = 0 with eigenvalues 1..m, rotated
  // by (pi/4) t in the first coordinate plane.
  Eigen::HouseholderQR<Matrix> qr(gaussian(m, m, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  Vector evals(m);
  for (Eigen::Index i = 0; i < m; ++i) evals(i) = static_cast<double>(i + 1);
  const Matrix mu0 = q * evals.asDiagonal() * q.transpose();
  const TimeGrid grid = TimeGrid::uniform(-1.0, 1.0, static_cast<std::size_t>(cfg.grid_size));
  std::vector<SPDMatrix> mu_vals;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const Matrix rot = rotation(m, std::numbers::pi / 4.0 * grid[l]);
    const Matrix v = rot * mu0 * rot.transpose();
    mu_vals.emplace_back(0.5 * (v + v.transpose()));
  }
  truth.mu = std::make_shared<const SPDCurve>(grid, std::move(mu_vals));

  // Principal fields: frame element times orthonormal polynomial, with
  // distinct (frame, degree) pairs.
  const int frame_count = static_cast<int>(m * (m + 1) / 2);
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < frame_count; ++k) {
    for (int deg = 0; deg <= cfg.max_degree; ++deg) pairs.emplace_back(k, deg);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(static_cast<std::size_t>(cfg.d + 1));
  truth.phi_labels = pairs;
  const Matrix poly = discrete_legendre(grid, cfg.max_degree);
  std::vector<std::vector<SymMatrix>> frames;
  frames.reserve(grid.size());
  for (const auto& f : truth.mu->values()) frames.push_back(frame_at(f));
  for (const auto& [k, deg] : pairs) {
    std::vector<SymMatrix> vals;
    for (std::size_t l = 0; l < grid.size(); ++l) {
      vals.push_back(frames[l][static_cast<std::size_t>(k)] * poly(static_cast<Eigen::Index>(l), deg));
    }
    truth.phis.emplace_back(truth.mu, std::move(vals));
  }

  // Multivariate model.
  Vector sy(cfg.d);
  for (int j = 0; j < cfg.d; ++j) sy(j) = static_cast<double>(cfg.d - j);
  truth.sigma_y = sy.asDiagonal();
  truth.sigma_x = Matrix::Identity(cfg.p, cfg.p);
  for (int i = 0; i < cfg.support_size; ++i) truth.sigma_x(i, i) = i < cfg.support_size / 2 ? 2.0 : 1.0;
  truth.support.resize(static_cast<std::size_t>(cfg.support_size));
  for (int i = 0; i < cfg.support_size; ++i) truth.support[static_cast<std::size_t>(i)] = i;

  truth.etas = orthonormalize(gaussian(cfg.d, cfg.K, rng), truth.sigma_y);
  const Matrix sxs = truth.sigma_x.topLeftCorner(cfg.support_size, cfg.support_size);
  truth.thetas = Matrix::Zero(cfg.p, cfg.K);
  truth.thetas.topRows(cfg.support_size) = orthonormalize(gaussian(cfg.support_size, cfg.K, rng), sxs);
  truth.gammas = Eigen::Map<const Vector>(cfg.gammas.data(), cfg.K);
  finalize_truth(truth);
  return truth;
}

void finalize_truth(SimTruth& truth) {
  truth.psis.clear();
  const int d = truth.config.d;
  for (Eigen::Index k = 0; k < truth.etas.cols(); ++k) {
    TangentField psi = TangentField::zero(truth.mu);
    for (int j = 0; j < d; ++j) psi = psi + truth.phis[static_cast<std::size_t>(j)] * truth.etas(j, k);
    truth.psis.push_back(std::move(psi));
  }
}

MultivariateSample sample_multivariate(const SimTruth& truth, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample size must be positive");
  const Matrix c = truth.joint_covariance();
  Matrix factor;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const double largest = es.eigenvalues().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, largest)) {
      std::ostringstream os;
      os << "joint covariance is not positive semidefinite (eigenvalue " << es.eigenvalues().minCoeff() << ")";
      throw NumericError(os.str());
    }
    factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::mt19937_64 rng(seed);
  const Matrix draws = gaussian(n, c.rows(), rng) * factor.transpose();
  const Eigen::Index d = truth.sigma_y.rows();
  return {draws.leftCols(d), draws.rightCols(c.rows() - d)};
}

std::vector<SPDCurve> synthesize_curves(const SimTruth& truth, const Matrix& y, std::uint64_t seed,
                                        double contamination_variance) {
  const int d = truth.config.d;
  if (y.cols() != d) throw ValidationError("score matrix must have d columns");
  const double var = contamination_variance < 0.0 ? truth.config.contamination_variance : contamination_variance;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double sd = std::sqrt(var);
  const auto& mu = *truth.mu;
  std::vector<SPDCurve> out;
  out.reserve(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double w = sd * nd(rng);
    std::vector<SPDMatrix> vals;
    vals.reserve(mu.size());
    for (std::size_t l = 0; l < mu.size(); ++l) {
      Matrix v = w * truth.phis[static_cast<std::size_t>(d)][l].matrix();
      for (int j = 0; j < d; ++j) v += y(i, j) * truth.phis[static_cast<std::size_t>(j)][l].matrix();
      vals.push_back(riem_exp(mu[l], SymMatrix::symmetrized(v)));
    }
    out.emplace_back(mu.grid(), std::move(vals));
  }
  return out;
}

double metric_norm_error(const Vector& theta, const Vector& theta_hat) {
  if (theta.size() != theta_hat.size()) throw ValidationError("vectors differ in length");
  const double a = theta.norm(), b = theta_hat.norm();
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("normalized error of a zero vector");
  return (theta / a - theta_hat / b).norm();
}

double metric_f1(const std::vector<int>& support, const Vector& theta_hat, double zero_tol) {
  if (support.empty()) throw ValidationError("true support is empty");
  std::vector<bool> truth(static_cast<std::size_t>(theta_hat.size()), false);
  for (int i : support) {
    if (i < 0 || i >= theta_hat.size()) throw ValidationError("support index out of range");
    truth[static_cast<std::size_t>(i)] = true;
  }
  double tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < theta_hat.size(); ++i) {
    const bool est = std::abs(theta_hat(i)) > zero_tol;
    const bool act = truth[static_cast<std::size_t>(i)];
    if (est && act) ++tp;
    if (est && !act) ++fp;
    if (!est && act) ++fn;
  }
  if (tp + fp == 0 || tp + fn == 0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double metric_pt_error(const TangentField& psi, const TangentField& psi_hat) {
  return field_norm(transport_field(psi_hat, psi.base()) - psi);
}

double alignment_sign(const TangentField& psi, const TangentField& psi_hat) {
  return field_inner(transport_field(psi_hat, psi.base()), psi) < 0.0 ? -1.0 : 1.0;
}

double metric_tangent_corr(const std::shared_ptr<const SPDCurve>& mu, const TangentField& psi_hat,
                           const Vector& theta_hat, std::span<const SPDCurve> curves, const Matrix& x) {
  if (static_cast<Eigen::Index>(curves.size()) != x.rows()) throw ValidationError("test set sizes differ");
  if (x.cols() != theta_hat.size()) throw ValidationError("canonical vector length mismatch");
  const TangentField moved = transport_field(psi_hat, mu);
  // <W, V>_P = <W, P^-1 V P^-1>_F.
  const auto& w = mu->grid().weights();
  std::vector<Matrix> dual;
  dual.reserve(mu->size());
  for (std::size_t l = 0; l < mu->size(); ++l) {
    const Eigen::LLT<Matrix> llt((*mu)[l].matrix());
    const Matrix a = llt.solve(moved[l].matrix());
    dual.push_back(w[l] * llt.solve(a.transpose()));
  }
  Vector u(x.rows());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (!(curves[i].grid() == mu->grid())) throw ValidationError("test curve on a different grid");
    double acc = 0.0;
    for (std::size_t l = 0; l < mu->size(); ++l) {
      acc += (riem_log((*mu)[l], curves[i][l]).matrix().array() * dual[l].array()).sum();
    }
    u(static_cast<Eigen::Index>(i)) = acc;
  }
  return pearson(u, x * theta_hat);
}

double metric_euclid_corr(const SymCurve& psi_hat, const Vector& theta_hat, std::span<const SPDCurve> curves,
                          const Matrix& x) {
  if (static_cast<Eigen::Index>(curves.size()) != x.rows()) throw ValidationError("test set sizes differ");
  if (x.cols() != theta_hat.size()) throw ValidationError("canonical vector length mismatch");
  Vector u(x.rows());
  for (std::size_t i = 0; i < curves.size(); ++i) u(static_cast<Eigen::Index>(i)) = frobenius_inner(curves[i], psi_hat);
  return pearson(u, x * theta_hat);
}

std::string method_name(Method m) { return m == Method::Riemannian ? "riemannian" : "euclidean"; }

Method parse_method(const std::string& name) {
  if (name == "riemannian") return Method::Riemannian;
  if (name == "euclidean") return Method::Euclidean;
  throw ValidationError("unknown method '" + name + "'");
}

namespace {

std::map<std::string, double> riemannian_trial(const SimTruth& truth, std::span<const SPDCurve> curves,
                                               const Matrix& x, std::span<const SPDCurve> test_curves,
                                               const Matrix& test_x, std::uint64_t cv_seed,
                                               const TrialOptions& opts) {
  RFPCAFit pca = rfpca_fit(curves, truth.config.d, opts.fit.frechet);
  const Matrix xs = x.rowwise() - x.colwise().mean();
  const Matrix target = pca.scores * pca.basis.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  const auto grid = group_lasso::lambda_grid(group_lasso::lambda_max(xs, target), opts.lambda_count, opts.lambda_ratio);
  const double lambda = cv_lambda(pca.scores, pca.basis.eigenvalues, xs, opts.folds, cv_seed, opts.fit.solver, grid);
  const FunctionalCCAModel model = fit_from_rfpca(std::move(pca), x, lambda, opts.fit);
  if (model.rank() == 0) throw NumericError("fit retained no canonical pairs");

  const double s = alignment_sign(truth.psis[0], model.canonical_functions[0]);
  const TangentField psi_hat = model.canonical_functions[0] * s;
  const Vector theta_hat = s * model.cca.T.col(0);
  std::map<std::string, double> out;
  out["A_norm_error"] = metric_norm_error(truth.thetas.col(0), theta_hat);
  out["B_f1"] = metric_f1(truth.support, theta_hat);
  out["C_pt_error"] = metric_pt_error(truth.psis[0], psi_hat);
  out["D_tangent_corr"] = metric_tangent_corr(truth.mu, psi_hat, theta_hat, test_curves, test_x);
  return out;
}

std::map<std::string, double> euclidean_trial(const SimTruth& truth, std::span<const SPDCurve> curves,
                                              const Matrix& x, std::span<const SPDCurve> test_curves,
                                              const Matrix& test_x, std::uint64_t cv_seed,
                                              const TrialOptions& opts) {
  const auto coefs = euclidean_coefficients(curves);
  const TimeGrid& grid = curves.front().grid();
  const MfpcaResult pca = mfpca(coefs, truth.config.d, grid);
  const Matrix xs = x.rowwise() - x.colwise().mean();
  const Matrix target = pca.scores * pca.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  const auto lambdas = group_lasso::lambda_grid(group_lasso::lambda_max(xs, target), opts.lambda_count, opts.lambda_ratio);
  const double lambda = cv_lambda(pca.scores, pca.eigenvalues, xs, opts.folds, cv_seed, opts.fit.solver, lambdas);
  const EuclideanCCAModel model =
      fit_euclidean_from_mfpca(pca, grid, curves.front().dim(), x, lambda, opts.fit);
  if (model.rank() == 0) throw NumericError("fit retained no canonical pairs");
  std::map<std::string, double> out;
  out["E_euclid_corr"] = metric_euclid_corr(model.canonical_functions[0], model.cca.T.col(0), test_curves, test_x);
  return out;
}

}  // namespace

std::vector<TrialRecord> run_trials(const SimConfig& cfg, const std::vector<Eigen::Index>& n_list, int n_trials,
                                    const std::vector<Method>& methods, const TrialOptions& opts) {
  if (n_trials < 1) throw ValidationError("need at least one trial");
  const SimTruth truth = make_truth(cfg);
  std::vector<TrialRecord> records;
  for (Eigen::Index n : n_list) {
    for (int t = 0; t < n_trials; ++t) {
      const auto idx = static_cast<std::uint64_t>(n) * 1000003ULL + static_cast<std::uint64_t>(t);
      std::vector<SPDCurve> curves, test_curves;
      Matrix x, test_x;
      std::string data_error;
      try {
        const auto train = sample_multivariate(truth, n, derive_seed(cfg.seed, 1, idx));
        curves = synthesize_curves(truth, train.y, derive_seed(cfg.seed, 2, idx));
        x = train.x;
        const auto test = sample_multivariate(truth, opts.n_test, derive_seed(cfg.seed, 3, idx));
        test_curves = synthesize_curves(truth, test.y, derive_seed(cfg.seed, 4, idx));
        test_x = test.x;
      } catch (const Error& e) {
        data_error = e.what();
      }
      for (Method method : methods) {
        TrialRecord rec;
        rec.method = method;
        rec.n = n;
        rec.trial = t;
        if (!data_error.empty()) {
          rec.error = data_error;
        } else {
          try {
            const auto cv_seed = derive_seed(cfg.seed, 5, idx);
            rec.metrics = method == Method::Riemannian
                              ? riemannian_trial(truth, curves, x, test_curves, test_x, cv_seed, opts)
                              : euclidean_trial(truth, curves, x, test_curves, test_x, cv_seed, opts);
          } catch (const Error& e) {
            rec.error = e.what();
          }
        }
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "method,N,trial,metric,value\n";
  for (const auto& r : records) {
    const std::string prefix = method_name(r.method) + "," + std::to_string(r.n) + "," + std::to_string(r.trial) + ",";
    if (!r.error.empty()) {
      os << prefix << "failed,1\n";
      continue;
    }
    for (const auto& [name, value] : r.metrics) os << prefix << name << "," << format_double(value) << "\n";
  }
  return os.str();
}

}  // namespace sfcca::sim
