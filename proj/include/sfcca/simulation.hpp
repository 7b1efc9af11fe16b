#pragma once

// Ground-truth construction, data synthesis and evaluation metrics for
// simulation studies with planted canonical pairs.
//
// Multivariate pairs (Y, X) are jointly Gaussian with
//   S_YX = S_Y (sum_k gamma_k eta_k theta_k^T) S_X,
// so that (eta_k, theta_k) are the population canonical vectors. Curves are
//   y_i = Exp_mu(sum_j Y_ij phi_j + W_i phi_{d+1}),  W_i ~ N(0, 1/2).

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sfcca/pipeline.hpp"

namespace sfcca::sim {

struct SimConfig {
  int p = 200;
  int d = 3;
  int m = 3;
  int grid_size = 50;
  int K = 2;
  int support_size = 20;
  std::vector<double> gammas{0.95, 0.60};
  double contamination_variance = 0.5;
  /// Highest Legendre degree available for building principal fields.
  int max_degree = 4;
  std::uint64_t seed = 1;

  /// Throws ValidationError when the sizes are inconsistent.
  void validate() const;
};

struct SimTruth {
  SimConfig config;
  std::shared_ptr<const SPDCurve> mu;
  /// d + 1 orthonormal fields along mu; the last is the contamination mode.
  std::vector<TangentField> phis;
  /// d x K, eta^T S_Y eta = I.
  Matrix etas;
  /// p x K, theta^T S_X theta = I, shared row support.
  Matrix thetas;
  std::vector<int> support;
  Matrix sigma_x;
  Matrix sigma_y;
  Vector gammas;
  /// psi_k = sum_j eta_jk phi_j.
  std::vector<TangentField> psis;
  /// (frame index, polynomial degree) used for each phi.
  std::vector<std::pair<int, int>> phi_labels;

  /// Joint covariance of (Y, X), (d + p) x (d + p).
  Matrix joint_covariance() const;
};

/// Independent RNG seed for a (base, stream, index) triple.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

/// Polynomials of degree 0..max_degree on the grid, orthonormal under its
/// trapezoid weights (Gram-Schmidt applied to Legendre polynomials).
/// Returns a grid_size x (max_degree + 1) matrix.
Matrix discrete_legendre(const TimeGrid& grid, int max_degree);

SimTruth make_truth(const SimConfig& cfg);
/// Rebuilds the derived members (psis) after the stored parts are loaded.
void finalize_truth(SimTruth& truth);

struct MultivariateSample {
  Matrix y;  // N x d
  Matrix x;  // N x p
};

MultivariateSample sample_multivariate(const SimTruth& truth, Eigen::Index n, std::uint64_t seed);

/// Curves from multivariate draws. contamination_variance < 0 means use the
/// truth's configured value; 0 disables the extra mode.
std::vector<SPDCurve> synthesize_curves(const SimTruth& truth, const Matrix& y, std::uint64_t seed,
                                        double contamination_variance = -1.0);

// Metrics.

/// ||theta / ||theta|| - theta_hat / ||theta_hat|| ||; in [0, 2].
double metric_norm_error(const Vector& theta, const Vector& theta_hat);
/// F1 score of the nonzero pattern |theta_hat_i| > zero_tol against support.
double metric_f1(const std::vector<int>& support, const Vector& theta_hat, double zero_tol = 1e-10);
/// ||Gamma_{mu_hat, mu} psi_hat - psi||_mu.
double metric_pt_error(const TangentField& psi, const TangentField& psi_hat);
/// Pearson correlation of <<Log_mu y_i, Gamma psi_hat>>_mu with x_i^T theta_hat.
double metric_tangent_corr(const std::shared_ptr<const SPDCurve>& mu, const TangentField& psi_hat,
                           const Vector& theta_hat, std::span<const SPDCurve> curves, const Matrix& x);
/// Pearson correlation of sum_l w_l tr(y_i(t_l) psi_hat(t_l)) with x_i^T theta_hat.
double metric_euclid_corr(const SymCurve& psi_hat, const Vector& theta_hat, std::span<const SPDCurve> curves,
                          const Matrix& x);

enum class Method { Riemannian, Euclidean };
std::string method_name(Method m);
Method parse_method(const std::string& name);

struct TrialOptions {
  int folds = 5;
  Eigen::Index n_test = 2000;
  /// Lambda grid length and ratio for the per-trial cross-validation.
  int lambda_count = 100;
  double lambda_ratio = 1e-3;
  FitOptions fit;
};

struct TrialRecord {
  Method method = Method::Riemannian;
  Eigen::Index n = 0;
  int trial = 0;
  std::map<std::string, double> metrics;
  std::string error;
};

/// Per trial, per method: fresh training and test draws, CV-selected lambda,
/// and metrics A-D (Riemannian) or E (Euclidean). Failures are recorded in
/// the record's `error` field rather than thrown.
std::vector<TrialRecord> run_trials(const SimConfig& cfg, const std::vector<Eigen::Index>& n_list,
                                    int n_trials, const std::vector<Method>& methods,
                                    const TrialOptions& opts = {});

/// Long-format CSV: method,N,trial,metric,value.
std::string trials_csv(const std::vector<TrialRecord>& records);

/// Aligns the sign of (psi_hat, theta_hat) jointly with the truth via
/// <<Gamma psi_hat, psi>>_mu; returns +1 or -1.
double alignment_sign(const TangentField& psi, const TangentField& psi_hat);

}  // namespace sfcca::sim
