#pragma once

// Multivariate regression with a row-wise group-lasso penalty:
//
//   minimize_B  (2/N) ||M - X B||_F^2 + lambda * sum_i ||b_i||_2
//
// where b_i is the i-th row of the p x d matrix B. Solved by FISTA with a
// fixed 1/L step and gradient-based adaptive restart. No intercept and no
// standardization: callers center X.

#include <cstdint>
#include <vector>

#include "sfcca/spd.hpp"

namespace sfcca::group_lasso {

struct SolverOptions {
  /// Relative objective change that triggers a KKT check.
  double tol = 1e-9;
  int max_iter = 50000;
  /// Convergence is declared once kkt_residual drops to this value.
  double kkt_tol = 1e-7;
  /// Record the objective at every iteration.
  bool record_history = false;
};

struct SolveResult {
  Matrix coefficients;
  int iterations = 0;
  double objective = 0.0;
  double kkt = 0.0;
  std::vector<double> objective_history;
};

/// Thrown when max_iter is reached before the KKT tolerance.
class SolverError : public NumericError {
 public:
  SolverError(const std::string& what, Matrix last_iterate, double kkt)
      : NumericError(what), last_iterate_(std::move(last_iterate)), kkt_(kkt) {}
  const Matrix& last_iterate() const { return last_iterate_; }
  double kkt() const { return kkt_; }

 private:
  Matrix last_iterate_;
  double kkt_;
};

double objective(const Matrix& x, const Matrix& m, const Matrix& b, double lambda);

/// Smallest lambda for which B = 0 is optimal: (4/N) max_i ||(X^T M)_i||_2.
double lambda_max(const Matrix& x, const Matrix& m);

/// Largest row-wise violation of the subgradient optimality conditions.
double kkt_residual(const Matrix& x, const Matrix& m, double lambda, const Matrix& b);

/// Row prox of t * lambda * sum_i ||v_i||: scales row i by (1 - t lambda / ||v_i||)_+.
Matrix row_prox(const Matrix& v, double threshold);

SolveResult solve_detailed(const Matrix& x, const Matrix& m, double lambda,
                           const SolverOptions& opts = {}, const Matrix* warm_start = nullptr);

inline Matrix solve(const Matrix& x, const Matrix& m, double lambda, const SolverOptions& opts = {},
                    const Matrix* warm_start = nullptr) {
  return solve_detailed(x, m, lambda, opts, warm_start).coefficients;
}

/// count log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count = 100, double ratio = 1e-3);

/// Seeded assignment of N rows into K near-equal folds.
std::vector<int> assign_folds(Eigen::Index n, int folds, std::uint64_t seed);

struct CvPathResult {
  std::vector<double> lambdas;
  std::vector<double> mean_error;
  std::vector<double> sd_error;
  std::size_t best_index = 0;
  std::size_t one_se_index = 0;
  std::vector<int> fold_of_row;
  /// fold_coefficients[f][j]: solution on the training rows of fold f at lambdas[j].
  std::vector<std::vector<Matrix>> fold_coefficients;

  double lambda_min() const { return lambdas[best_index]; }
  double lambda_1se() const { return lambdas[one_se_index]; }
};

/// K-fold cross-validation of the held-out loss (2/N_val)||M_val - X_val B||_F^2
/// along a descending lambda grid, warm-started along the path.
CvPathResult cv_path(const Matrix& x, const Matrix& m, const std::vector<double>& lambdas, int folds,
                     std::uint64_t seed, const SolverOptions& opts = {});

}  // namespace sfcca::group_lasso
