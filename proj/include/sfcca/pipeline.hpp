#pragma once

// End-to-end sparse functional CCA between SPD-valued curves and a
// high-dimensional covariate vector: RFPCA of the curves, then asymmetric
// sparse CCA of the scores against X with S_Y = diag(eigenvalues).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sfcca/cca.hpp"
#include "sfcca/rfpca.hpp"

namespace sfcca {

struct FitOptions {
  group_lasso::SolverOptions solver;
  FrechetOptions frechet;
  /// Divide centered X columns by their standard deviation before fitting.
  /// Canonical vectors are always reported in the original X units.
  bool scale_x = false;
};

struct XTransform {
  Vector center;
  Vector scale;

  /// (x - center) / scale, row-wise.
  Matrix apply(const Matrix& x) const;
};

struct FunctionalCCAModel {
  RFPCABasis basis;
  /// Canonical vectors in original (centered, unscaled) X units.
  CCAModel cca;
  std::vector<TangentField> canonical_functions;
  XTransform x_transform;
  double lambda = 0.0;
  std::vector<std::string> warnings;

  int rank() const { return cca.rank(); }
};

FunctionalCCAModel fit(std::span<const SPDCurve> curves, const Matrix& x, int d, double lambda,
                       const FitOptions& opts = {});
/// Same as fit, reusing an existing RFPCA of the curves.
FunctionalCCAModel fit_from_rfpca(RFPCAFit pca, const Matrix& x, double lambda, const FitOptions& opts = {});

/// Lambda minimizing the K-fold CV error of the regression of whitened scores
/// on the (already centered) covariates. An empty grid means the default
/// 100-point grid below lambda_max.
double cv_lambda(const Matrix& scores, const Vector& eigenvalues, const Matrix& xs, int folds,
                 std::uint64_t seed, const group_lasso::SolverOptions& solver = {},
                 std::vector<double> lambdas = {});

/// Tangent-space canonical variates <<Log_mu y_i, psi_k>> (N x K).
Matrix curve_variates(const FunctionalCCAModel& model, std::span<const SPDCurve> curves);
/// Covariate canonical variates (x_i - center)^T theta_k (N x K).
Matrix covariate_variates(const CCAModel& cca, const XTransform& xt, const Matrix& x);

struct CvRow {
  int d = 0;
  double lambda = 0.0;
  double error_mean = 0.0;
  double error_sd = 0.0;
  /// Held-out correlation of each canonical pair, averaged over folds (length d).
  std::vector<double> correlations;
};

struct FitCvOptions {
  FitOptions fit;
  /// Shared lambda grid (descending). When empty, each rank gets 100
  /// log-spaced values from its own lambda_max down to 1e-3 lambda_max.
  std::vector<double> lambdas;
  int folds = 5;
  std::uint64_t seed = 0;
  /// Relative gain in summed squared CV correlations below which the rank
  /// curve is considered level.
  double scree_threshold = 0.02;
};

struct FitCvResult {
  int d = 0;
  double lambda = 0.0;
  std::vector<CvRow> table;
  /// Per candidate rank: chosen lambda and the scree statistic.
  std::vector<std::pair<int, double>> chosen_lambda;
  std::vector<std::pair<int, double>> scree;
  FunctionalCCAModel model;
};

FitCvResult fit_cv(std::span<const SPDCurve> curves, const Matrix& x, std::vector<int> d_grid,
                   const FitCvOptions& opts = {});

/// Exp_mu(-c psi_k) and Exp_mu(+c psi_k); k is 1-based.
std::pair<SPDCurve, SPDCurve> mode_extremes(const FunctionalCCAModel& model, int k, double c);

/// Euclidean analogue: curves treated as symmetric-matrix-valued functions.
struct EuclideanCCAModel {
  TimeGrid grid;
  std::vector<SymMatrix> mean;
  std::vector<SymCurve> components;
  std::vector<Matrix> coefficient_functions;
  Vector eigenvalues;
  CCAModel cca;
  std::vector<SymCurve> canonical_functions;
  XTransform x_transform;
  double lambda = 0.0;
  std::vector<std::string> warnings;

  int rank() const { return cca.rank(); }
};

/// Lower-triangle vectorization (off-diagonals scaled by sqrt 2), multivariate
/// FPCA and sparse CCA.
EuclideanCCAModel fit_euclidean(std::span<const SPDCurve> curves, const Matrix& x, int d, double lambda,
                                const FitOptions& opts = {});

/// Euclidean coefficient curves (L x M) of each SPD curve.
std::vector<Matrix> euclidean_coefficients(std::span<const SPDCurve> curves);
/// Same as fit_euclidean, reusing an MFPCA of euclidean_coefficients(curves).
EuclideanCCAModel fit_euclidean_from_mfpca(const MfpcaResult& pca, const TimeGrid& grid, Eigen::Index m,
                                           const Matrix& x, double lambda, const FitOptions& opts = {});

/// L2 Frobenius inner product sum_l w_l tr(A(t_l) B(t_l)) of a curve with a
/// symmetric-matrix function on the same grid.
double frobenius_inner(const SPDCurve& y, const SymCurve& f);

}  // namespace sfcca
