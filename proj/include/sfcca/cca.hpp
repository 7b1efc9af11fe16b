#pragma once

// Canonical correlation analysis between a low-dimensional Y (N x d) and a
// high-dimensional X (N x p).
//
// sparse_cca whitens Y, regresses it on X with a group-lasso penalty and
// recovers canonical pairs from the eigendecomposition of B^T S_X B.
// classical_cca is the textbook SVD route, used as an oracle.

#include <optional>

#include "sfcca/group_lasso.hpp"

namespace sfcca {

struct CCAModel {
  /// p x K canonical vectors for X.
  Matrix T;
  /// d x K canonical vectors (loadings) for Y.
  Matrix H;
  /// Canonical correlations, descending.
  Vector correlations;
  /// p x d group-lasso coefficients; empty for classical_cca.
  Matrix B;
  /// Set when two retained correlations agree to 1e-8 relative; the
  /// corresponding vectors are then not individually identifiable.
  bool ties_flagged = false;

  int rank() const { return static_cast<int>(correlations.size()); }
};

/// Column-centered copy.
Matrix center_columns(const Matrix& a);
/// (1/N) A^T A; callers center first.
Matrix second_moment(const Matrix& a);

/// Inverse square root of a symmetric PSD matrix; throws NumericError when an
/// eigenvalue is below rel_tol times the largest.
Matrix inv_sqrt_psd(const Matrix& s, double rel_tol = 1e-10);

struct SparseCcaOptions {
  group_lasso::SolverOptions solver;
  /// When set, S_Y = diag(values) instead of the sample second moment.
  std::optional<Vector> sigma_y_diagonal;
};

/// Canonical pairs from regression coefficients B (p x d) and the centered
/// design xc (S_X = xc^T xc / N): B^T S_X B = Ht D^2 Ht^T, computed as the SVD
/// of xc B / sqrt(N); T = B Ht D^-1, H = S_Y^-1/2 Ht. Columns with
/// D_k <= 1e-8 D_1 are dropped.
CCAModel cca_from_coefficients(const Matrix& b, const Matrix& xc, const Matrix& sigma_y_inv_sqrt);

/// Asymmetric sparse CCA. Both blocks are centered internally.
CCAModel sparse_cca(const Matrix& y, const Matrix& x, double lambda, const SparseCcaOptions& opts = {});

/// Classical CCA via the SVD of S_X^-1/2 S_XY S_Y^-1/2. Requires N > p >= d.
CCAModel classical_cca(const Matrix& y, const Matrix& x);

/// Pearson correlation of two equally long vectors; throws NumericError when
/// either has zero variance.
double pearson(const Vector& a, const Vector& b);

}  // namespace sfcca
