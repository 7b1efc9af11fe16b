#pragma once

// Intrinsic Riemannian functional PCA for SPD-valued curves.
//
// Each curve is mapped to the tangent bundle of the pointwise Frechet mean,
// coordinatized in an orthonormal frame, and the resulting R^M-valued
// coefficient curves are decomposed by multivariate FPCA. Scores are the
// L2(T mu) inner products of the log fields with the principal fields.

#include <memory>
#include <span>
#include <vector>

#include "sfcca/tangent.hpp"

namespace sfcca {

/// Number of frame elements for m x m SPD matrices: m(m+1)/2.
inline Eigen::Index frame_size(Eigen::Index m) { return m * (m + 1) / 2; }

/// Coordinates of a symmetric matrix in the frame at the identity:
/// diagonal entries first, then sqrt(2) * A_ij for i < j in row-major order.
Vector sym_to_coords(const Matrix& a);
Matrix coords_to_sym(const Eigen::Ref<const Vector>& z, Eigen::Index m);

/// Pointwise Frechet mean of curves sharing a grid.
SPDCurve frechet_mean_curve(std::span<const SPDCurve> curves, const FrechetOptions& opts = {});

/// Orthonormal frame of T_F: E_ii = s_i s_i^T, E_ij = (s_i s_j^T + s_j s_i^T) / sqrt(2)
/// with s_i = F^1/2 e_i. Diagonal elements first, then i < j row-major.
std::vector<SymMatrix> frame_at(const SPDMatrix& f);

/// Frame coefficients Z(l, k) = <V(t_l), E_k(mu(t_l))>_{mu(t_l)}; an L x M matrix.
Matrix coefficients(const TangentField& v);
/// Inverse of coefficients: sum_k Z(l, k) E_k(mu(t_l)).
TangentField field_from_coefficients(const std::shared_ptr<const SPDCurve>& base, const Matrix& z);

struct MfpcaResult {
  /// d eigenfunctions, each L x M, orthonormal under sum_l w_l pi_j(t_l)^T pi_k(t_l).
  std::vector<Matrix> eigenfunctions;
  Vector eigenvalues;
  /// N x d scores of the centered curves.
  Matrix scores;
  /// L x M sample mean of the input curves.
  Matrix mean;
};

/// Multivariate FPCA of N coefficient curves (each L x M) under trapezoid
/// quadrature. Curves are centered internally. Covariances use 1/N.
MfpcaResult mfpca(std::span<const Matrix> curves, int d, const TimeGrid& grid);

struct RFPCABasis {
  std::shared_ptr<const SPDCurve> mean_curve;
  std::vector<TangentField> components;
  Vector eigenvalues;
  /// Principal components in frame coordinates (L x M each).
  std::vector<Matrix> coefficient_functions;
  /// Sample mean of the log-field coefficients (L x M); close to zero.
  Matrix coefficient_mean;

  int rank() const { return static_cast<int>(components.size()); }
};

struct RFPCAFit {
  RFPCABasis basis;
  /// N x d score matrix.
  Matrix scores;
};

RFPCAFit rfpca_fit(std::span<const SPDCurve> curves, int d, const FrechetOptions& opts = {});

/// Scores of (possibly new) curves against a fitted basis, centered with the
/// training coefficient mean so training curves reproduce their fitted scores.
Matrix project_scores(const RFPCABasis& basis, std::span<const SPDCurve> curves);

/// Truncates a basis to its first d components.
RFPCABasis truncate(const RFPCABasis& basis, int d);

}  // namespace sfcca
