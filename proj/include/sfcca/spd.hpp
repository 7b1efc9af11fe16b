#pragma once

// Affine-invariant Riemannian geometry on the manifold of symmetric positive
// definite matrices.
//
// Tangent vectors at P are symmetric matrices; the metric is
//   <W, Z>_P = tr(P^-1 W P^-1 Z).
// Exp and Log are global bijections between the manifold and each tangent
// space, so no injectivity radius bookkeeping is needed.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "sfcca/errors.hpp"

namespace sfcca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric m x m matrix; a tangent vector of the SPD manifold.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Validates symmetry to 1e-12 relative; throws ValidationError otherwise.
  explicit SymMatrix(Matrix a);

  /// Symmetrizes (a + a^T) / 2 without checking.
  static SymMatrix symmetrized(const Matrix& a);
  static SymMatrix zero(Eigen::Index m);

  const Matrix& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator-() const;
  SymMatrix operator*(double s) const;

 private:
  Matrix a_;
};

inline SymMatrix operator*(double s, const SymMatrix& w) { return w * s; }

/// Symmetric positive definite m x m matrix; a point of the manifold.
class SPDMatrix {
 public:
  SPDMatrix() = default;
  /// Validates symmetry and a strictly positive smallest eigenvalue.
  explicit SPDMatrix(Matrix a);

  static SPDMatrix identity(Eigen::Index m);

  const Matrix& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

 private:
  Matrix a_;
};

bool is_symmetric(const Matrix& a);

// Matrix functions of SPD / symmetric matrices through the symmetric
// eigendecomposition. The SPD ones throw NumericError when an eigenvalue falls
// below 1e-12 times the largest one. All results are re-symmetrized.
Matrix spd_sqrt(const Matrix& a);
Matrix spd_inv_sqrt(const Matrix& a);
Matrix spd_log(const Matrix& a);
Matrix sym_exp(const Matrix& a);

/// Affine-invariant inner product tr(P^-1 W P^-1 Z).
double riem_inner(const SPDMatrix& p, const SymMatrix& w, const SymMatrix& z);
double riem_norm(const SPDMatrix& p, const SymMatrix& w);

/// Exp_P(W) = P^1/2 exp(P^-1/2 W P^-1/2) P^1/2.
SPDMatrix riem_exp(const SPDMatrix& p, const SymMatrix& w);
/// Log_P(Q) = P^1/2 log(P^-1/2 Q P^-1/2) P^1/2.
SymMatrix riem_log(const SPDMatrix& p, const SPDMatrix& q);
/// ||log(P^-1/2 Q P^-1/2)||_F.
double riem_dist(const SPDMatrix& p, const SPDMatrix& q);

/// Transport of W from T_P to T_Q along the connecting geodesic:
/// E W E^T with E = (Q P^-1)^1/2.
SymMatrix parallel_transport(const SPDMatrix& p, const SPDMatrix& q, const SymMatrix& w);

struct FrechetOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Thrown when the Frechet mean iteration does not reach the tolerance.
class FrechetMeanError : public NumericError {
 public:
  FrechetMeanError(const std::string& what, SPDMatrix last_iterate, double residual)
      : NumericError(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}
  const SPDMatrix& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  SPDMatrix last_iterate_;
  double residual_;
};

/// Sample Frechet (Karcher) mean by the relaxed fixed-point iteration
/// mu <- Exp_mu(alpha mean_i Log_mu(y_i)), started at the arithmetic mean, with
/// alpha in (0, 1] a Barzilai-Borwein step length (the first step uses 1).
/// On return the mean of the logs at mu has Riemannian norm <= tol.
SPDMatrix frechet_mean(std::span<const SPDMatrix> points, const FrechetOptions& opts = {});

}  // namespace sfcca
