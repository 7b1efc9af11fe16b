#include "sfcca/spd.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace sfcca {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kEigenFloor = 1e-12;

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition did not converge");
  }
  return es;
}

// Eigenvalues are returned ascending by Eigen.
void require_spd_spectrum(const Vector& evals) {
  const double largest = evals(evals.size() - 1);
  const double smallest = evals(0);
  if (!(largest > 0.0) || smallest < kEigenFloor * largest) {
    std::ostringstream os;
    os << "matrix is not numerically positive definite (eigenvalue " << smallest
       << ", largest " << largest << ")";
    throw NumericError(os.str());
  }
}

template <class F>
Matrix apply_spectral(const Eigen::SelfAdjointEigenSolver<Matrix>& es, F f) {
  const Vector mapped = es.eigenvalues().unaryExpr(f);
  return symmetrize(es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose());
}

template <class F>
Matrix spd_function(const Matrix& a, F f) {
  const auto es = decompose(a);
  require_spd_spectrum(es.eigenvalues());
  return apply_spectral(es, f);
}

struct Roots {
  Matrix sqrt;
  Matrix inv_sqrt;
};

Roots roots(const SPDMatrix& p) {
  const auto es = decompose(p.matrix());
  require_spd_spectrum(es.eigenvalues());
  return {apply_spectral(es, [](double x) { return std::sqrt(x); }),
          apply_spectral(es, [](double x) { return 1.0 / std::sqrt(x); })};
}

void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    std::ostringstream os;
    os << "dimension mismatch: " << a << " vs " << b;
    throw ValidationError(os.str());
  }
}

}  // namespace

bool is_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  if (!a.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

SymMatrix::SymMatrix(Matrix a) : a_(std::move(a)) {
  if (!is_symmetric(a_)) throw ValidationError("matrix is not symmetric");
}

SymMatrix SymMatrix::symmetrized(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("matrix is not square");
  SymMatrix out;
  out.a_ = symmetrize(a);
  return out;
}

SymMatrix SymMatrix::zero(Eigen::Index m) { return SymMatrix(Matrix::Zero(m, m)); }

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  require_same_dim(dim(), o.dim());
  return symmetrized(a_ + o.a_);
}
SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  require_same_dim(dim(), o.dim());
  return symmetrized(a_ - o.a_);
}
SymMatrix SymMatrix::operator-() const { return symmetrized(-a_); }
SymMatrix SymMatrix::operator*(double s) const { return symmetrized(s * a_); }

SPDMatrix::SPDMatrix(Matrix a) : a_(std::move(a)) {
  if (a_.rows() < 1 || !is_symmetric(a_)) {
    throw ValidationError("matrix is not symmetric");
  }
  const auto es = decompose(a_);
  if (!(es.eigenvalues()(0) > 0.0)) {
    std::ostringstream os;
    os << "matrix is not positive definite (smallest eigenvalue " << es.eigenvalues()(0) << ")";
    throw ValidationError(os.str());
  }
}

SPDMatrix SPDMatrix::identity(Eigen::Index m) { return SPDMatrix(Matrix::Identity(m, m)); }

Matrix spd_sqrt(const Matrix& a) {
  return spd_function(a, [](double x) { return std::sqrt(x); });
}
Matrix spd_inv_sqrt(const Matrix& a) {
  return spd_function(a, [](double x) { return 1.0 / std::sqrt(x); });
}
Matrix spd_log(const Matrix& a) {
  return spd_function(a, [](double x) { return std::log(x); });
}
Matrix sym_exp(const Matrix& a) {
  return apply_spectral(decompose(a), [](double x) { return std::exp(x); });
}

double riem_inner(const SPDMatrix& p, const SymMatrix& w, const SymMatrix& z) {
  require_same_dim(p.dim(), w.dim());
  require_same_dim(p.dim(), z.dim());
  const Eigen::LLT<Matrix> llt(p.matrix());
  if (llt.info() != Eigen::Success) throw NumericError("Cholesky factorization failed");
  const Matrix a = llt.solve(w.matrix());
  const Matrix b = llt.solve(z.matrix());
  return (a.array() * b.transpose().array()).sum();
}

double riem_norm(const SPDMatrix& p, const SymMatrix& w) {
  return std::sqrt(std::max(0.0, riem_inner(p, w, w)));
}

SPDMatrix riem_exp(const SPDMatrix& p, const SymMatrix& w) {
  require_same_dim(p.dim(), w.dim());
  const Roots r = roots(p);
  const Matrix inner = sym_exp(symmetrize(r.inv_sqrt * w.matrix() * r.inv_sqrt));
  return SPDMatrix(symmetrize(r.sqrt * inner * r.sqrt));
}

SymMatrix riem_log(const SPDMatrix& p, const SPDMatrix& q) {
  require_same_dim(p.dim(), q.dim());
  const Roots r = roots(p);
  const Matrix inner = spd_log(symmetrize(r.inv_sqrt * q.matrix() * r.inv_sqrt));
  return SymMatrix::symmetrized(r.sqrt * inner * r.sqrt);
}

double riem_dist(const SPDMatrix& p, const SPDMatrix& q) {
  require_same_dim(p.dim(), q.dim());
  const Matrix is = spd_inv_sqrt(p.matrix());
  const auto es = decompose(symmetrize(is * q.matrix() * is));
  require_spd_spectrum(es.eigenvalues());
  return es.eigenvalues().array().log().matrix().norm();
}

SymMatrix parallel_transport(const SPDMatrix& p, const SPDMatrix& q, const SymMatrix& w) {
  require_same_dim(p.dim(), q.dim());
  require_same_dim(p.dim(), w.dim());
  // (Q P^-1)^1/2 = P^1/2 (P^-1/2 Q P^-1/2)^1/2 P^-1/2
  const Roots r = roots(p);
  const Matrix mid = spd_sqrt(symmetrize(r.inv_sqrt * q.matrix() * r.inv_sqrt));
  const Matrix e = r.sqrt * mid * r.inv_sqrt;
  return SymMatrix::symmetrized(e * w.matrix() * e.transpose());
}

SPDMatrix frechet_mean(std::span<const SPDMatrix> points, const FrechetOptions& opts) {
  if (points.empty()) throw ValidationError("Frechet mean of an empty set");
  const Eigen::Index m = points.front().dim();
  Matrix avg = Matrix::Zero(m, m);
  for (const auto& y : points) {
    require_same_dim(m, y.dim());
    avg += y.matrix();
  }
  SPDMatrix mu(symmetrize(avg / static_cast<double>(points.size())));
  if (points.size() == 1) return points.front();

  double residual = 0.0;
  double alpha = 1.0;
  std::optional<SPDMatrix> prev_mu;
  SymMatrix prev_log = SymMatrix::zero(m);
  for (int it = 0; it < opts.max_iter; ++it) {
    Matrix step = Matrix::Zero(m, m);
    for (const auto& y : points) step += riem_log(mu, y).matrix();
    const SymMatrix mean_log = SymMatrix::symmetrized(step / static_cast<double>(points.size()));
    residual = riem_norm(mu, mean_log);
    if (residual <= opts.tol) return mu;
    if (prev_mu) {
      // Barzilai-Borwein step length along the transported previous step.
      const SymMatrix moved = parallel_transport(*prev_mu, mu, prev_log);
      const SymMatrix s = moved * alpha;
      const SymMatrix change = moved - mean_log;
      const double curv = riem_inner(mu, s, change);
      alpha = curv > 0.0 ? std::clamp(riem_inner(mu, s, s) / curv, 0.05, 1.0) : 1.0;
    }
    prev_mu = mu;
    prev_log = mean_log;
    mu = riem_exp(mu, mean_log * alpha);
  }
  std::ostringstream os;
  os << "Frechet mean did not converge after " << opts.max_iter << " iterations (residual "
     << residual << ")";
  throw FrechetMeanError(os.str(), mu, residual);
}

}  // namespace sfcca
