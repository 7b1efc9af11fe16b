#include "sfcca/cca.hpp"

#include <cmath>
#include <sstream>

namespace sfcca {

namespace {

// Flip each pair so the largest-magnitude entry of the Y loading is positive.
void apply_sign_convention(CCAModel& model) {
  for (Eigen::Index k = 0; k < model.H.cols(); ++k) {
    Eigen::Index arg = 0;
    model.H.col(k).cwiseAbs().maxCoeff(&arg);
    if (model.H(arg, k) < 0.0) {
      model.H.col(k) *= -1.0;
      model.T.col(k) *= -1.0;
    }
  }
}

void flag_ties(CCAModel& model) {
  for (Eigen::Index k = 1; k < model.correlations.size(); ++k) {
    const double a = model.correlations(k - 1);
    const double b = model.correlations(k);
    if (a - b <= 1e-8 * std::max(a, 1e-300)) model.ties_flagged = true;
  }
}

}  // namespace

Matrix center_columns(const Matrix& a) { return a.rowwise() - a.colwise().mean(); }

Matrix second_moment(const Matrix& a) {
  return a.transpose() * a / static_cast<double>(a.rows());
}

Matrix inv_sqrt_psd(const Matrix& s, double rel_tol) {
  if (s.rows() != s.cols()) throw ValidationError("matrix is not square");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double largest = ev(ev.size() - 1);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(largest > 0.0) || ev(i) < rel_tol * largest) {
      std::ostringstream os;
      os << "covariance is rank deficient: eigenvalue " << ev(i) << " against largest " << largest;
      throw NumericError(os.str());
    }
  }
  const Vector inv = ev.array().rsqrt();
  const Matrix out = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

CCAModel cca_from_coefficients(const Matrix& b, const Matrix& xc, const Matrix& sigma_y_inv_sqrt) {
  if (xc.cols() != b.rows()) throw ValidationError("coefficient rows do not match the design");
  const Eigen::Index d = b.cols();
  const Matrix z = xc * b / std::sqrt(static_cast<double>(xc.rows()));
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinV);
  if (!svd.singularValues().allFinite()) throw NumericError("SVD of X B failed");
  const Vector dvals = svd.singularValues();
  const Matrix ht = svd.matrixV();
  Eigen::Index keep = 0;
  if (d > 0 && dvals(0) > 0.0) {
    while (keep < dvals.size() && dvals(keep) > 1e-8 * dvals(0)) ++keep;
  }

  CCAModel model;
  model.B = b;
  model.correlations = dvals.head(keep);
  model.T = b * ht.leftCols(keep) * dvals.head(keep).cwiseInverse().asDiagonal();
  model.H = sigma_y_inv_sqrt * ht.leftCols(keep);
  apply_sign_convention(model);
  flag_ties(model);
  return model;
}

CCAModel sparse_cca(const Matrix& y, const Matrix& x, double lambda, const SparseCcaOptions& opts) {
  if (y.rows() != x.rows()) throw ValidationError("Y and X have different numbers of rows");
  const Eigen::Index n = y.rows(), d = y.cols(), p = x.cols();
  if (d < 1 || d > std::min(p, n - 1)) {
    std::ostringstream os;
    os << "sparse CCA needs 1 <= d <= min(p, N - 1); got d=" << d << ", p=" << p << ", N=" << n;
    throw ValidationError(os.str());
  }
  const Matrix yc = center_columns(y);
  const Matrix xc = center_columns(x);

  Matrix sigma_y;
  if (opts.sigma_y_diagonal) {
    if (opts.sigma_y_diagonal->size() != d) throw ValidationError("S_Y diagonal has the wrong length");
    sigma_y = opts.sigma_y_diagonal->asDiagonal();
  } else {
    sigma_y = second_moment(yc);
  }
  const Matrix wy = inv_sqrt_psd(sigma_y);
  const Matrix b = group_lasso::solve(xc, yc * wy, lambda, opts.solver);
  return cca_from_coefficients(b, xc, wy);
}

CCAModel classical_cca(const Matrix& y, const Matrix& x) {
  if (y.rows() != x.rows()) throw ValidationError("Y and X have different numbers of rows");
  const Eigen::Index n = y.rows(), d = y.cols(), p = x.cols();
  if (!(n > p && p >= d && d >= 1)) throw ValidationError("classical CCA needs N > p >= d >= 1");
  const Matrix yc = center_columns(y);
  const Matrix xc = center_columns(x);
  const Matrix wx = inv_sqrt_psd(second_moment(xc));
  const Matrix wy = inv_sqrt_psd(second_moment(yc));
  const Matrix sxy = xc.transpose() * yc / static_cast<double>(n);
  Eigen::JacobiSVD<Matrix> svd(wx * sxy * wy, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Eigen::Index keep = 0;
  if (s(0) > 0.0) {
    while (keep < s.size() && s(keep) > 1e-10 * s(0)) ++keep;
  }
  CCAModel model;
  model.correlations = s.head(keep);
  model.T = wx * svd.matrixU().leftCols(keep);
  model.H = wy * svd.matrixV().leftCols(keep);
  apply_sign_convention(model);
  flag_ties(model);
  return model;
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("correlation needs two equal-length samples");
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  const double va = ac.squaredNorm(), vb = bc.squaredNorm();
  if (!(va > 0.0) || !(vb > 0.0)) throw NumericError("correlation of a zero-variance projection");
  return ac.dot(bc) / std::sqrt(va * vb);
}

}  // namespace sfcca
