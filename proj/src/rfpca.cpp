#include "sfcca/rfpca.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sfcca {

namespace {

struct FrameRoots {
  Matrix sqrt;
  Matrix inv_sqrt;
};

std::vector<FrameRoots> frame_roots(const SPDCurve& mu) {
  std::vector<FrameRoots> out;
  out.reserve(mu.size());
  for (const auto& f : mu.values()) out.push_back({spd_sqrt(f.matrix()), spd_inv_sqrt(f.matrix())});
  return out;
}

Matrix coefficients_with(const std::vector<FrameRoots>& roots, const TangentField& v) {
  const Eigen::Index m = v.base()->dim();
  Matrix z(static_cast<Eigen::Index>(v.size()), frame_size(m));
  for (std::size_t l = 0; l < v.size(); ++l) {
    const auto& r = roots[l];
    z.row(static_cast<Eigen::Index>(l)) = sym_to_coords(r.inv_sqrt * v[l].matrix() * r.inv_sqrt);
  }
  return z;
}

TangentField field_with(const std::vector<FrameRoots>& roots,
                        const std::shared_ptr<const SPDCurve>& base, const Matrix& z) {
  const Eigen::Index m = base->dim();
  std::vector<SymMatrix> vals;
  vals.reserve(base->size());
  for (std::size_t l = 0; l < base->size(); ++l) {
    const auto& r = roots[l];
    const Vector row = z.row(static_cast<Eigen::Index>(l)).transpose();
    vals.push_back(SymMatrix::symmetrized(r.sqrt * coords_to_sym(row, m) * r.sqrt));
  }
  return TangentField(base, std::move(vals));
}

// Flip so the entry of largest magnitude is positive; first one wins ties.
bool needs_flip(const Matrix& pi) {
  double best = -1.0;
  double value = 0.0;
  for (Eigen::Index l = 0; l < pi.rows(); ++l) {
    for (Eigen::Index k = 0; k < pi.cols(); ++k) {
      if (std::abs(pi(l, k)) > best) {
        best = std::abs(pi(l, k));
        value = pi(l, k);
      }
    }
  }
  return value < 0.0;
}

}  // namespace

Vector sym_to_coords(const Matrix& a) {
  const Eigen::Index m = a.rows();
  Vector z(frame_size(m));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) z(k++) = a(i, i);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) z(k++) = std::numbers::sqrt2 * 0.5 * (a(i, j) + a(j, i));
  }
  return z;
}

Matrix coords_to_sym(const Eigen::Ref<const Vector>& z, Eigen::Index m) {
  if (z.size() != frame_size(m)) throw ValidationError("coordinate vector has the wrong length");
  Matrix a(m, m);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) a(i, i) = z(k++);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      a(i, j) = a(j, i) = z(k++) / std::numbers::sqrt2;
    }
  }
  return a;
}

SPDCurve frechet_mean_curve(std::span<const SPDCurve> curves, const FrechetOptions& opts) {
  if (curves.empty()) throw ValidationError("no curves given");
  const auto& grid = curves.front().grid();
  for (const auto& c : curves) {
    if (!(c.grid() == grid)) throw ValidationError("curves are on different time grids");
    if (c.dim() != curves.front().dim()) throw ValidationError("curves differ in matrix dimension");
  }
  std::vector<SPDMatrix> means;
  means.reserve(grid.size());
  std::vector<SPDMatrix> slice(curves.size());
  for (std::size_t l = 0; l < grid.size(); ++l) {
    for (std::size_t i = 0; i < curves.size(); ++i) slice[i] = curves[i][l];
    try {
      means.push_back(frechet_mean(slice, opts));
    } catch (const FrechetMeanError& e) {
      std::ostringstream os;
      os << e.what() << " at time index " << l;
      throw FrechetMeanError(os.str(), e.last_iterate(), e.residual());
    }
  }
  return SPDCurve(grid, std::move(means));
}

std::vector<SymMatrix> frame_at(const SPDMatrix& f) {
  const Eigen::Index m = f.dim();
  const Matrix s = spd_sqrt(f.matrix());
  std::vector<SymMatrix> out;
  out.reserve(static_cast<std::size_t>(frame_size(m)));
  for (Eigen::Index i = 0; i < m; ++i) out.push_back(SymMatrix::symmetrized(s.col(i) * s.col(i).transpose()));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const Matrix e = s.col(i) * s.col(j).transpose();
      out.push_back(SymMatrix::symmetrized((e + e.transpose()) / std::numbers::sqrt2));
    }
  }
  return out;
}

Matrix coefficients(const TangentField& v) { return coefficients_with(frame_roots(*v.base()), v); }

TangentField field_from_coefficients(const std::shared_ptr<const SPDCurve>& base, const Matrix& z) {
  if (z.rows() != static_cast<Eigen::Index>(base->size()) || z.cols() != frame_size(base->dim())) {
    throw ValidationError("coefficient matrix shape does not match the base curve");
  }
  return field_with(frame_roots(*base), base, z);
}

MfpcaResult mfpca(std::span<const Matrix> curves, int d, const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(curves.size());
  if (n < 2) throw ValidationError("MFPCA needs at least two curves");
  const Eigen::Index len = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index width = curves.front().cols();
  const Eigen::Index dim = len * width;
  if (d < 1 || d > std::min<Eigen::Index>(n - 1, dim)) {
    std::ostringstream os;
    os << "requested " << d << " components but at most " << std::min<Eigen::Index>(n - 1, dim)
       << " are available";
    throw ValidationError(os.str());
  }

  // Rows are sqrt(w)-weighted, flattened (l, k) row-major curves.
  Matrix flat(n, dim);
  Matrix mean = Matrix::Zero(len, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix& c = curves[static_cast<std::size_t>(i)];
    if (c.rows() != len || c.cols() != width) throw ValidationError("coefficient curve shape mismatch");
    mean += c;
  }
  mean /= static_cast<double>(n);
  Vector sqrt_w(len);
  for (Eigen::Index l = 0; l < len; ++l) sqrt_w(l) = std::sqrt(grid.weights()[static_cast<std::size_t>(l)]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix centered = sqrt_w.asDiagonal() * (curves[static_cast<std::size_t>(i)] - mean);
    for (Eigen::Index l = 0; l < len; ++l) flat.block(i, l * width, 1, width) = centered.row(l);
  }

  Matrix vecs(dim, d);
  Vector evals(d);
  if (n < dim) {
    const Matrix gram = flat * flat.transpose() / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success) throw NumericError("MFPCA eigendecomposition failed");
    for (int j = 0; j < d; ++j) {
      const Eigen::Index idx = n - 1 - j;
      evals(j) = es.eigenvalues()(idx);
      if (evals(j) > 0.0) {
        vecs.col(j) = flat.transpose() * es.eigenvectors().col(idx) / std::sqrt(static_cast<double>(n) * evals(j));
      } else {
        vecs.col(j).setZero();
      }
    }
  } else {
    const Matrix cov = flat.transpose() * flat / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success) throw NumericError("MFPCA eigendecomposition failed");
    for (int j = 0; j < d; ++j) {
      const Eigen::Index idx = dim - 1 - j;
      evals(j) = es.eigenvalues()(idx);
      vecs.col(j) = es.eigenvectors().col(idx);
    }
  }

  if (!(evals(0) > 1e-20)) throw NumericError("covariance is zero: the curves show no variation");
  for (int j = 0; j < d; ++j) {
    if (!(evals(j) > 1e-12 * evals(0))) {
      std::ostringstream os;
      os << "covariance rank is below the requested " << d << " components (eigenvalue " << j + 1
         << " is " << evals(j) << ")";
      throw NumericError(os.str());
    }
  }

  MfpcaResult out;
  out.eigenvalues = evals;
  out.mean = mean;
  out.scores = flat * vecs;
  out.eigenfunctions.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    Matrix pi(len, width);
    for (Eigen::Index l = 0; l < len; ++l) {
      pi.row(l) = vecs.block(l * width, j, width, 1).transpose() / sqrt_w(l);
    }
    if (needs_flip(pi)) {
      pi = -pi;
      out.scores.col(j) = -out.scores.col(j);
    }
    out.eigenfunctions.push_back(std::move(pi));
  }
  return out;
}

RFPCAFit rfpca_fit(std::span<const SPDCurve> curves, int d, const FrechetOptions& opts) {
  if (curves.size() < 2) throw ValidationError("RFPCA needs at least two curves");
  auto mean = std::make_shared<const SPDCurve>(frechet_mean_curve(curves, opts));
  const auto roots = frame_roots(*mean);

  std::vector<Matrix> coefs;
  coefs.reserve(curves.size());
  for (const auto& y : curves) coefs.push_back(coefficients_with(roots, log_curve(mean, y)));

  MfpcaResult pca = mfpca(coefs, d, mean->grid());

  RFPCAFit fit;
  fit.basis.mean_curve = mean;
  fit.basis.eigenvalues = pca.eigenvalues;
  fit.basis.coefficient_mean = pca.mean;
  for (const auto& pi : pca.eigenfunctions) fit.basis.components.push_back(field_with(roots, mean, pi));
  fit.basis.coefficient_functions = std::move(pca.eigenfunctions);
  fit.scores = std::move(pca.scores);
  return fit;
}

Matrix project_scores(const RFPCABasis& basis, std::span<const SPDCurve> curves) {
  const auto& mean = basis.mean_curve;
  const auto roots = frame_roots(*mean);
  const auto& w = mean->grid().weights();
  Matrix scores(static_cast<Eigen::Index>(curves.size()), basis.rank());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Matrix z = coefficients_with(roots, log_curve(mean, curves[i])) - basis.coefficient_mean;
    for (int j = 0; j < basis.rank(); ++j) {
      const Matrix& pi = basis.coefficient_functions[static_cast<std::size_t>(j)];
      double acc = 0.0;
      for (Eigen::Index l = 0; l < z.rows(); ++l) acc += w[static_cast<std::size_t>(l)] * z.row(l).dot(pi.row(l));
      scores(static_cast<Eigen::Index>(i), j) = acc;
    }
  }
  return scores;
}

RFPCABasis truncate(const RFPCABasis& basis, int d) {
  if (d < 1 || d > basis.rank()) throw ValidationError("cannot truncate basis to the requested rank");
  RFPCABasis out;
  out.mean_curve = basis.mean_curve;
  out.coefficient_mean = basis.coefficient_mean;
  out.eigenvalues = basis.eigenvalues.head(d);
  out.components.assign(basis.components.begin(), basis.components.begin() + d);
  out.coefficient_functions.assign(basis.coefficient_functions.begin(),
                                   basis.coefficient_functions.begin() + d);
  return out;
}

}  // namespace sfcca
