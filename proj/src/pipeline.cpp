#include "sfcca/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sfcca {

namespace {

XTransform make_transform(const Matrix& x, bool scale) {
  XTransform t;
  t.center = x.colwise().mean().transpose();
  t.scale = Vector::Ones(x.cols());
  if (scale) {
    const Matrix xc = x.rowwise() - t.center.transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(xc.col(j).squaredNorm() / static_cast<double>(x.rows()));
      if (!(sd > 0.0)) {
        std::ostringstream os;
        os << "covariate column " << j + 1 << " is constant and cannot be scaled";
        throw ValidationError(os.str());
      }
      t.scale(j) = sd;
    }
  }
  return t;
}

void require_inputs(std::span<const SPDCurve> curves, const Matrix& x) {
  if (static_cast<Eigen::Index>(curves.size()) != x.rows()) {
    std::ostringstream os;
    os << curves.size() << " curves but " << x.rows() << " covariate rows";
    throw ValidationError(os.str());
  }
  if (!x.allFinite()) throw ValidationError("covariates must be finite");
}

// Runs sparse CCA on scores whose covariance is diag(eigenvalues) and maps
// the canonical vectors back to original X units.
CCAModel scores_cca(const Matrix& scores, const Vector& eigenvalues, const Matrix& xs, double lambda,
                    const XTransform& xt, const FitOptions& opts, std::vector<std::string>& warnings) {
  SparseCcaOptions co;
  co.solver = opts.solver;
  co.sigma_y_diagonal = eigenvalues;
  CCAModel cca = sparse_cca(scores, xs, lambda, co);
  cca.T = xt.scale.cwiseInverse().asDiagonal() * cca.T;
  cca.B = xt.scale.cwiseInverse().asDiagonal() * cca.B;
  if (cca.rank() == 0) {
    std::ostringstream os;
    os << "lambda " << lambda << " zeroes every coefficient row; no canonical pairs retained";
    warnings.push_back(os.str());
  }
  return cca;
}

}  // namespace

Matrix XTransform::apply(const Matrix& x) const {
  if (x.cols() != center.size()) throw ValidationError("covariate dimension mismatch");
  return (x.rowwise() - center.transpose()) * scale.cwiseInverse().asDiagonal();
}

FunctionalCCAModel fit(std::span<const SPDCurve> curves, const Matrix& x, int d, double lambda,
                       const FitOptions& opts) {
  require_inputs(curves, x);
  if (d < 1 || d > std::min<Eigen::Index>(x.cols(), x.rows() - 1)) {
    throw ValidationError("rank d must satisfy 1 <= d <= min(p, N - 1)");
  }
  return fit_from_rfpca(rfpca_fit(curves, d, opts.frechet), x, lambda, opts);
}

FunctionalCCAModel fit_from_rfpca(RFPCAFit pca, const Matrix& x, double lambda, const FitOptions& opts) {
  if (pca.scores.rows() != x.rows()) throw ValidationError("scores and covariates differ in sample size");
  const int d = pca.basis.rank();
  if (d > x.cols()) throw ValidationError("rank d exceeds the covariate dimension");
  FunctionalCCAModel model;
  model.x_transform = make_transform(x, opts.scale_x);
  model.lambda = lambda;
  model.cca = scores_cca(pca.scores, pca.basis.eigenvalues, model.x_transform.apply(x), lambda,
                         model.x_transform, opts, model.warnings);
  model.basis = std::move(pca.basis);
  for (int k = 0; k < model.cca.rank(); ++k) {
    TangentField psi = TangentField::zero(model.basis.mean_curve);
    for (int j = 0; j < d; ++j) psi = psi + model.basis.components[static_cast<std::size_t>(j)] * model.cca.H(j, k);
    model.canonical_functions.push_back(std::move(psi));
  }
  return model;
}

double cv_lambda(const Matrix& scores, const Vector& eigenvalues, const Matrix& xs, int folds,
                 std::uint64_t seed, const group_lasso::SolverOptions& solver, std::vector<double> lambdas) {
  const Matrix target = scores * eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  if (lambdas.empty()) lambdas = group_lasso::lambda_grid(group_lasso::lambda_max(xs, target));
  return group_lasso::cv_path(xs, target, lambdas, folds, seed, solver).lambda_min();
}

Matrix curve_variates(const FunctionalCCAModel& model, std::span<const SPDCurve> curves) {
  return project_scores(model.basis, curves) * model.cca.H;
}

Matrix covariate_variates(const CCAModel& cca, const XTransform& xt, const Matrix& x) {
  if (x.cols() != xt.center.size()) throw ValidationError("covariate dimension mismatch");
  return (x.rowwise() - xt.center.transpose()) * cca.T;
}

FitCvResult fit_cv(std::span<const SPDCurve> curves, const Matrix& x, std::vector<int> d_grid,
                   const FitCvOptions& opts) {
  require_inputs(curves, x);
  if (d_grid.empty()) throw ValidationError("empty rank grid");
  std::sort(d_grid.begin(), d_grid.end());
  d_grid.erase(std::unique(d_grid.begin(), d_grid.end()), d_grid.end());
  const int d_max = d_grid.back();
  if (d_grid.front() < 1 || d_max > std::min<Eigen::Index>(x.cols(), x.rows() - 1)) {
    throw ValidationError("rank grid values must satisfy 1 <= d <= min(p, N - 1)");
  }

  const RFPCAFit pca = rfpca_fit(curves, d_max, opts.fit.frechet);
  const XTransform xt = make_transform(x, opts.fit.scale_x);
  const Matrix xs = xt.apply(x);

  FitCvResult res;
  for (int d : d_grid) {
    const Matrix scores = pca.scores.leftCols(d);
    const Vector omega = pca.basis.eigenvalues.head(d);
    const Matrix wy = omega.cwiseSqrt().cwiseInverse().asDiagonal();
    const Matrix target = scores * wy;
    const std::vector<double> lambdas =
        opts.lambdas.empty() ? group_lasso::lambda_grid(group_lasso::lambda_max(xs, target)) : opts.lambdas;
    const auto path = group_lasso::cv_path(xs, target, lambdas, opts.folds, opts.seed, opts.fit.solver);

    // Held-out canonical correlations from the fold solutions.
    std::vector<std::vector<double>> corr(lambdas.size(), std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int f = 0; f < opts.folds; ++f) {
      std::vector<Eigen::Index> train, val;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        (path.fold_of_row[static_cast<std::size_t>(i)] == f ? val : train).push_back(i);
      }
      Matrix xt_rows(static_cast<Eigen::Index>(train.size()), xs.cols());
      for (std::size_t i = 0; i < train.size(); ++i) xt_rows.row(static_cast<Eigen::Index>(i)) = xs.row(train[i]);
      Matrix xv(static_cast<Eigen::Index>(val.size()), xs.cols()), yv(static_cast<Eigen::Index>(val.size()), d);
      for (std::size_t i = 0; i < val.size(); ++i) {
        xv.row(static_cast<Eigen::Index>(i)) = xs.row(val[i]);
        yv.row(static_cast<Eigen::Index>(i)) = scores.row(val[i]);
      }
      for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const CCAModel m = cca_from_coefficients(path.fold_coefficients[static_cast<std::size_t>(f)][j], xt_rows, wy);
        for (int k = 0; k < m.rank(); ++k) {
          const Vector u = xv * m.T.col(k);
          const Vector v = yv * m.H.col(k);
          double r = 0.0;
          try {
            r = pearson(u, v);
          } catch (const NumericError&) {
            r = 0.0;
          }
          corr[j][static_cast<std::size_t>(k)] += r / opts.folds;
        }
      }
    }
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      res.table.push_back({d, lambdas[j], path.mean_error[j], path.sd_error[j], corr[j]});
    }
    double scree = 0.0;
    for (double r : corr[path.best_index]) scree += std::max(0.0, r) * std::max(0.0, r);
    res.chosen_lambda.emplace_back(d, path.lambda_min());
    res.scree.emplace_back(d, scree);
  }

  // Smallest rank after which the summed squared CV correlation levels off.
  std::size_t pick = d_grid.size() - 1;
  for (std::size_t g = 0; g + 1 < d_grid.size(); ++g) {
    const double cur = res.scree[g].second;
    const double next = res.scree[g + 1].second;
    const double gain = (next - cur) / std::max(cur, 1e-12);
    if (gain < opts.scree_threshold) {
      pick = g;
      break;
    }
  }
  res.d = d_grid[pick];
  res.lambda = res.chosen_lambda[pick].second;
  res.model = fit_from_rfpca({truncate(pca.basis, res.d), pca.scores.leftCols(res.d)}, x, res.lambda, opts.fit);
  return res;
}

std::pair<SPDCurve, SPDCurve> mode_extremes(const FunctionalCCAModel& model, int k, double c) {
  if (k < 1 || k > model.rank()) {
    std::ostringstream os;
    os << "canonical pair " << k << " requested but the model has " << model.rank();
    throw ValidationError(os.str());
  }
  if (!(c > 0.0)) throw ValidationError("mode scale must be positive");
  const TangentField& psi = model.canonical_functions[static_cast<std::size_t>(k - 1)];
  return {exp_curve(psi * (-c)), exp_curve(psi * c)};
}

double frobenius_inner(const SPDCurve& y, const SymCurve& f) {
  if (!(y.grid() == f.grid) || y.size() != f.values.size()) {
    throw ValidationError("curve and function are on different time grids");
  }
  const auto& w = y.grid().weights();
  double acc = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) {
    acc += w[l] * (y[l].matrix().array() * f.values[l].matrix().array()).sum();
  }
  return acc;
}

std::vector<Matrix> euclidean_coefficients(std::span<const SPDCurve> curves) {
  if (curves.empty()) throw ValidationError("no curves given");
  const TimeGrid& grid = curves.front().grid();
  const Eigen::Index m = curves.front().dim();
  std::vector<Matrix> coefs;
  coefs.reserve(curves.size());
  for (const auto& y : curves) {
    if (!(y.grid() == grid) || y.dim() != m) throw ValidationError("curves are not on a common grid");
    Matrix z(static_cast<Eigen::Index>(grid.size()), frame_size(m));
    for (std::size_t l = 0; l < grid.size(); ++l) z.row(static_cast<Eigen::Index>(l)) = sym_to_coords(y[l].matrix());
    coefs.push_back(std::move(z));
  }
  return coefs;
}

EuclideanCCAModel fit_euclidean(std::span<const SPDCurve> curves, const Matrix& x, int d, double lambda,
                                const FitOptions& opts) {
  require_inputs(curves, x);
  if (curves.size() < 2) throw ValidationError("need at least two curves");
  if (d < 1 || d > std::min<Eigen::Index>(x.cols(), x.rows() - 1)) {
    throw ValidationError("rank d must satisfy 1 <= d <= min(p, N - 1)");
  }
  const auto coefs = euclidean_coefficients(curves);
  const TimeGrid& grid = curves.front().grid();
  return fit_euclidean_from_mfpca(mfpca(coefs, d, grid), grid, curves.front().dim(), x, lambda, opts);
}

EuclideanCCAModel fit_euclidean_from_mfpca(const MfpcaResult& pca, const TimeGrid& grid, Eigen::Index m,
                                           const Matrix& x, double lambda, const FitOptions& opts) {
  if (pca.scores.rows() != x.rows()) throw ValidationError("scores and covariates differ in sample size");
  const auto d = static_cast<int>(pca.eigenfunctions.size());
  EuclideanCCAModel model;
  model.grid = grid;
  for (Eigen::Index l = 0; l < pca.mean.rows(); ++l) {
    model.mean.push_back(SymMatrix::symmetrized(coords_to_sym(pca.mean.row(l).transpose(), m)));
  }
  auto to_curve = [&](const Matrix& z) {
    SymCurve c{grid, {}};
    for (Eigen::Index l = 0; l < z.rows(); ++l) {
      c.values.push_back(SymMatrix::symmetrized(coords_to_sym(z.row(l).transpose(), m)));
    }
    return c;
  };
  for (const auto& pi : pca.eigenfunctions) model.components.push_back(to_curve(pi));
  model.coefficient_functions = pca.eigenfunctions;
  model.eigenvalues = pca.eigenvalues;
  model.x_transform = make_transform(x, opts.scale_x);
  model.lambda = lambda;
  model.cca = scores_cca(pca.scores, pca.eigenvalues, model.x_transform.apply(x), lambda, model.x_transform,
                         opts, model.warnings);
  for (int k = 0; k < model.cca.rank(); ++k) {
    Matrix z = Matrix::Zero(static_cast<Eigen::Index>(grid.size()), frame_size(m));
    for (int j = 0; j < d; ++j) z += model.cca.H(j, k) * pca.eigenfunctions[static_cast<std::size_t>(j)];
    model.canonical_functions.push_back(to_curve(z));
  }
  return model;
}

}  // namespace sfcca
