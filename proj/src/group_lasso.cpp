#include "sfcca/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace sfcca::group_lasso {

namespace {

void require_shapes(const Matrix& x, const Matrix& m) {
  if (x.rows() != m.rows()) {
    std::ostringstream os;
    os << "design has " << x.rows() << " rows but response has " << m.rows();
    throw ValidationError(os.str());
  }
  if (x.rows() < 1) throw ValidationError("empty regression problem");
  if (!x.allFinite() || !m.allFinite()) throw ValidationError("regression data must be finite");
}

double penalty(const Matrix& b) { return b.rowwise().norm().sum(); }

// Max row-wise violation given the smooth gradient g at b.
double kkt_from_gradient(const Matrix& g, const Matrix& b, double lambda) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double bn = b.row(i).norm();
    double r;
    if (bn > 0.0) {
      r = (g.row(i) + lambda * b.row(i) / bn).norm();
    } else {
      r = std::max(0.0, g.row(i).norm() - lambda);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

// The smooth part and its gradient, either through the p x p Gram matrix or
// through X directly, whichever is cheaper. `image` is G B or X B.
class SmoothPart {
 public:
  SmoothPart(const Matrix& x, const Matrix& m) : x_(x), m_(m), n_(static_cast<double>(x.rows())) {
    use_gram_ = x.cols() <= 2 * x.rows();
    xtm_ = x.transpose() * m;
    m_sq_ = m.squaredNorm();
    if (use_gram_) gram_ = x.transpose() * x;
    // Lipschitz constant (4/N) sigma_max(X^T X).
    const Matrix small = x.cols() <= x.rows() ? (use_gram_ ? gram_ : Matrix(x.transpose() * x))
                                               : Matrix(x * x.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(small, Eigen::EigenvaluesOnly);
    lipschitz_ = 4.0 / n_ * std::max(0.0, es.eigenvalues().maxCoeff());
  }

  Matrix image(const Matrix& b) const { return use_gram_ ? Matrix(gram_ * b) : Matrix(x_ * b); }

  Matrix gradient(const Matrix& img) const {
    if (use_gram_) return 4.0 / n_ * (img - xtm_);
    return 4.0 / n_ * (x_.transpose() * (img - m_));
  }

  double value(const Matrix& b, const Matrix& img) const {
    if (use_gram_) {
      const double v = m_sq_ - 2.0 * (b.array() * xtm_.array()).sum() + (b.array() * img.array()).sum();
      return 2.0 / n_ * std::max(0.0, v);
    }
    return 2.0 / n_ * (img - m_).squaredNorm();
  }

  double lipschitz() const { return lipschitz_; }
  const Matrix& xtm() const { return xtm_; }

 private:
  const Matrix& x_;
  const Matrix& m_;
  double n_;
  bool use_gram_ = false;
  Matrix gram_;
  Matrix xtm_;
  double m_sq_ = 0.0;
  double lipschitz_ = 0.0;
};

}  // namespace

double objective(const Matrix& x, const Matrix& m, const Matrix& b, double lambda) {
  require_shapes(x, m);
  if (b.rows() != x.cols() || b.cols() != m.cols()) throw ValidationError("coefficient shape mismatch");
  const double n = static_cast<double>(x.rows());
  return 2.0 / n * (m - x * b).squaredNorm() + lambda * penalty(b);
}

double lambda_max(const Matrix& x, const Matrix& m) {
  require_shapes(x, m);
  const double n = static_cast<double>(x.rows());
  const Matrix xtm = x.transpose() * m;
  return 4.0 / n * xtm.rowwise().norm().maxCoeff();
}

double kkt_residual(const Matrix& x, const Matrix& m, double lambda, const Matrix& b) {
  require_shapes(x, m);
  if (b.rows() != x.cols() || b.cols() != m.cols()) throw ValidationError("coefficient shape mismatch");
  const double n = static_cast<double>(x.rows());
  const Matrix g = -4.0 / n * (x.transpose() * (m - x * b));
  return kkt_from_gradient(g, b, lambda);
}

Matrix row_prox(const Matrix& v, double threshold) {
  Matrix out = v;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double nrm = v.row(i).norm();
    if (nrm <= threshold) {
      out.row(i).setZero();
    } else {
      out.row(i) *= 1.0 - threshold / nrm;
    }
  }
  return out;
}

SolveResult solve_detailed(const Matrix& x, const Matrix& m, double lambda, const SolverOptions& opts,
                           const Matrix* warm_start) {
  require_shapes(x, m);
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw ValidationError("invalid solver options");

  const SmoothPart f(x, m);
  SolveResult res;
  Matrix cur = Matrix::Zero(x.cols(), m.cols());
  if (warm_start) {
    if (warm_start->rows() != x.cols() || warm_start->cols() != m.cols()) {
      throw ValidationError("warm start shape mismatch");
    }
    cur = *warm_start;
  }
  if (f.lipschitz() <= 0.0) {
    // X = 0: the penalty alone is minimized at zero.
    res.coefficients = Matrix::Zero(x.cols(), m.cols());
    res.kkt = 0.0;
    res.objective = objective(x, m, res.coefficients, lambda);
    return res;
  }
  const double step = 1.0 / f.lipschitz();

  Matrix cur_img = f.image(cur);
  Matrix y = cur;
  Matrix y_img = cur_img;
  double t = 1.0;
  double prev_obj = f.value(cur, cur_img) + lambda * penalty(cur);
  double best = prev_obj;
  if (opts.record_history) res.objective_history.push_back(best);

  double kkt = kkt_from_gradient(f.gradient(cur_img), cur, lambda);
  if (kkt <= opts.kkt_tol) {
    res.coefficients = cur;
    res.kkt = kkt;
    res.objective = prev_obj;
    return res;
  }

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Matrix next = row_prox(y - step * f.gradient(y_img), step * lambda);
    const Matrix next_img = f.image(next);
    const double obj = f.value(next, next_img) + lambda * penalty(next);
    if (opts.record_history) res.objective_history.push_back(obj);
    best = std::min(best, obj);

    // Gradient-based restart: momentum points against the descent step.
    const bool restart = ((y - next).array() * (next - cur).array()).sum() > 0.0;
    double t_next = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = restart ? 0.0 : (t - 1.0) / t_next;
    y = next + beta * (next - cur);
    y_img = (1.0 + beta) * next_img - beta * cur_img;
    cur = next;
    cur_img = next_img;
    t = t_next;

    const double rel = std::abs(prev_obj - obj) / std::max(1.0, std::abs(obj));
    prev_obj = obj;
    if (rel <= opts.tol || it % 10 == 0) {
      kkt = kkt_from_gradient(f.gradient(cur_img), cur, lambda);
      if (kkt <= opts.kkt_tol) {
        res.coefficients = cur;
        res.iterations = it;
        res.kkt = kkt;
        res.objective = obj;
        return res;
      }
    }
  }
  kkt = kkt_from_gradient(f.gradient(cur_img), cur, lambda);
  std::ostringstream os;
  os << "group lasso did not converge in " << opts.max_iter << " iterations (lambda " << lambda
     << ", KKT residual " << kkt << ")";
  throw SolverError(os.str(), cur, kkt);
}

std::vector<double> lambda_grid(double lmax, int count, double ratio) {
  if (count < 1 || !(ratio > 0.0) || !(ratio <= 1.0) || !(lmax >= 0.0)) {
    throw ValidationError("invalid lambda grid specification");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lmax;
    return out;
  }
  const double step = std::log(ratio) / static_cast<double>(count - 1);
  for (int j = 0; j < count; ++j) out[static_cast<std::size_t>(j)] = lmax * std::exp(step * j);
  return out;
}

std::vector<int> assign_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || n < folds) throw ValidationError("need at least 2 folds and one row per fold");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) {
    fold[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return fold;
}

namespace {

Matrix take_rows(const Matrix& a, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = a.row(rows[i]);
  return out;
}

}  // namespace

CvPathResult cv_path(const Matrix& x, const Matrix& m, const std::vector<double>& lambdas, int folds,
                     std::uint64_t seed, const SolverOptions& opts) {
  require_shapes(x, m);
  if (lambdas.empty()) throw ValidationError("empty lambda grid");
  for (std::size_t j = 1; j < lambdas.size(); ++j) {
    if (lambdas[j] > lambdas[j - 1]) throw ValidationError("lambda grid must be descending");
  }

  CvPathResult res;
  res.lambdas = lambdas;
  res.fold_of_row = assign_folds(x.rows(), folds, seed);
  const std::size_t nl = lambdas.size();
  std::vector<std::vector<double>> err(static_cast<std::size_t>(folds), std::vector<double>(nl));
  res.fold_coefficients.resize(static_cast<std::size_t>(folds));

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, val;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      (res.fold_of_row[static_cast<std::size_t>(i)] == f ? val : train).push_back(i);
    }
    const Matrix xt = take_rows(x, train), mt = take_rows(m, train);
    const Matrix xv = take_rows(x, val), mv = take_rows(m, val);
    Matrix warm = Matrix::Zero(x.cols(), m.cols());
    auto& coefs = res.fold_coefficients[static_cast<std::size_t>(f)];
    coefs.reserve(nl);
    for (std::size_t j = 0; j < nl; ++j) {
      warm = solve(xt, mt, lambdas[j], opts, &warm);
      err[static_cast<std::size_t>(f)][j] = 2.0 / static_cast<double>(xv.rows()) * (mv - xv * warm).squaredNorm();
      coefs.push_back(warm);
    }
  }

  res.mean_error.assign(nl, 0.0);
  res.sd_error.assign(nl, 0.0);
  for (std::size_t j = 0; j < nl; ++j) {
    double mean = 0.0;
    for (int f = 0; f < folds; ++f) mean += err[static_cast<std::size_t>(f)][j];
    mean /= folds;
    double ss = 0.0;
    for (int f = 0; f < folds; ++f) {
      const double dlt = err[static_cast<std::size_t>(f)][j] - mean;
      ss += dlt * dlt;
    }
    res.mean_error[j] = mean;
    res.sd_error[j] = std::sqrt(ss / (folds - 1));
  }
  res.best_index = static_cast<std::size_t>(
      std::min_element(res.mean_error.begin(), res.mean_error.end()) - res.mean_error.begin());
  const double bound = res.mean_error[res.best_index] + res.sd_error[res.best_index];
  res.one_se_index = res.best_index;
  for (std::size_t j = 0; j < res.best_index; ++j) {
    if (res.mean_error[j] <= bound) {
      res.one_se_index = j;
      break;
    }
  }
  return res;
}

}  // namespace sfcca::group_lasso
