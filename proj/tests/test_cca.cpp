#include <doctest.h>

#include <algorithm>

#include "sfcca/cca.hpp"
#include "sfcca/simulation.hpp"
#include "test_util.hpp"

using namespace sfcca;
using namespace sfcca::testing;
namespace gl = sfcca::group_lasso;

namespace {

struct Pair {
  Matrix y;
  Matrix x;
};

// Y depends on the first few X columns plus noise.
Pair correlated(Eigen::Index n, Eigen::Index p, Eigen::Index d, std::mt19937_64& rng) {
  Pair out;
  out.x = gaussian_matrix(n, p, rng);
  const Matrix a = gaussian_matrix(std::min<Eigen::Index>(p, 4), d, rng);
  out.y = out.x.leftCols(a.rows()) * a + 1.5 * gaussian_matrix(n, d, rng);
  return out;
}

SparseCcaOptions tight() {
  SparseCcaOptions o;
  o.solver.kkt_tol = 1e-11;
  return o;
}

void check_invariants(const CCAModel& model, const Matrix& y, const Matrix& x, double tol) {
  const Matrix sx = second_moment(center_columns(x));
  const Matrix sy = second_moment(center_columns(y));
  const auto k = model.rank();
  CHECK(max_abs(model.T.transpose() * sx * model.T - Matrix::Identity(k, k)) <= tol);
  CHECK(max_abs(model.H.transpose() * sy * model.H - Matrix::Identity(k, k)) <= tol);
  for (int j = 0; j < k; ++j) {
    CHECK(model.correlations(j) >= 0.0);
    CHECK(model.correlations(j) <= 1.0 + 1e-8);
    if (j > 0) CHECK(model.correlations(j) <= model.correlations(j - 1));
    Eigen::Index r = 0;
    model.H.col(j).cwiseAbs().maxCoeff(&r);
    CHECK(model.H(r, j) > 0.0);
  }
}

// Aligns the column signs of b to a.
Matrix align_columns(const Matrix& a, Matrix b) {
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    if (a.col(j).dot(b.col(j)) < 0) b.col(j) *= -1.0;
  }
  return b;
}

}  // namespace

TEST_CASE("inv_sqrt_psd") {
  CHECK(max_abs(inv_sqrt_psd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) < 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 1;
  Matrix expect = Matrix::Zero(2, 2);
  expect.diagonal() << 0.5, 1;
  CHECK(max_abs(inv_sqrt_psd(d) - expect) < 1e-15);
  std::mt19937_64 rng(79);
  for (Eigen::Index m : {2, 4, 7}) {
    const Matrix s = random_spd(m, rng).matrix();
    const Matrix r = inv_sqrt_psd(s);
    CHECK(max_abs(r * s * r - Matrix::Identity(m, m)) < 1e-10);
    CHECK(max_abs(r - r.transpose()) == 0.0);
  }
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_WITH_AS(inv_sqrt_psd(singular), doctest::Contains("eigenvalue"), NumericError);
}

TEST_CASE("classical_cca") {
  std::mt19937_64 rng(83);
  SUBCASE("textbook eigenproblem oracle") {
    const auto data = correlated(400, 6, 3, rng);
    const auto model = classical_cca(data.y, data.x);
    const Matrix xc = center_columns(data.x), yc = center_columns(data.y);
    const Matrix sxx = second_moment(xc), syy = second_moment(yc);
    const Matrix sxy = xc.transpose() * yc / 400.0;
    const Matrix op = sxx.inverse() * sxy * syy.inverse() * sxy.transpose();
    Eigen::EigenSolver<Matrix> es(op);
    std::vector<double> ev;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
    std::sort(ev.rbegin(), ev.rend());
    REQUIRE(model.rank() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(model.correlations(k) * model.correlations(k) == doctest::Approx(ev[static_cast<std::size_t>(k)]).epsilon(1e-8));
      const Vector theta = model.T.col(k);
      const double g2 = model.correlations(k) * model.correlations(k);
      CHECK(max_abs(op * theta - g2 * theta) < 1e-8 * std::max(1.0, theta.norm()));
    }
    check_invariants(model, data.y, data.x, 1e-10);
  }
  SUBCASE("independent blocks have small correlations") {
    const Matrix x = gaussian_matrix(10000, 3, rng);
    const Matrix y = gaussian_matrix(10000, 2, rng);
    const auto model = classical_cca(y, x);
    CHECK(model.correlations.maxCoeff() <= 0.05);
  }
  SUBCASE("exact linear relation") {
    const Matrix x = gaussian_matrix(200, 4, rng);
    const Matrix a = gaussian_matrix(4, 2, rng);
    const auto model = classical_cca(x * a, x);
    CHECK(model.correlations(0) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(classical_cca(gaussian_matrix(5, 2, rng), gaussian_matrix(5, 6, rng)), ValidationError);
    CHECK_THROWS_AS(classical_cca(gaussian_matrix(5, 2, rng), gaussian_matrix(6, 3, rng)), ValidationError);
  }
}

TEST_CASE("sparse_cca") {
  std::mt19937_64 rng(89);
  SUBCASE("lambda = 0 reduces to classical CCA") {
    const auto data = correlated(2000, 10, 3, rng);
    const auto sparse = sparse_cca(data.y, data.x, 0.0, tight());
    const auto classic = classical_cca(data.y, data.x);
    REQUIRE(sparse.rank() == 3);
    CHECK(max_abs(sparse.correlations - classic.correlations) <= 1e-8);
    CHECK(max_abs(align_columns(classic.T, sparse.T) - classic.T) <= 1e-8);
    CHECK(max_abs(align_columns(classic.H, sparse.H) - classic.H) <= 1e-8);
  }
  SUBCASE("identical blocks") {
    const Matrix x = gaussian_matrix(300, 3, rng);
    const auto model = sparse_cca(x, x, 0.0, tight());
    REQUIRE(model.rank() == 3);
    for (int k = 0; k < 3; ++k) CHECK(model.correlations(k) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(model.ties_flagged);
  }
  SUBCASE("orthogonality across a lambda grid") {
    const auto data = correlated(150, 60, 3, rng);
    const Matrix xc = center_columns(data.x);
    const Matrix m = center_columns(data.y) * inv_sqrt_psd(second_moment(center_columns(data.y)));
    const auto grid = gl::lambda_grid(gl::lambda_max(xc, m), 10, 0.01);
    for (double lambda : grid) {
      const auto model = sparse_cca(data.y, data.x, lambda);
      if (model.rank() > 0) check_invariants(model, data.y, data.x, 1e-8);
    }
  }
  SUBCASE("empirical correlations equal the reported ones at lambda = 0") {
    const auto data = correlated(500, 8, 3, rng);
    const auto model = sparse_cca(data.y, data.x, 0.0, tight());
    for (int k = 0; k < model.rank(); ++k) {
      const double r = pearson(data.x * model.T.col(k), data.y * model.H.col(k));
      CHECK(std::abs(r - model.correlations(k)) <= 1e-6);
    }
  }
  SUBCASE("rescaling Y leaves correlations unchanged at lambda = 0") {
    const auto data = correlated(500, 8, 3, rng);
    Vector scale(3);
    scale << 0.1, 3.0, 17.0;
    const auto a = sparse_cca(data.y, data.x, 0.0, tight());
    const auto b = sparse_cca(data.y * scale.asDiagonal(), data.x, 0.0, tight());
    CHECK(max_abs(a.correlations - b.correlations) <= 1e-8);
  }
  SUBCASE("permuting the sample order") {
    const auto data = correlated(200, 30, 2, rng);
    std::vector<Eigen::Index> perm(200);
    for (Eigen::Index i = 0; i < 200; ++i) perm[static_cast<std::size_t>(i)] = (i * 77) % 200;
    const Matrix yp = data.y(perm, Eigen::all), xp = data.x(perm, Eigen::all);
    const auto a = sparse_cca(data.y, data.x, 0.05, tight());
    const auto b = sparse_cca(yp, xp, 0.05, tight());
    REQUIRE(a.rank() == b.rank());
    CHECK(max_abs(a.T - b.T) < 1e-6);
    CHECK(max_abs(a.correlations - b.correlations) < 1e-8);
  }
  SUBCASE("large lambda leaves no pairs") {
    const auto data = correlated(100, 20, 2, rng);
    const auto model = sparse_cca(data.y, data.x, 1e6);
    CHECK(model.rank() == 0);
    CHECK(model.T.cols() == 0);
    CHECK((model.B.array() == 0.0).all());
  }
  SUBCASE("diagonal Sigma_Y option") {
    const auto data = correlated(300, 10, 3, rng);
    SparseCcaOptions opts = tight();
    const Vector diag = second_moment(center_columns(data.y)).diagonal();
    opts.sigma_y_diagonal = diag;
    const auto model = sparse_cca(data.y, data.x, 0.0, opts);
    const Matrix sx = second_moment(center_columns(data.x));
    const auto k = model.rank();
    CHECK(max_abs(model.T.transpose() * sx * model.T - Matrix::Identity(k, k)) <= 1e-8);
    CHECK(max_abs(model.H.transpose() * diag.asDiagonal() * model.H - Matrix::Identity(k, k)) <= 1e-8);
  }
  SUBCASE("singular Sigma_Y") {
    Matrix y = gaussian_matrix(50, 2, rng);
    y.col(1) = 2.0 * y.col(0);
    CHECK_THROWS_AS(sparse_cca(y, gaussian_matrix(50, 5, rng), 0.1), NumericError);
  }
}

TEST_CASE("cca_from_coefficients") {
  std::mt19937_64 rng(31);
  const Matrix x = center_columns(gaussian_matrix(300, 20, rng));
  const Matrix wy = Matrix::Identity(3, 3);
  SUBCASE("a single active row gives exactly one pair") {
    Matrix b = Matrix::Zero(20, 3);
    b.row(4) << 0.3, -0.2, 0.1;
    const auto m = cca_from_coefficients(b, x, wy);
    REQUIRE(m.rank() == 1);
    CHECK(std::abs((m.T.transpose() * second_moment(x) * m.T)(0, 0) - 1.0) <= 1e-12);
    CHECK(m.correlations(0) == doctest::Approx(std::sqrt(second_moment(x)(4, 4)) * b.row(4).norm()));
  }
  SUBCASE("weak but genuine directions stay orthonormal") {
    Matrix b = gaussian_matrix(20, 3, rng);
    b.col(2) *= 1e-6;
    b.col(1) *= 1e-3;
    const auto m = cca_from_coefficients(b, x, wy);
    REQUIRE(m.rank() == 3);
    CHECK(max_abs(m.T.transpose() * second_moment(x) * m.T - Matrix::Identity(3, 3)) <= 1e-8);
  }
  SUBCASE("design mismatch") {
    CHECK_THROWS_AS(cca_from_coefficients(Matrix::Zero(5, 3), x, wy), ValidationError);
  }
}

TEST_CASE("sparse_cca support recovery on the simulation generator") {
  sim::SimConfig cfg;
  std::vector<double> f1;
  for (int trial = 0; trial < 15; ++trial) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
    const auto truth = sim::make_truth(cfg);
    const auto data = sim::sample_multivariate(truth, 800, sim::derive_seed(cfg.seed, 1));
    const Matrix xc = center_columns(data.x);
    const Matrix m = center_columns(data.y) * inv_sqrt_psd(second_moment(center_columns(data.y)));
    const auto path = gl::cv_path(xc, m, gl::lambda_grid(gl::lambda_max(xc, m)), 5, cfg.seed);
    const auto model = sparse_cca(data.y, data.x, path.lambda_1se());
    REQUIRE(model.rank() >= 1);
    f1.push_back(sim::metric_f1(truth.support, model.T.col(0)));
  }
  std::nth_element(f1.begin(), f1.begin() + 7, f1.end());
  CHECK(f1[7] >= 0.6);
}
