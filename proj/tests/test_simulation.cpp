#include <doctest.h>

#include <algorithm>
#include <set>

#include "sfcca/cca.hpp"
#include "sfcca/simulation.hpp"
#include "test_util.hpp"

using namespace sfcca;
using namespace sfcca::sim;
using namespace sfcca::testing;

namespace {

SimConfig small_config(std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.p = 30;
  cfg.support_size = 6;
  cfg.grid_size = 20;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("make_truth invariants") {
  for (std::uint64_t seed : {1u, 2u, 3u, 17u}) {
    SimConfig cfg;
    cfg.seed = seed;
    const SimTruth t = make_truth(cfg);
    const Eigen::Index k = cfg.K;
    CHECK(max_abs(t.etas.transpose() * t.sigma_y * t.etas - Matrix::Identity(k, k)) <= 1e-10);
    CHECK(max_abs(t.thetas.transpose() * t.sigma_x * t.thetas - Matrix::Identity(k, k)) <= 1e-10);
    CHECK(t.support.size() == 20);
    for (Eigen::Index i = 0; i < cfg.p; ++i) {
      const bool in = std::find(t.support.begin(), t.support.end(), static_cast<int>(i)) != t.support.end();
      if (!in) CHECK(t.thetas.row(i).norm() == 0.0);
    }
    REQUIRE(t.phis.size() == static_cast<std::size_t>(cfg.d + 1));
    for (std::size_t a = 0; a < t.phis.size(); ++a) {
      for (std::size_t b = 0; b < t.phis.size(); ++b) {
        CHECK(std::abs(field_inner(t.phis[a], t.phis[b]) - (a == b ? 1.0 : 0.0)) <= 1e-8);
      }
    }
    std::set<std::pair<int, int>> labels(t.phi_labels.begin(), t.phi_labels.end());
    CHECK(labels.size() == t.phi_labels.size());
    for (int kk = 0; kk < cfg.K; ++kk) {
      CHECK(field_norm(t.psis[static_cast<std::size_t>(kk)]) == doctest::Approx(t.etas.col(kk).norm()).epsilon(1e-8));
    }
    for (const auto& v : t.mu->values()) {
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(v.matrix()).eigenvalues().minCoeff() > 0.5);
    }
  }
}

TEST_CASE("make_truth is deterministic and validates") {
  const SimTruth a = make_truth(small_config(5));
  const SimTruth b = make_truth(small_config(5));
  CHECK((a.etas.array() == b.etas.array()).all());
  CHECK((a.thetas.array() == b.thetas.array()).all());
  CHECK(a.phi_labels == b.phi_labels);
  SimConfig bad = small_config();
  bad.support_size = bad.p + 1;
  CHECK_THROWS_AS(make_truth(bad), ValidationError);
  bad = small_config();
  bad.gammas = {0.5};
  CHECK_THROWS_AS(make_truth(bad), ValidationError);
  bad = small_config();
  bad.gammas = {1.2, 0.5};
  CHECK_THROWS_AS(make_truth(bad), ValidationError);
}

TEST_CASE("discrete Legendre polynomials are orthonormal under trapezoid weights") {
  for (std::size_t n : {5u, 20u, 50u}) {
    const auto grid = TimeGrid::uniform(-1.0, 1.0, n);
    const Matrix p = discrete_legendre(grid, 4);
    const Vector w = Eigen::Map<const Vector>(grid.weights().data(), static_cast<Eigen::Index>(n));
    CHECK(max_abs(p.transpose() * w.asDiagonal() * p - Matrix::Identity(5, 5)) <= 1e-10);
  }
}

TEST_CASE("sample_multivariate") {
  SimConfig cfg = small_config(3);
  const SimTruth t = make_truth(cfg);
  SUBCASE("sample cross-covariance matches the planted structure") {
    const Eigen::Index n = 50000;
    const auto s = sample_multivariate(t, n, 11);
    const Matrix sxy = s.x.transpose() * s.y / static_cast<double>(n);
    const Matrix expect = (t.sigma_y * t.etas * t.gammas.asDiagonal() * t.thetas.transpose() * t.sigma_x).transpose();
    const Matrix c = t.joint_covariance();
    const Eigen::Index d = cfg.d;
    int outside = 0;
    for (Eigen::Index i = 0; i < sxy.rows(); ++i) {
      for (Eigen::Index j = 0; j < sxy.cols(); ++j) {
        const double sd = std::sqrt((c(d + i, d + i) * c(j, j) + expect(i, j) * expect(i, j)) / static_cast<double>(n));
        outside += std::abs(sxy(i, j) - expect(i, j)) > 5.0 * sd ? 1 : 0;
      }
    }
    CHECK(outside == 0);
    const auto cc = classical_cca(s.y, s.x);
    CHECK(std::abs(cc.correlations(0) - 0.95) <= 0.02);
    CHECK(std::abs(cc.correlations(1) - 0.60) <= 0.02);
  }
  SUBCASE("seeded and deterministic") {
    const auto a = sample_multivariate(t, 100, 4);
    const auto b = sample_multivariate(t, 100, 4);
    const auto c = sample_multivariate(t, 100, 5);
    CHECK((a.x.array() == b.x.array()).all());
    CHECK((a.y.array() == b.y.array()).all());
    CHECK(!(a.x.array() == c.x.array()).all());
    CHECK_THROWS_AS(sample_multivariate(t, 0, 1), ValidationError);
  }
}

TEST_CASE("synthesize_curves") {
  const SimTruth t = make_truth(small_config(4));
  SUBCASE("zero scores and no contamination give the mean") {
    const auto curves = synthesize_curves(t, Matrix::Zero(1, 3), 1, 0.0);
    for (std::size_t l = 0; l < t.mu->size(); ++l) {
      CHECK(max_abs(curves[0][l].matrix() - (*t.mu)[l].matrix()) <= 1e-12);
    }
  }
  SUBCASE("log coordinates recover the scores and the contamination variance") {
    const Eigen::Index n = 50000;
    const auto s = sample_multivariate(t, n, 8);
    const auto curves = synthesize_curves(t, s.y, 9);
    Vector w(n);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto v = log_curve(t.mu, curves[static_cast<std::size_t>(i)]);
      for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(field_inner(v, t.phis[static_cast<std::size_t>(j)]) - s.y(i, j)));
      w(i) = field_inner(v, t.phis[3]);
    }
    CHECK(worst <= 1e-8);
    const double var = (w.array() - w.mean()).square().mean();
    CHECK(var == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("contamination does not change the planted scores") {
    const auto s = sample_multivariate(t, 50, 2);
    const auto a = synthesize_curves(t, s.y, 3, 0.0);
    const auto b = synthesize_curves(t, s.y, 3, 2.0);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto va = log_curve(t.mu, a[i]);
      const auto vb = log_curve(t.mu, b[i]);
      for (int j = 0; j < 3; ++j) {
        CHECK(field_inner(va, t.phis[static_cast<std::size_t>(j)]) ==
              doctest::Approx(field_inner(vb, t.phis[static_cast<std::size_t>(j)])).epsilon(1e-8));
      }
    }
  }
  CHECK_THROWS_AS(synthesize_curves(t, Matrix::Zero(2, 2), 1), ValidationError);
}

TEST_CASE("metric examples") {
  SUBCASE("normalized error") {
    const Vector a = Vector::Unit(3, 0);
    CHECK(metric_norm_error(a, 3.0 * a) == doctest::Approx(0.0));
    CHECK(metric_norm_error(a, -a) == doctest::Approx(2.0));
    CHECK(metric_norm_error(a, Vector::Unit(3, 1)) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(metric_norm_error(a, Vector::Zero(3)), NumericError);
    CHECK_THROWS_AS(metric_norm_error(a, Vector::Zero(2)), ValidationError);
  }
  SUBCASE("support F1") {
    Vector est = Vector::Zero(10);
    est(0) = est(1) = 1.0;
    CHECK(metric_f1({0, 1}, est) == doctest::Approx(1.0));
    CHECK(metric_f1({2, 3}, est) == doctest::Approx(0.0));
    est(2) = 0.5;
    CHECK(metric_f1({0, 1, 3}, est) == doctest::Approx(2.0 / 3.0));
    CHECK(metric_f1({0}, Vector::Zero(10)) == 0.0);
    CHECK_THROWS_AS(metric_f1({}, est), ValidationError);
  }
  const SimTruth t = make_truth(small_config(6));
  const auto& psi = t.psis[0];
  SUBCASE("transport error") {
    CHECK(metric_pt_error(psi, psi) == doctest::Approx(0.0));
    CHECK(metric_pt_error(psi, psi * -1.0) == doctest::Approx(2.0 * field_norm(psi)));
    CHECK(alignment_sign(psi, psi * -1.0) == -1.0);
    CHECK(alignment_sign(psi, psi) == 1.0);
  }
  SUBCASE("population tangent correlation of the truth") {
    const auto s = sample_multivariate(t, 20000, 12);
    const auto curves = synthesize_curves(t, s.y, 13);
    const double r = metric_tangent_corr(t.mu, psi, t.thetas.col(0), curves, s.x);
    CHECK(std::abs(r - 0.95) <= 0.02);
    CHECK(metric_tangent_corr(t.mu, psi * -1.0, -t.thetas.col(0), curves, s.x) == doctest::Approx(r));
    CHECK_THROWS_AS(metric_tangent_corr(t.mu, psi, Vector::Zero(t.config.p), curves, s.x), NumericError);
    CHECK_THROWS_AS(metric_tangent_corr(t.mu, psi, t.thetas.col(0), curves, s.x.topRows(5)), ValidationError);
  }
  SUBCASE("method names") {
    CHECK(parse_method("riemannian") == Method::Riemannian);
    CHECK(parse_method(method_name(Method::Euclidean)) == Method::Euclidean);
    CHECK_THROWS_AS(parse_method("other"), ValidationError);
  }
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(1, s, i));
  }
  CHECK(seen.size() == 200);
  CHECK(derive_seed(7, 1, 2) == derive_seed(7, 1, 2));
}

TEST_CASE("run_trials") {
  SimConfig cfg = small_config(2);
  TrialOptions opts;
  opts.n_test = 300;
  opts.lambda_count = 10;
  const auto recs = run_trials(cfg, {150, 300}, 2, {Method::Riemannian, Method::Euclidean}, opts);
  REQUIRE(recs.size() == 8);
  for (const auto& r : recs) {
    INFO(r.error, " N=", r.n, " trial=", r.trial);
    if (r.method == Method::Riemannian) {
      CHECK(r.error.empty());
      CHECK(r.metrics.size() == 4);
      CHECK(r.metrics.at("A_norm_error") >= 0.0);
      CHECK(r.metrics.at("A_norm_error") <= 2.0);
      CHECK(r.metrics.at("B_f1") >= 0.0);
      CHECK(r.metrics.at("B_f1") <= 1.0);
      CHECK(std::abs(r.metrics.at("D_tangent_corr")) <= 1.0);
    } else if (r.error.empty()) {
      CHECK(r.metrics.count("E_euclid_corr") == 1);
    } else {
      CHECK(r.error == "fit retained no canonical pairs");
      CHECK(r.metrics.empty());
    }
  }
  const auto again = run_trials(cfg, {150, 300}, 2, {Method::Riemannian, Method::Euclidean}, opts);
  const std::string csv = trials_csv(recs);
  CHECK(csv == trials_csv(again));
  CHECK(csv.rfind("method,N,trial,metric,value\n", 0) == 0);
  std::size_t lines = 1;
  for (const auto& r : recs) lines += r.error.empty() ? r.metrics.size() : 1;
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == lines);
  CHECK_THROWS_AS(run_trials(cfg, {60}, 0, {Method::Riemannian}, opts), ValidationError);

  TrialRecord failed;
  failed.n = 10;
  failed.error = "boom";
  CHECK(trials_csv({failed}) == "method,N,trial,metric,value\nriemannian,10,0,failed,1\n");
}
