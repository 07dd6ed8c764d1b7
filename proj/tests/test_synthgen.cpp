#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "corrstat/corrdist.hpp"
#include "corrstat/synthgen.hpp"
#include "helpers.hpp"

using namespace corrstat;

namespace {

GeneratorSpec spec_for(const TrueCorrelation& c, Index t, std::uint64_t seed, Family f = Family::gaussian) {
  GeneratorSpec g;
  g.family = f;
  g.T = t;
  g.seed = seed;
  g.correlation = c;
  return g;
}

double excess_kurtosis(const Eigen::RowVectorXd& x) {
  const double m = x.mean();
  const auto c = (x.array() - m).eval();
  const double v = c.square().mean();
  return c.square().square().mean() / (v * v) - 3.0;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("cholesky closed forms") {
    CHECK(cholesky(Eigen::MatrixXd::Identity(4, 4).eval()) == Eigen::MatrixXd::Identity(4, 4));
    const double r = 0.35;
    Eigen::Matrix2d c;
    c << 1, r, r, 1;
    const Eigen::MatrixXd l = cholesky(c);
    CHECK(l(0, 0) == doctest::Approx(1.0));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == doctest::Approx(r));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(1 - r * r)));
  }

  TEST_CASE("cholesky rejects an indefinite matrix") {
    Eigen::Matrix3d c = Eigen::Matrix3d::Identity();
    c(2, 2) = -0.01;
    try {
      cholesky(c);
      FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
      CHECK(e.pivot() == 2);
    }
  }

  TEST_CASE("cholesky reconstruction on random SPD matrices") {
    for (int s = 0; s < 1000; ++s) {
      const Index n = 1 + s % 50;
      const Eigen::MatrixXd c = random_spd(n, 100 + s);
      const Eigen::MatrixXd l = cholesky(c);
      CHECK((l * l.transpose() - c).cwiseAbs().maxCoeff() <= 1e-12 * c.cwiseAbs().maxCoeff());
      CHECK(l.isLowerTriangular());
    }
  }

  TEST_CASE("identity truth gives nearly uncorrelated rows") {
    const Index t = 100000;
    const auto p = sample_panel(spec_for(identity_truth(4), t, 1));
    const auto c = corr_matrix(p).entries;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < i; ++j) CHECK(std::abs(c(i, j)) < 5.0 / std::sqrt(double(t)));
    CHECK_FALSE(p.standardized);
  }

  TEST_CASE("gaussian sample correlation converges") {
    const auto p = sample_panel(spec_for(equicorrelation_truth(2, 0.7), 100000, 2));
    CHECK(std::abs(pearson(p.returns.row(0), p.returns.row(1)) - 0.7) < 0.01);
  }

  TEST_CASE("error scaling at T = 10^4") {
    const auto truth = one_factor_truth(10, 5);
    const Index t = 10000;
    const auto c = corr_matrix(sample_panel(spec_for(truth, t, 5))).entries;
    for (Index i = 0; i < 10; ++i)
      for (Index j = 0; j < i; ++j) {
        const double rho = truth.entries(i, j);
        CHECK(std::abs(c(i, j) - rho) < 5.0 * (1 - rho * rho) / std::sqrt(double(t)));
      }
  }

  TEST_CASE("same seed, same panel; replicas are separate streams") {
    auto g = spec_for(one_factor_truth(5, 1), 300, 42);
    const auto a = sample_panel(g);
    CHECK(a.returns == sample_panel(g).returns);
    g.replica = 1;
    const auto b = sample_panel(g);
    CHECK(a.returns != b.returns);
    g.replica = 0;
    CHECK(sample_panel(g).returns == a.returns);
  }

  TEST_CASE("student-t margins are heavy tailed") {
    const auto p = sample_panel(spec_for(identity_truth(3), 100000, 3, Family::student_t));
    for (Index i = 0; i < 3; ++i) CHECK(excess_kurtosis(p.returns.row(i)) > 10.0);
  }

  TEST_CASE("student-t pearson is consistent") {
    const auto p = sample_panel(spec_for(equicorrelation_truth(2, 0.5), 100000, 4, Family::student_t));
    CHECK(std::abs(pearson(p.returns.row(0), p.returns.row(1)) - 0.5) < 0.03);
  }

  TEST_CASE("very large nu looks gaussian") {
    auto g = spec_for(identity_truth(1), 5000, 6, Family::student_t);
    g.nu = 1e6;
    g.normalize_variance = true;
    auto x = std::vector<double>(g.T);
    const auto p = sample_panel(g);
    for (Index t = 0; t < g.T; ++t) x[static_cast<std::size_t>(t)] = p.returns(0, t);
    std::sort(x.begin(), x.end());
    double d = 0.0;
    const double k = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double f = 0.5 * std::erfc(-x[i] / std::sqrt(2.0));
      d = std::max({d, (i + 1) / k - f, f - i / k});
    }
    const double lam = d * (std::sqrt(k) + 0.12 + 0.11 / std::sqrt(k));
    double q = 0.0;
    for (int j = 1; j < 100; ++j) q += (j % 2 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * lam * lam);
    CHECK(q > 0.01);
  }

  TEST_CASE("student-t needs nu >= 3") {
    auto g = spec_for(identity_truth(2), 10, 1, Family::student_t);
    g.nu = 2.5;
    CHECK_THROWS_AS(sample_panel(g), InvalidArgument);
  }

  TEST_CASE("truth validation") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(0, 1) = 0.2;
    CHECK_THROWS_AS(make_true_correlation(c, TrueCorrelation::Source::model, "x"), NotSymmetric);
    c(1, 0) = 0.2;
    c(2, 2) = 1.1;
    CHECK_THROWS_AS(make_true_correlation(c, TrueCorrelation::Source::model, "x"), InvalidArgument);
  }

  TEST_CASE("sample estimate passes through when full rank") {
    const auto p = make_panel(gaussian_matrix(4, 200, 7));
    const auto t = sample_estimate_as_truth(p, {0, 200});
    CHECK_FALSE(t.repaired);
    CHECK(t.entries == corr_matrix(p).entries);
    CHECK(t.source == TrueCorrelation::Source::sample_estimate);
  }

  TEST_CASE("rank-deficient estimate is repaired") {
    const auto p = make_panel(gaussian_matrix(30, 20, 8));
    const auto t = sample_estimate_as_truth(p, {0, 20});
    CHECK(t.repaired);
    CHECK(t.min_eigenvalue_before < 1e-8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.entries);
    CHECK(es.eigenvalues()(0) > 0.0);
    CHECK((t.entries.diagonal().array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK_NOTHROW(cholesky(t.entries));
  }

  TEST_CASE("mild repair stays close to the input") {
    // Nearly singular estimate (N = 20, T = 22) pushed just below zero.
    Eigen::MatrixXd c = corr_matrix(make_panel(gaussian_matrix(20, 22, 9))).entries;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    Eigen::VectorXd lam = es.eigenvalues();
    REQUIRE(lam(0) < 0.01);
    lam(0) = -0.005;
    Eigen::MatrixXd bad = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd fixed = clip_to_positive_definite(bad);
    CHECK((fixed - bad).cwiseAbs().maxCoeff() <= 0.02);
  }

  TEST_CASE("piecewise panel shares innovations with its stationary twin") {
    auto g = spec_for(identity_truth(3), 200, 10);
    const auto twin = sample_panel(g);
    const auto switched = sample_piecewise_panel(g, {identity_truth(3), equicorrelation_truth(3, 0.5)}, {100, 100});
    CHECK(twin.returns.leftCols(100) == switched.returns.leftCols(100));
    CHECK(twin.returns.col(150) != switched.returns.col(150));
    CHECK_THROWS_AS(sample_piecewise_panel(g, {identity_truth(3)}, {150}), InvalidArgument);
  }
}
