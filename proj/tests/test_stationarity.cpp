#include <doctest.h>

#include <cmath>
#include <vector>

#include "corrstat/stationarity.hpp"
#include "corrstat/synthgen.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace corrstat;

namespace {

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

const std::vector<double> kAlphas{0.01, 0.05, 0.10};

ReturnPanel bivariate(double rho_first, double rho_second, Index t, std::uint64_t seed) {
  GeneratorSpec g;
  g.T = t;
  g.seed = seed;
  g.correlation = equicorrelation_truth(2, rho_first);
  return sample_piecewise_panel(g, {g.correlation, equicorrelation_truth(2, rho_second)}, {t / 2, t - t / 2});
}

}  // namespace

TEST_SUITE("stationarity") {
  TEST_CASE("KS distance at mid-quantiles") {
    for (std::size_t k : {5u, 17u, 70u}) {
      std::vector<double> x;
      for (std::size_t i = 1; i <= k; ++i) x.push_back((i - 0.5) / static_cast<double>(k));
      CHECK(ks_statistic(x, uniform_cdf) == doctest::Approx(0.5 / static_cast<double>(k)).epsilon(1e-12));
    }
  }

  TEST_CASE("KS distance against a dense-grid supremum") {
    std::vector<double> q;
    for (int i = 1; i <= 5; ++i) q.push_back(i / 6.0);
    CHECK(ks_statistic(q, uniform_cdf) == doctest::Approx(oracle::ks_dense(q, uniform_cdf)).epsilon(1e-14));
    const Eigen::MatrixXd g = gaussian_matrix(1, 40, 4);
    std::vector<double> x(g.data(), g.data() + 40);
    std::sort(x.begin(), x.end());
    auto phi = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
    CHECK(ks_statistic(x, phi) == doctest::Approx(oracle::ks_dense(x, phi)).epsilon(1e-14));
  }

  TEST_CASE("KS distance with every sample at the top of the support") {
    const std::vector<double> x(10, 1.0);
    CHECK(ks_statistic(x, uniform_cdf) == doctest::Approx(1.0));
  }

  TEST_CASE("KS input checks") {
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{0.1, 0.2, 0.3, 0.4}, uniform_cdf), InsufficientSamples);
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{0.5, 0.1, 0.2, 0.3, 0.4}, uniform_cdf), InvalidArgument);
  }

  TEST_CASE("KS p-values") {
    CHECK(ks_pvalue(0.0, 70) == 1.0);
    CHECK(ks_pvalue(1.0, 70) == 0.0);
    CHECK(std::abs(ks_pvalue(0.1624, 70) - 0.05) < 0.01);
    // Root of p(D) = 0.05 by bisection on the plain alternating series.
    auto series = [](double d, double k) {
      const double lam = d * (std::sqrt(k) + 0.12 + 0.11 / std::sqrt(k));
      double s = 0.0;
      for (int j = 1; j < 200; ++j) s += (j % 2 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * lam * lam);
      return s;
    };
    double lo = 0.05, hi = 0.5;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (series(mid, 70) > 0.05 ? lo : hi) = mid;
    }
    CHECK(ks_pvalue(lo, 70) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(std::abs(lo - 0.1624) < 0.01);
  }

  TEST_CASE("Kolmogorov Q: both branches agree with the series") {
    for (double lam = 0.3; lam < 3.0; lam += 0.01) {
      double s = 0.0;
      for (int j = 1; j < 2000; ++j) s += (j % 2 ? 2.0 : -2.0) * std::exp(-2.0 * j * j * lam * lam);
      CHECK(kolmogorov_q(lam) == doctest::Approx(s).epsilon(1e-9));
    }
  }

  TEST_CASE("identical series are degenerate and rejected") {
    Eigen::MatrixXd r(2, 500);
    r.row(0) = gaussian_matrix(1, 500, 9);
    r.row(1) = r.row(0);
    const auto res = global_test(make_panel(r), 0, 1, 50, kAlphas);
    CHECK(res.degenerate);
    CHECK(res.p == 0.0);
    for (const auto& f : res.reject_at) CHECK(f.reject);
  }

  TEST_CASE("window estimates and plug-in") {
    const auto p = bivariate(0.3, 0.3, 1000, 3);
    const auto res = global_test(p, 0, 1, 100, kAlphas);
    CHECK(res.samples.size() == 10);
    CHECK(res.samples[3] == doctest::Approx(pearson(p.returns.row(0).segment(300, 100), p.returns.row(1).segment(300, 100))));
    CHECK(res.rho_bar_hat == doctest::Approx(pearson(p.returns.row(0), p.returns.row(1))));
    CHECK_THROWS_AS(global_test(p, 0, 1, 250, kAlphas), InsufficientData);
  }

  TEST_CASE("regime switch 0 to 0.8 is rejected at 1%") {
    RhoCdfCache cache;
    int rejected = 0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s)
      rejected += global_test(bivariate(0.0, 0.8, 1750, 1000 + s), 0, 1, 50, kAlphas, &cache).reject_at[0].reject;
    CHECK(rejected >= 0.9 * seeds);
  }

  TEST_CASE("stationary gaussian pair is rarely rejected at 5%") {
    RhoCdfCache cache;
    int rejected = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s)
      rejected += global_test(bivariate(0.4, 0.4, 1750, 5000 + s), 0, 1, 50, kAlphas, &cache).reject_at[1].reject;
    MESSAGE("rejection rate " << rejected / double(seeds));
    CHECK(rejected <= 0.08 * seeds);
  }

  TEST_CASE("cumulative estimate counts") {
    const auto p = make_panel(gaussian_matrix(2, 1758, 31));
    CHECK(cumulative_corr(p, 0, 1, 200, 50).size() == 32);
    CHECK(cumulative_corr(p, 0, 1, 200, 100).size() == 16);
    CHECK(cumulative_corr(p, 0, 1, 250, 250).size() == 7);
    const auto e = cumulative_corr(p, 0, 1, 200, 50);
    CHECK(e.front().length == 200);
    CHECK(e.back().length == 1750);
    CHECK_THROWS_AS(cumulative_corr(make_panel(gaussian_matrix(2, 100, 1)), 0, 1, 80, 50), InsufficientData);
  }

  TEST_CASE("cumulative estimates of identical rows are all one") {
    Eigen::MatrixXd r(2, 600);
    r.row(0) = gaussian_matrix(1, 600, 12);
    r.row(1) = r.row(0);
    for (const auto& e : cumulative_corr(make_panel(r), 0, 1, 200, 50)) CHECK(e.rho == doctest::Approx(1.0));
  }

  TEST_CASE("local rule") {
    const std::vector<CumulativeEstimate> flat{{200, 0.3}, {250, 0.3}, {300, 0.3}};
    for (int n : {1, 3, 5}) CHECK(local_test(flat, n).violations == 0);
    const std::vector<CumulativeEstimate> jump{{400, 0.0}, {450, 0.16}};
    CHECK(local_test(jump, 3).violations == 1);
    CHECK(local_test(jump, 4).violations == 0);
    // Increment convention, k = 1 and tau = 50: sigma = 1/sqrt(50).
    CHECK(local_test(jump, 1, SigmaConvention::increment, 50).violations == 1);
    CHECK(local_test(jump, 2, SigmaConvention::increment, 50).violations == 0);
  }

  TEST_CASE("single pair local scan denominator") {
    const auto p = bivariate(0.2, 0.2, 1000, 8);
    const std::vector<LocalConfig> cfg{{200, 100}};
    const std::vector<int> ns{1, 3};
    const auto r = local_scan(p, cfg, ns, {}, SigmaConvention::window, 1);
    const auto est = cumulative_corr(standardize(p, Scope::global()), 0, 1, 200, 100);
    const auto lt = local_test(est, 1);
    CHECK(r.cells[0].denominator == lt.steps());
    CHECK(r.cells[0].violations == lt.violations);
    CHECK(r.cells[0].fraction == doctest::Approx(double(lt.violations) / double(lt.steps())));
  }

  TEST_CASE("scan results do not depend on the worker count") {
    GeneratorSpec g;
    g.T = 600;
    g.seed = 4;
    g.correlation = one_factor_truth(8, 4);
    const auto p = sample_panel(g);
    const std::vector<Index> w{25, 50};
    ScanControls c;
    c.reshuffle_seed = 7;
    const auto a = global_scan(p, w, kAlphas, c, 1);
    const auto b = global_scan(p, w, kAlphas, c, 4);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
      CHECK(a.cells[k].violations == b.cells[k].violations);
      CHECK(a.cells[k].reshuffle->violations == b.cells[k].reshuffle->violations);
    }
  }

  TEST_CASE("reshuffled panel as its own control") {
    GeneratorSpec g;
    g.T = 1000;
    g.seed = 6;
    g.correlation = one_factor_truth(10, 6);
    const auto shuffled = synchronous_reshuffle(sample_panel(g), 3);
    const std::vector<Index> w{50};
    ScanControls c;
    c.reshuffle_seed = 11;
    const auto r = global_scan(shuffled, w, kAlphas, c, 1);
    for (const auto& cell : r.cells) CHECK(std::abs(cell.fraction - cell.reshuffle->fraction) <= 0.15);
  }

  TEST_CASE("failing pairs are skipped, not fatal") {
    Eigen::MatrixXd r = gaussian_matrix(3, 300, 2);
    r.block(2, 0, 1, 50).setZero();
    const std::vector<Index> w{50};
    const auto res = global_scan(make_panel(r), w, kAlphas, {}, 1);
    CHECK(res.skipped.size() == 2);
    CHECK(res.cells[0].denominator == 1);
  }
}
