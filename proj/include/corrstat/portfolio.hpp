#pragma once

// Minimum-variance portfolios under the budget constraint sum w = 1 (shorts allowed):
//
//   w* = C^-1 1 / (1^T C^-1 1),   var(w*) = 1 / (1^T C^-1 1)
//
// and the realized / in-sample risk ratio q = sigma_R / sigma_E of weights estimated on one
// window and held over the next.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrstat/dataio.hpp"
#include "corrstat/error.hpp"
#include "corrstat/synthgen.hpp"

namespace corrstat {

struct CovarianceMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd entries;  ///< population covariance, return units squared
  IndexRange window;

  Index size() const noexcept { return entries.rows(); }
  Eigen::VectorXd volatilities() const { return entries.diagonal().cwiseSqrt(); }
};

struct WeightVector {
  std::vector<std::string> tickers;
  Eigen::VectorXd w;
};

/// Population covariance of the panel rows over `range`. Throws ZeroVariance.
CovarianceMatrix covariance_matrix(const ReturnPanel& panel, IndexRange range);

template <class DerivedC, class DerivedW>
typename DerivedC::Scalar portfolio_variance(const Eigen::MatrixBase<DerivedC>& c,
                                             const Eigen::MatrixBase<DerivedW>& w) {
  if (c.rows() != w.size() || c.cols() != w.size())
    throw InvalidArgument("portfolio_variance: dimension mismatch");
  return w.dot(c * w);
}

struct MinVarianceOptions {
  double ridge = 0.0;               ///< added to the diagonal before solving; reported by callers
  double max_condition = 1e12;
};

/// w* by a Cholesky solve of C x = 1 followed by normalization. Throws NotPositiveDefinite
/// when C is singular, indefinite or its condition number exceeds opts.max_condition.
template <class Derived>
Eigen::VectorXd min_variance_weights(const Eigen::MatrixBase<Derived>& c, const MinVarianceOptions& opts = {}) {
  if (c.rows() != c.cols() || c.rows() == 0) throw InvalidArgument("covariance must be square and non-empty");
  const Index n = c.rows();
  Eigen::MatrixXd a = c.template cast<double>();
  if (opts.ridge > 0.0) a.diagonal().array() += opts.ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(n - 1);
  if (!(lo > 0.0)) throw NotPositiveDefinite(-1, "smallest eigenvalue " + std::to_string(lo));
  if (hi / lo > opts.max_condition)
    throw NotPositiveDefinite(-1, "condition number " + std::to_string(hi / lo) + " exceeds limit");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(-1, "Cholesky failed");
  Eigen::VectorXd x = llt.solve(Eigen::VectorXd::Ones(n));
  return x / x.sum();
}

/// Same, checking the sample length: T = window length must exceed N (IllPosed otherwise).
WeightVector min_variance_weights(const CovarianceMatrix& c, const MinVarianceOptions& opts = {});

/// Closed-form optimum 1 / (1^T C^-1 1).
template <class Derived>
double min_variance(const Eigen::MatrixBase<Derived>& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(c.template cast<double>());
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(-1, "Cholesky failed");
  return 1.0 / llt.solve(Eigen::VectorXd::Ones(c.rows())).sum();
}

/// Portfolio value changes Pi_t = sum_i w_i r_it over `range`.
Eigen::VectorXd portfolio_pnl(const WeightVector& w, const ReturnPanel& panel, IndexRange range);

struct QBand {
  double mean = 0.0;
  double sd = 0.0;
  double k = 5.0;  ///< band half-width in sds

  double upper() const noexcept { return mean + k * sd; }
};

struct QExperiment {
  std::size_t sample = 0;
  IndexRange in_sample;
  IndexRange out_of_sample;
  double sigma_e = 0.0;  ///< in-sample optimal risk
  double sigma_r = 0.0;  ///< risk of the same weights on the next window
  double q = 0.0;
  std::optional<double> sigma_t;  ///< true optimal risk, synthetic runs only
  std::optional<QBand> band;
};

struct QConfig {
  Index t1 = 150;
  Index t2 = 150;
  /// Chained: each out-of-sample window is the block of T2 steps that follows the previous
  /// one, and the in-sample window is the T1 steps just before it; with T1 == T2 the T2
  /// window of sample n is the T1 window of sample n+1. Unchained: disjoint T1+T2 blocks.
  bool chained = true;
  /// Chained only: start of the first out-of-sample window; 0 means T1.
  Index first_out_start = 0;
  MinVarianceOptions optimizer;
  /// Synthetic runs: the generating covariance, used to fill QExperiment::sigma_t.
  std::optional<Eigen::MatrixXd> true_covariance;
};

/// Window pairs visited by q_series for a panel of `total` steps.
std::vector<std::pair<IndexRange, IndexRange>> q_windows(Index total, const QConfig& cfg);

/// One experiment per window pair on raw (unstandardized) returns.
std::vector<QExperiment> q_series(const ReturnPanel& panel, const QConfig& cfg);

struct McBandSpec {
  Index n = 80;
  Index t1 = 150;
  Index t2 = 150;
  std::size_t replicas = 100;
  std::uint64_t seed = 42;
  double k = 5.0;
};

/// MC mean and sd of q over Gaussian replicas drawn from `truth` (with `volatilities`,
/// empty = unit). Replica r uses generator substream (seed, r); the q values are reduced in
/// replica order, so the band is bit-identical for any `threads`.
QBand mc_band(const McBandSpec& spec, const TrueCorrelation& truth, const Eigen::VectorXd& volatilities = {},
              std::size_t threads = 0, std::vector<double>* samples = nullptr);

/// True when q > band.mean + band.k * band.sd.
std::vector<bool> flag_band_violations(const std::vector<double>& q, const QBand& band);
std::vector<bool> flag_band_violations(const std::vector<QExperiment>& series, const QBand& band);

}  // namespace corrstat
