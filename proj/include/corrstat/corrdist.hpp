#pragma once

// Pearson estimation and the exact finite-sample law of the sample correlation coefficient
// of T bivariate-Gaussian observations with true correlation rho_bar:
//
//   P(rho) = (T-2)/pi (1-rho^2)^((T-4)/2) (1-rho_bar^2)^((T-1)/2)
//            * int_0^inf dr / (cosh r - rho rho_bar)^(T-1)
//
// Every power is evaluated in log space; the r-integral is mapped onto u = exp(-r) in (0,1)
// and integrated with adaptive Gauss-Kronrod.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrstat/dataio.hpp"
#include "corrstat/error.hpp"
#include "corrstat/types.hpp"

namespace corrstat {

/// Pearson correlation of two equally long series; both are centred and scaled by their
/// population sd internally, so the result is (1/T) sum x_t y_t of the standardized series.
template <class DerivedX, class DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x,
                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) throw InvalidArgument("pearson: series lengths differ");
  if (x.size() < 2) throw InsufficientData("pearson: need at least two observations");
  const auto xc = (x.array() - x.mean()).eval();
  const auto yc = (y.array() - y.mean()).eval();
  const Scalar sxx = xc.square().sum();
  const Scalar syy = yc.square().sum();
  if (!(sxx > Scalar(0))) throw ZeroVariance("x", "");
  if (!(syy > Scalar(0))) throw ZeroVariance("y", "");
  const Scalar r = (xc.reshaped() * yc.reshaped()).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

struct CorrelationMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd entries;
  IndexRange window;
  Scope scope;

  Index size() const noexcept { return entries.rows(); }
};

/// Pairwise Pearson matrix of the panel rows over `range` (each row standardized over the
/// range). Throws ZeroVariance(ticker, range) and InsufficientData when range < 10.
CorrelationMatrix corr_matrix(const ReturnPanel& panel, IndexRange range);
CorrelationMatrix corr_matrix(const ReturnPanel& panel);

/// True correlation and sample length of the Gaussian null.
class CorrParams {
 public:
  static constexpr Index kMinT = 10;

  CorrParams(double rho_bar, Index T);

  double rho_bar() const noexcept { return rho_bar_; }
  Index T() const noexcept { return T_; }

 private:
  double rho_bar_;
  Index T_;
};

double log_rho_density(double rho, const CorrParams& params);
double rho_density(double rho, const CorrParams& params);

struct RhoMoments {
  double mean;      ///< rho_bar - rho_bar (1 - rho_bar^2) / (2T)
  double variance;  ///< (1-rho_bar^2)^2 / T * (1 + 11 rho_bar^2 / (2T))
  double m_p;       ///< rho_bar
  double sigma_p;   ///< (1 - rho_bar^2) / sqrt(T)
};

RhoMoments rho_moments(const CorrParams& params);

/// Normal density with mean m_P and sd sigma_P, on the whole real line.
double gaussian_approx_density(double rho, const CorrParams& params);

struct NumericalMoments {
  double mass;
  double mean;
  double variance;
};

/// Zeroth, first and central second moments of rho_density by adaptive quadrature.
NumericalMoments rho_numerical_moments(const CorrParams& params);

/// CDF of rho_density tabulated on a uniform grid over [-1, 1].
///
/// Cell masses come from Simpson's rule on node and midpoint densities; between nodes the
/// CDF is a cubic Hermite interpolant on the exact densities, with Fritsch-Carlson slope
/// limiting so the result is monotone.
class RhoCdfTable {
 public:
  static constexpr Index kDefaultCells = 2000;  // spacing 1e-3

  explicit RhoCdfTable(const CorrParams& params, Index cells = kDefaultCells);

  double cdf(double rho) const;
  /// Smallest rho with cdf(rho) >= p, by bisection on the interpolant.
  double quantile(double p) const;

  const CorrParams& params() const noexcept { return params_; }
  /// Integral of the density over [-1, 1] before clamping.
  double total_mass() const noexcept { return cdf_.back(); }
  double spacing() const noexcept { return h_; }

 private:
  CorrParams params_;
  double h_;
  std::vector<double> density_;  // at nodes
  std::vector<double> cdf_;      // at nodes
};

/// Shared tables keyed by (T, rho_bar rounded to `resolution`). Safe for concurrent use.
class RhoCdfCache {
 public:
  explicit RhoCdfCache(double resolution = 1e-4) : resolution_(resolution) {}

  std::shared_ptr<const RhoCdfTable> get(double rho_bar, Index T);
  std::size_t size() const;

  /// The rho_bar actually used for a requested value.
  double rounded(double rho_bar) const;

 private:
  double resolution_;
  mutable std::mutex mutex_;
  std::map<std::pair<Index, std::int64_t>, std::shared_ptr<const RhoCdfTable>> tables_;
};

/// CDF at exactly `params` (tables are memoised process-wide).
double rho_cdf(double rho, const CorrParams& params);
double rho_quantile(double p, const CorrParams& params);

}  // namespace corrstat
