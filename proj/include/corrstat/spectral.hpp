#pragma once

// Eigenstructure diagnostics of correlation matrices: market eigenvalue (largest), the sum
// of the next S "sector" eigenvalues, inverse participation ratio of the market
// eigenvector, principal-component decomposition and the one-mode approximation.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "corrstat/error.hpp"
#include "corrstat/types.hpp"

namespace corrstat {

struct EigenSystem {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< column k belongs to values(k); unit norm, orthonormal

  Index size() const noexcept { return values.size(); }
};

/// Symmetric eigendecomposition with ascending eigenvalues. Each eigenvector is signed so
/// that its largest-magnitude component (first one on ties) is positive.
/// Throws NotSymmetric when |C - C^T| exceeds 1e-12 (scaled by max(1, |C|_max)).
EigenSystem eig_sym(const Eigen::MatrixXd& c);

/// sum v_i^4 of a unit vector; 1/N when fully delocalized, 1 on a basis vector.
template <class Derived>
typename Derived::Scalar ipr(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = v.norm();
  if (std::abs(norm - Scalar(1)) > Scalar(1e-10))
    throw NotNormalized("IPR needs a unit vector, norm is " + std::to_string(static_cast<double>(norm)));
  return v.array().square().square().sum();
}

struct SpectralSnapshot {
  Index window_id = 0;
  double lambda_market = 0.0;  ///< largest eigenvalue
  double lambda_sector = 0.0;  ///< sum of the S eigenvalues below it
  double ipr_market = 0.0;
  Index sectors = 3;
  /// Largest eigenvalue is (numerically) degenerate, so its eigenvector and IPR are not
  /// determined by the matrix: lambda_N - lambda_{N-1} < 1e-8 N.
  bool ipr_unstable = false;
};

/// Requires N > S + 1.
SpectralSnapshot spectral_snapshot(const Eigen::MatrixXd& c, Index sectors = 3, Index window_id = 0);
SpectralSnapshot spectral_snapshot(const EigenSystem& eig, Index sectors = 3, Index window_id = 0);

struct SpectralDelta {
  double d_market = 0.0;
  double d_sector = 0.0;
  std::optional<double> d_ipr;  ///< empty when either snapshot's IPR is unstable
};

/// Relative changes (x2 - x1) / x1.
SpectralDelta spectral_delta(const SpectralSnapshot& s1, const SpectralSnapshot& s2);

struct CoOccurrenceThresholds {
  double market = 0.0;  ///< >= 0
  double sector = 0.0;  ///< <= 0
  double ipr = 0.0;     ///< <= 0
};

/// Market eigenvalue up, sector sum down and market IPR down, all beyond the thresholds.
/// False when the IPR change is suppressed.
bool co_occurrence_flag(const SpectralDelta& delta, const CoOccurrenceThresholds& th = {});

/// Principal components e_l(t) = v_l^T r(t) / sqrt(lambda_l) of a window standardized panel
/// (N x L, rows with zero mean and unit population sd). Row k of the result belongs to the
/// k-th of the `retain` largest eigenvalues, in ascending order like `eig` (so the last row
/// is the market mode). Throws DegenerateComponent for a retained lambda <= 1e-12.
Eigen::MatrixXd pca_decompose(const Eigen::MatrixXd& standardized, const EigenSystem& eig, Index retain = -1);

/// sum over the retained components of sqrt(lambda_l) v_l e_l(t).
Eigen::MatrixXd pca_reconstruct(const Eigen::MatrixXd& components, const EigenSystem& eig);

struct MarketModeResidual {
  double total = 0.0;           ///< 1 - lambda_N / N
  Eigen::VectorXd per_stock;    ///< 1 - lambda_N v_N(i)^2
};

/// Variance left outside the market mode for a standardized panel.
MarketModeResidual market_mode_residual(const EigenSystem& eig);

}  // namespace corrstat
