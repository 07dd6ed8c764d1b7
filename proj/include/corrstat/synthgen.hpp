#pragma once

// Seeded stationary panels with a prescribed correlation matrix: multivariate Gaussian and
// the Gaussian scale mixture giving a multivariate Student-t.
//
// Row i of the innovation matrix is drawn from substream (seed, replica, i) and the
// chi-square mixing variables from substream (seed, replica, kMixingStream), so a panel
// depends only on its own (seed, replica) and never on how replicas are scheduled.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "corrstat/dataio.hpp"
#include "corrstat/error.hpp"

namespace corrstat {

struct TrueCorrelation {
  enum class Source { identity, sample_estimate, model };

  Eigen::MatrixXd entries;
  Source source = Source::model;
  std::string model;  ///< model name or description of the estimate
  bool repaired = false;
  double min_eigenvalue_before = std::numeric_limits<double>::quiet_NaN();

  Index size() const noexcept { return entries.rows(); }
};

std::string to_string(TrueCorrelation::Source s);

/// Validates symmetry, unit diagonal and smallest eigenvalue > 1e-10.
TrueCorrelation make_true_correlation(Eigen::MatrixXd entries, TrueCorrelation::Source source,
                                      std::string model = {});

TrueCorrelation identity_truth(Index n);
TrueCorrelation equicorrelation_truth(Index n, double rho);
/// C_ij = b_i b_j off the diagonal with loadings b_i ~ U[lo, hi] drawn from `seed`.
TrueCorrelation one_factor_truth(Index n, std::uint64_t seed, double lo = 0.2, double hi = 0.7);

/// Eigenvalue clipping at `floor` followed by diagonal renormalization.
Eigen::MatrixXd clip_to_positive_definite(const Eigen::MatrixXd& c, double floor = 1e-8);

/// Full-window sample correlation of `panel` over `range` as a truth. When the estimate is
/// not safely positive definite (smallest eigenvalue < 1e-8, e.g. N > T) it is repaired
/// with clip_to_positive_definite and `repaired` is set.
TrueCorrelation sample_estimate_as_truth(const ReturnPanel& panel, IndexRange range);

/// Lower-triangular L with L L^T = C. Only the lower triangle of C is read.
/// Throws NotPositiveDefinite with the 0-based failing pivot.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cholesky(
    const Eigen::MatrixBase<Derived>& c) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (c.rows() != c.cols()) throw InvalidArgument("cholesky: matrix is not square");
  const Index n = c.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    Scalar d = c(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > Scalar(0))) throw NotPositiveDefinite(j);
    const Scalar ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i)
      l(i, j) = (c(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return l;
}

enum class Family { gaussian, student_t };

struct GeneratorSpec {
  Family family = Family::gaussian;
  double nu = 3.0;  ///< degrees of freedom of the Student-t
  Index T = 0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  TrueCorrelation correlation;
  Eigen::VectorXd volatilities;       ///< empty means unit volatilities
  bool normalize_variance = false;    ///< rescale Student-t margins to unit variance (nu > 2)
  std::vector<std::string> tickers;   ///< empty means S001, S002, ...
};

inline constexpr std::uint64_t kMixingStream = 0xFFFF'FFFF'0000'0001ULL;

/// Columns i.i.d. N(0, C) (times volatilities). Marked unstandardized.
ReturnPanel sample_gaussian_panel(const GeneratorSpec& spec);

/// Columns z sqrt(nu / s) with z ~ N(0, C), s ~ chi2(nu). Requires nu >= 3.
ReturnPanel sample_student_t_panel(const GeneratorSpec& spec);

/// Dispatches on spec.family.
ReturnPanel sample_panel(const GeneratorSpec& spec);

/// Piecewise-stationary panel: segment k spans `lengths[k]` consecutive steps and uses
/// `correlations[k]`. The innovations are those of the single-segment panel with the same
/// (seed, replica), so a one-segment call reproduces sample_panel exactly and a
/// regime-switch panel and its stationary twin share every random draw.
ReturnPanel sample_piecewise_panel(const GeneratorSpec& spec,
                                   const std::vector<TrueCorrelation>& correlations,
                                   const std::vector<Index>& lengths);

}  // namespace corrstat
