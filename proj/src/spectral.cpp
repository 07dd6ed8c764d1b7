#include "corrstat/spectral.hpp"

#include <cmath>

namespace corrstat {

EigenSystem eig_sym(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() == 0) throw InvalidArgument("eig_sym needs a square, non-empty matrix");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw NotSymmetric("matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw NumericsError("eigensolver did not converge", 0.0);
  EigenSystem out{es.eigenvalues(), es.eigenvectors()};
  for (Index k = 0; k < out.size(); ++k) {
    Index imax = 0;
    out.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, k) < 0.0) out.vectors.col(k) *= -1.0;
  }
  return out;
}

SpectralSnapshot spectral_snapshot(const EigenSystem& eig, Index sectors, Index window_id) {
  const Index n = eig.size();
  if (sectors < 0 || n <= sectors + 1)
    throw InvalidArgument("spectral snapshot needs N > S + 1 (N = " + std::to_string(n) +
                          ", S = " + std::to_string(sectors) + ")");
  SpectralSnapshot s;
  s.window_id = window_id;
  s.sectors = sectors;
  s.lambda_market = eig.values(n - 1);
  s.lambda_sector = eig.values.segment(n - 1 - sectors, sectors).sum();
  s.ipr_market = ipr(eig.vectors.col(n - 1));
  s.ipr_unstable = eig.values(n - 1) - eig.values(n - 2) < 1e-8 * static_cast<double>(n);
  return s;
}

SpectralSnapshot spectral_snapshot(const Eigen::MatrixXd& c, Index sectors, Index window_id) {
  return spectral_snapshot(eig_sym(c), sectors, window_id);
}

SpectralDelta spectral_delta(const SpectralSnapshot& s1, const SpectralSnapshot& s2) {
  if (s1.lambda_market == 0.0 || s1.lambda_sector == 0.0)
    throw DomainError("relative change from a zero eigenvalue");
  SpectralDelta d;
  d.d_market = (s2.lambda_market - s1.lambda_market) / s1.lambda_market;
  d.d_sector = (s2.lambda_sector - s1.lambda_sector) / s1.lambda_sector;
  if (!s1.ipr_unstable && !s2.ipr_unstable) d.d_ipr = (s2.ipr_market - s1.ipr_market) / s1.ipr_market;
  return d;
}

bool co_occurrence_flag(const SpectralDelta& delta, const CoOccurrenceThresholds& th) {
  if (th.market < 0.0 || th.sector > 0.0 || th.ipr > 0.0)
    throw InvalidArgument("co-occurrence thresholds need market >= 0, sector <= 0, ipr <= 0");
  if (!delta.d_ipr) return false;
  return delta.d_market > th.market && delta.d_sector < th.sector && *delta.d_ipr < th.ipr;
}

Eigen::MatrixXd pca_decompose(const Eigen::MatrixXd& standardized, const EigenSystem& eig, Index retain) {
  const Index n = eig.size();
  if (standardized.rows() != n) throw InvalidArgument("panel rows do not match the eigensystem");
  if (retain < 0) retain = n;
  if (retain == 0 || retain > n) throw InvalidArgument("retain must be in [1, N]");
  const Index first = n - retain;
  for (Index k = first; k < n; ++k)
    if (!(eig.values(k) > 1e-12)) throw DegenerateComponent(k, eig.values(k));
  const Eigen::VectorXd inv = eig.values.tail(retain).cwiseSqrt().cwiseInverse();
  return inv.asDiagonal() * (eig.vectors.rightCols(retain).transpose() * standardized);
}

Eigen::MatrixXd pca_reconstruct(const Eigen::MatrixXd& components, const EigenSystem& eig) {
  const Index retain = components.rows();
  if (retain == 0 || retain > eig.size()) throw InvalidArgument("component count does not match the eigensystem");
  return eig.vectors.rightCols(retain) * eig.values.tail(retain).cwiseSqrt().asDiagonal() * components;
}

MarketModeResidual market_mode_residual(const EigenSystem& eig) {
  const Index n = eig.size();
  if (n == 0) throw InvalidArgument("empty eigensystem");
  const double lambda = eig.values(n - 1);
  MarketModeResidual r;
  r.total = 1.0 - lambda / static_cast<double>(n);
  r.per_stock = (1.0 - lambda * eig.vectors.col(n - 1).array().square()).matrix();
  return r;
}

}  // namespace corrstat
