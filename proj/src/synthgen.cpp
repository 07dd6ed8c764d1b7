#include "corrstat/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "corrstat/corrdist.hpp"
#include "corrstat/random.hpp"

namespace corrstat {

std::string to_string(TrueCorrelation::Source s) {
  switch (s) {
    case TrueCorrelation::Source::identity: return "identity";
    case TrueCorrelation::Source::sample_estimate: return "sample-estimate";
    default: return "model";
  }
}

TrueCorrelation make_true_correlation(Eigen::MatrixXd entries, TrueCorrelation::Source source,
                                      std::string model) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw InvalidArgument("correlation matrix must be square and non-empty");
  const Index n = entries.rows();
  for (Index i = 0; i < n; ++i) {
    if (std::abs(entries(i, i) - 1.0) > 1e-12) throw InvalidArgument("correlation diagonal must be 1");
    for (Index j = 0; j < i; ++j)
      if (std::abs(entries(i, j) - entries(j, i)) > 1e-12)
        throw NotSymmetric("correlation matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues()(0);
  if (!(min_eig > 1e-10)) throw NotPositiveDefinite(-1, "smallest eigenvalue " + std::to_string(min_eig));
  TrueCorrelation t;
  t.entries = std::move(entries);
  t.source = source;
  t.model = std::move(model);
  return t;
}

TrueCorrelation identity_truth(Index n) {
  return make_true_correlation(Eigen::MatrixXd::Identity(n, n), TrueCorrelation::Source::identity,
                               "identity");
}

TrueCorrelation equicorrelation_truth(Index n, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, rho);
  c.diagonal().setOnes();
  char name[64];
  std::snprintf(name, sizeof name, "equicorrelation(%.6g)", rho);
  return make_true_correlation(std::move(c), TrueCorrelation::Source::model, name);
}

TrueCorrelation one_factor_truth(Index n, std::uint64_t seed, double lo, double hi) {
  if (!(lo >= 0.0 && hi < 1.0 && lo <= hi)) throw InvalidArgument("loadings must satisfy 0 <= lo <= hi < 1");
  auto rng = make_engine(seed, 0, 0x4f4e45u);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd b(n);
  for (Index i = 0; i < n; ++i) b(i) = u(rng);
  Eigen::MatrixXd c = b * b.transpose();
  c.diagonal().setOnes();
  char name[96];
  std::snprintf(name, sizeof name, "one-factor(loadings U[%.3g,%.3g], seed %llu)", lo, hi,
                static_cast<unsigned long long>(seed));
  return make_true_correlation(std::move(c), TrueCorrelation::Source::model, name);
}

Eigen::MatrixXd clip_to_positive_definite(const Eigen::MatrixXd& c, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd r = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd d = r.diagonal().cwiseSqrt().cwiseInverse();
  r = d.asDiagonal() * r * d.asDiagonal();
  r = 0.5 * (r + r.transpose()).eval();
  r.diagonal().setOnes();
  return r;
}

TrueCorrelation sample_estimate_as_truth(const ReturnPanel& panel, IndexRange range) {
  const auto est = corr_matrix(panel, range);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(est.entries, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues()(0);
  TrueCorrelation t;
  t.source = TrueCorrelation::Source::sample_estimate;
  t.model = "sample estimate over " + range.str();
  t.min_eigenvalue_before = min_eig;
  if (min_eig >= 1e-8) {
    t.entries = est.entries;
  } else {
    t.entries = clip_to_positive_definite(est.entries, 1e-8);
    t.repaired = true;
  }
  return t;
}

namespace {

std::vector<std::string> default_tickers(Index n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%03ld", static_cast<long>(i + 1));
    out.emplace_back(buf);
  }
  return out;
}

// Unit-variance Gaussian innovations, row i from substream (seed, replica, i).
Eigen::MatrixXd innovations(const GeneratorSpec& spec, Index n) {
  Eigen::MatrixXd g(n, spec.T);
  for (Index i = 0; i < n; ++i) {
    auto rng = make_engine(spec.seed, spec.replica, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    for (Index t = 0; t < spec.T; ++t) g(i, t) = normal(rng);
  }
  return g;
}

// Per-column multipliers sqrt(nu / s); ones for the Gaussian family.
Eigen::RowVectorXd mixing(const GeneratorSpec& spec) {
  Eigen::RowVectorXd m = Eigen::RowVectorXd::Ones(spec.T);
  if (spec.family != Family::student_t) return m;
  if (!(spec.nu >= 3.0)) throw InvalidArgument("Student-t generator needs nu >= 3");
  auto rng = make_engine(spec.seed, spec.replica, kMixingStream);
  std::chi_squared_distribution<double> chi2(spec.nu);
  for (Index t = 0; t < spec.T; ++t) m(t) = std::sqrt(spec.nu / chi2(rng));
  if (spec.normalize_variance) m *= std::sqrt((spec.nu - 2.0) / spec.nu);
  return m;
}

}  // namespace

ReturnPanel sample_piecewise_panel(const GeneratorSpec& spec,
                                   const std::vector<TrueCorrelation>& correlations,
                                   const std::vector<Index>& lengths) {
  if (correlations.empty() || correlations.size() != lengths.size())
    throw InvalidArgument("piecewise generator needs one correlation per segment");
  if (spec.T < 1) throw InvalidArgument("generator needs T >= 1");
  Index total = 0;
  for (Index l : lengths) {
    if (l < 0) throw InvalidArgument("negative segment length");
    total += l;
  }
  if (total != spec.T) throw InvalidArgument("segment lengths must add up to T");
  const Index n = correlations.front().size();
  for (const auto& c : correlations)
    if (c.size() != n) throw InvalidArgument("segment correlations differ in size");
  if (spec.volatilities.size() != 0 && spec.volatilities.size() != n)
    throw InvalidArgument("volatility vector does not match N");

  Eigen::MatrixXd x = innovations(spec, n);
  Index begin = 0;
  for (std::size_t k = 0; k < correlations.size(); ++k) {
    const Eigen::MatrixXd l = cholesky(correlations[k].entries);
    x.middleCols(begin, lengths[k]) = (l * x.middleCols(begin, lengths[k])).eval();
    begin += lengths[k];
  }
  x.array().rowwise() *= mixing(spec).array();
  if (spec.volatilities.size() != 0) x.array().colwise() *= spec.volatilities.array();

  ReturnPanel out;
  out.tickers = spec.tickers.empty() ? default_tickers(n) : spec.tickers;
  if (static_cast<Index>(out.tickers.size()) != n) throw InvalidArgument("ticker list does not match N");
  out.times.reserve(static_cast<std::size_t>(spec.T));
  for (Index t = 0; t < spec.T; ++t) out.times.push_back(std::to_string(t + 1));
  out.returns = std::move(x);
  return out;
}

ReturnPanel sample_panel(const GeneratorSpec& spec) {
  return sample_piecewise_panel(spec, {spec.correlation}, {spec.T});
}

ReturnPanel sample_gaussian_panel(const GeneratorSpec& spec) {
  if (spec.family != Family::gaussian) throw InvalidArgument("spec family is not gaussian");
  return sample_panel(spec);
}

ReturnPanel sample_student_t_panel(const GeneratorSpec& spec) {
  if (spec.family != Family::student_t) throw InvalidArgument("spec family is not student-t");
  return sample_panel(spec);
}

}  // namespace corrstat
