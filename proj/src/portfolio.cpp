#include "corrstat/portfolio.hpp"

#include <cmath>

#include "corrstat/parallel.hpp"

namespace corrstat {

CovarianceMatrix covariance_matrix(const ReturnPanel& panel, IndexRange range) {
  if (range.begin < 0 || range.end() > panel.steps() || range.length < 2)
    throw InvalidArgument("covariance range " + range.str() + " is invalid for a panel of length " +
                          std::to_string(panel.steps()));
  const Eigen::MatrixXd x = panel.returns.middleCols(range.begin, range.length);
  const Eigen::MatrixXd centred = x.colwise() - x.rowwise().mean();
  CovarianceMatrix out;
  out.tickers = panel.tickers;
  out.window = range;
  out.entries = centred * centred.transpose() / static_cast<double>(range.length);
  out.entries = (0.5 * (out.entries + out.entries.transpose())).eval();
  for (Index i = 0; i < out.size(); ++i)
    if (!(out.entries(i, i) > 0.0)) throw ZeroVariance(panel.tickers[static_cast<std::size_t>(i)], range.str());
  return out;
}

WeightVector min_variance_weights(const CovarianceMatrix& c, const MinVarianceOptions& opts) {
  if (c.window.length <= c.size()) throw IllPosed(c.size(), c.window.length);
  return {c.tickers, min_variance_weights(c.entries, opts)};
}

Eigen::VectorXd portfolio_pnl(const WeightVector& w, const ReturnPanel& panel, IndexRange range) {
  if (w.w.size() != panel.assets()) throw InvalidArgument("weight vector does not match the panel");
  if (range.begin < 0 || range.end() > panel.steps()) throw InvalidArgument("range outside the panel");
  return panel.returns.middleCols(range.begin, range.length).transpose() * w.w;
}

std::vector<std::pair<IndexRange, IndexRange>> q_windows(Index total, const QConfig& cfg) {
  std::vector<std::pair<IndexRange, IndexRange>> out;
  if (cfg.t1 < 1 || cfg.t2 < 1) throw InvalidArgument("T1 and T2 must be positive");
  if (cfg.chained) {
    const Index start = cfg.first_out_start == 0 ? cfg.t1 : cfg.first_out_start;
    if (start < cfg.t1) throw InvalidArgument("first out-of-sample window leaves no room for T1");
    for (Index b = start; b + cfg.t2 <= total; b += cfg.t2)
      out.push_back({{b - cfg.t1, cfg.t1}, {b, cfg.t2}});
  } else {
    for (Index b = 0; b + cfg.t1 + cfg.t2 <= total; b += cfg.t1 + cfg.t2)
      out.push_back({{b, cfg.t1}, {b + cfg.t1, cfg.t2}});
  }
  return out;
}

std::vector<QExperiment> q_series(const ReturnPanel& panel, const QConfig& cfg) {
  const Index n = panel.assets();
  if (cfg.t1 <= n) throw IllPosed(n, cfg.t1);
  if (cfg.t2 <= n) throw IllPosed(n, cfg.t2);
  const auto windows = q_windows(panel.steps(), cfg);
  if (windows.empty())
    throw InsufficientData("panel of length " + std::to_string(panel.steps()) + " holds no (T1, T2) window pair");
  std::vector<QExperiment> out;
  out.reserve(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& [in, next] = windows[k];
    const auto c1 = covariance_matrix(panel, in);
    const auto c2 = covariance_matrix(panel, next);
    const auto w = min_variance_weights(c1, cfg.optimizer);
    QExperiment e;
    e.sample = k;
    e.in_sample = in;
    e.out_of_sample = next;
    e.sigma_e = std::sqrt(portfolio_variance(c1.entries, w.w));
    e.sigma_r = std::sqrt(portfolio_variance(c2.entries, w.w));
    if (!(e.sigma_e > 0.0)) throw DomainError("in-sample risk is zero");
    e.q = e.sigma_r / e.sigma_e;
    if (cfg.true_covariance) e.sigma_t = std::sqrt(min_variance(*cfg.true_covariance));
    out.push_back(e);
  }
  return out;
}

QBand mc_band(const McBandSpec& spec, const TrueCorrelation& truth, const Eigen::VectorXd& volatilities,
              std::size_t threads, std::vector<double>* samples) {
  if (spec.replicas < 30) throw InvalidArgument("MC band needs at least 30 replicas");
  if (truth.size() != spec.n) throw InvalidArgument("truth size does not match N");
  if (spec.t1 <= spec.n) throw IllPosed(spec.n, spec.t1);
  if (spec.t2 <= spec.n) throw IllPosed(spec.n, spec.t2);
  std::vector<double> q(spec.replicas);
  QConfig cfg;
  cfg.t1 = spec.t1;
  cfg.t2 = spec.t2;
  cfg.chained = false;
  parallel_for(spec.replicas, threads, [&](std::size_t r) {
    GeneratorSpec g;
    g.family = Family::gaussian;
    g.T = spec.t1 + spec.t2;
    g.seed = spec.seed;
    g.replica = r;
    g.correlation = truth;
    g.volatilities = volatilities;
    q[r] = q_series(sample_panel(g), cfg).front().q;
  });
  double sum = 0.0;
  for (double v : q) sum += v;
  const double mean = sum / static_cast<double>(q.size());
  double ss = 0.0;
  for (double v : q) ss += (v - mean) * (v - mean);
  if (samples != nullptr) *samples = q;
  return {mean, std::sqrt(ss / static_cast<double>(q.size() - 1)), spec.k};
}

std::vector<bool> flag_band_violations(const std::vector<double>& q, const QBand& band) {
  std::vector<bool> out;
  out.reserve(q.size());
  for (double v : q) out.push_back(v > band.upper());
  return out;
}

std::vector<bool> flag_band_violations(const std::vector<QExperiment>& series, const QBand& band) {
  std::vector<double> q;
  q.reserve(series.size());
  for (const auto& e : series) q.push_back(e.q);
  return flag_band_violations(q, band);
}

}  // namespace corrstat
