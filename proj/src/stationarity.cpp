#include "corrstat/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "corrstat/parallel.hpp"

namespace corrstat {

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kPi = std::numbers::pi;
  if (lambda < 1.18) {
    // Dual (Jacobi theta) form of the same function; converges fast for small lambda.
    const double c = -kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int j = 1; j < 100; ++j) {
      const double odd = 2.0 * j - 1.0;
      const double term = std::exp(c * odd * odd);
      sum += term;
      if (term < 1e-16 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * kPi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j < 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t k) {
  if (k < 5) throw InsufficientSamples("KS p-value needs K >= 5");
  if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("KS distance must lie in [0, 1]");
  const double sk = std::sqrt(static_cast<double>(k));
  const double p = kolmogorov_q(d * (sk + 0.12 + 0.11 / sk));
  return p < 1e-12 ? 0.0 : p;
}

GlobalTestResult global_test(const ReturnPanel& panel, Index i, Index j, Index window_len,
                             std::span<const double> alphas, RhoCdfCache* cache) {
  const auto plan = window_slices(panel.steps(), window_len);
  if (plan.windows.size() < 5)
    throw InsufficientData("global test needs at least 5 windows of " + std::to_string(window_len));
  GlobalTestResult r;
  r.i = i;
  r.j = j;
  r.window_len = window_len;
  const auto x = panel.returns.row(i);
  const auto y = panel.returns.row(j);
  auto checked_pearson = [&](IndexRange w) {
    try {
      return pearson(x.segment(w.begin, w.length), y.segment(w.begin, w.length));
    } catch (const ZeroVariance& e) {
      const auto who = e.ticker() == "x" ? i : j;
      throw ZeroVariance(panel.tickers[static_cast<std::size_t>(who)], w.str());
    }
  };
  r.samples.reserve(plan.windows.size());
  for (const auto& w : plan.windows) r.samples.push_back(checked_pearson(w));
  r.rho_bar_hat = checked_pearson({0, static_cast<Index>(plan.windows.size()) * window_len});

  std::vector<double> sorted = r.samples;
  std::sort(sorted.begin(), sorted.end());
  if (std::abs(r.rho_bar_hat) > 1.0 - 1e-9) {
    r.degenerate = true;
    r.rho_bar_used = r.rho_bar_hat;
    r.d = 1.0;
    r.p = 0.0;
  } else if (cache != nullptr) {
    const auto table = cache->get(r.rho_bar_hat, window_len);
    r.rho_bar_used = table->params().rho_bar();
    r.d = ks_statistic(sorted, [&](double v) { return table->cdf(v); });
    r.p = ks_pvalue(r.d, sorted.size());
  } else {
    const CorrParams params(r.rho_bar_hat, window_len);
    r.rho_bar_used = r.rho_bar_hat;
    r.d = ks_statistic(sorted, [&](double v) { return rho_cdf(v, params); });
    r.p = ks_pvalue(r.d, sorted.size());
  }
  for (double a : alphas) r.reject_at.push_back({a, r.degenerate || r.p < a});
  return r;
}

ReturnPanel mc_control_panel(const ReturnPanel& panel, const McControl& mc, TrueCorrelation* truth) {
  GeneratorSpec spec;
  spec.family = mc.family;
  spec.nu = mc.nu;
  spec.T = panel.steps();
  spec.seed = mc.seed;
  spec.correlation = sample_estimate_as_truth(panel, {0, panel.steps()});
  spec.tickers = panel.tickers;
  auto out = sample_panel(spec);
  out.times = panel.times;
  if (truth != nullptr) *truth = spec.correlation;
  return out;
}

namespace {

std::vector<std::pair<Index, Index>> all_pairs(Index n) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

struct CellCounts {
  std::size_t violations = 0;
  std::size_t denominator = 0;
};

// counts[d][t]: d indexes the dimension (T_w or config), t the threshold.
using CountTable = std::vector<std::vector<CellCounts>>;

CountTable global_counts(const ReturnPanel& panel, const std::string& label,
                         std::span<const Index> window_lens, std::span<const double> alphas,
                         RhoCdfCache& cache, std::size_t threads, std::vector<PairFailure>& skipped) {
  const auto pairs = all_pairs(panel.assets());
  struct PairOutcome {
    std::vector<std::optional<std::vector<bool>>> rejects;  // per window length
    std::vector<std::string> errors;
  };
  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    auto& out = outcomes[k];
    out.rejects.resize(window_lens.size());
    out.errors.resize(window_lens.size());
    for (std::size_t w = 0; w < window_lens.size(); ++w) {
      try {
        const auto r = global_test(panel, pairs[k].first, pairs[k].second, window_lens[w], alphas, &cache);
        std::vector<bool> flags;
        for (const auto& f : r.reject_at) flags.push_back(f.reject);
        out.rejects[w] = std::move(flags);
      } catch (const Error& e) {
        out.errors[w] = "T_w=" + std::to_string(window_lens[w]) + ": " + e.what();
      }
    }
  });

  CountTable counts(window_lens.size(), std::vector<CellCounts>(alphas.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (std::size_t w = 0; w < window_lens.size(); ++w) {
      const auto& rej = outcomes[k].rejects[w];
      if (!rej) {
        skipped.push_back({label, pairs[k].first, pairs[k].second, outcomes[k].errors[w]});
        continue;
      }
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        counts[w][a].denominator += 1;
        counts[w][a].violations += (*rej)[a] ? 1 : 0;
      }
    }
  }
  return counts;
}

double fraction_of(const CellCounts& c) {
  return c.denominator == 0 ? 0.0 : static_cast<double>(c.violations) / static_cast<double>(c.denominator);
}

ControlFraction control_of(const CellCounts& c) { return {fraction_of(c), c.violations, c.denominator}; }

}  // namespace

ScanResult global_scan(const ReturnPanel& panel, std::span<const Index> window_lens,
                       std::span<const double> alphas, const ScanControls& controls,
                       std::size_t threads, const std::string& dataset) {
  if (panel.assets() < 2) throw InsufficientData("global scan needs at least two series");
  for (Index w : window_lens) {
    if (panel.steps() / std::max<Index>(w, 1) < 5)
      throw InsufficientData("T_w=" + std::to_string(w) + " leaves fewer than 5 windows");
    (void)window_slices(panel.steps(), w);
  }
  RhoCdfCache cache(1e-4);
  ScanResult result;
  const auto data = global_counts(panel, "data", window_lens, alphas, cache, threads, result.skipped);
  std::optional<CountTable> reshuffled, mc;
  if (controls.reshuffle_seed) {
    reshuffled = global_counts(synchronous_reshuffle(panel, *controls.reshuffle_seed), "reshuffle",
                               window_lens, alphas, cache, threads, result.skipped);
  }
  if (controls.mc) {
    TrueCorrelation truth;
    const auto synth = mc_control_panel(panel, *controls.mc, &truth);
    result.mc_truth = std::move(truth);
    mc = global_counts(synth, "mc", window_lens, alphas, cache, threads, result.skipped);
  }
  for (std::size_t w = 0; w < window_lens.size(); ++w) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      ScanReport cell;
      cell.dataset = dataset;
      cell.dimension_name = "T_w";
      cell.dimension = window_lens[w];
      cell.threshold_name = "alpha";
      cell.threshold = alphas[a];
      cell.fraction = fraction_of(data[w][a]);
      cell.violations = data[w][a].violations;
      cell.denominator = data[w][a].denominator;
      if (reshuffled) cell.reshuffle = control_of((*reshuffled)[w][a]);
      if (mc) cell.mc = control_of((*mc)[w][a]);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

namespace {

void check_local_config(Index total, Index t1, Index tau) {
  if (t1 < 10) throw InvalidArgument("T1 must be >= 10");
  if (tau < 1) throw InvalidArgument("tau must be >= 1");
  if (total < t1 + tau)
    throw InsufficientData("expanding-window test needs T >= T1 + tau (" + std::to_string(t1 + tau) +
                           "), got " + std::to_string(total));
}

template <class X, class Y>
std::vector<CumulativeEstimate> cumulative_standardized(const X& x, const Y& y, Index t1, Index tau) {
  const Index total = x.size();
  check_local_config(total, t1, tau);
  const Index count = (total - t1) / tau + 1;
  std::vector<CumulativeEstimate> out;
  out.reserve(static_cast<std::size_t>(count));
  // Running sums; each prefix estimate is a full Pearson coefficient over that prefix.
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  Index t = 0;
  for (Index k = 0; k < count; ++k) {
    const Index len = t1 + k * tau;
    for (; t < len; ++t) {
      sx += x(t);
      sy += y(t);
      sxx += x(t) * x(t);
      syy += y(t) * y(t);
      sxy += x(t) * y(t);
    }
    const double n = static_cast<double>(len);
    const double cxx = sxx - sx * sx / n, cyy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    if (!(cxx > 0.0 && cyy > 0.0)) throw ZeroVariance("prefix", IndexRange{0, len}.str());
    out.push_back({len, std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0)});
  }
  return out;
}

}  // namespace

std::vector<CumulativeEstimate> cumulative_corr(const ReturnPanel& panel, Index i, Index j, Index t1,
                                                Index tau) {
  check_local_config(panel.steps(), t1, tau);
  if (panel.standardized && panel.scope.kind == Scope::Kind::global)
    return cumulative_standardized(panel.returns.row(i), panel.returns.row(j), t1, tau);
  Eigen::VectorXd x = panel.returns.row(i).transpose();
  Eigen::VectorXd y = panel.returns.row(j).transpose();
  if (!standardize_series(x)) throw ZeroVariance(panel.tickers[static_cast<std::size_t>(i)], "");
  if (!standardize_series(y)) throw ZeroVariance(panel.tickers[static_cast<std::size_t>(j)], "");
  return cumulative_standardized(x, y, t1, tau);
}

LocalTestResult local_test(std::span<const CumulativeEstimate> estimates, int n, SigmaConvention convention,
                           Index tau) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (convention == SigmaConvention::increment && tau < 1)
    throw InvalidArgument("the increment sigma convention needs tau");
  LocalTestResult r;
  if (estimates.size() < 2) return r;
  r.flags.reserve(estimates.size() - 1);
  for (std::size_t k = 0; k + 1 < estimates.size(); ++k) {
    const double scale = convention == SigmaConvention::window
                             ? static_cast<double>(estimates[k].length)
                             : static_cast<double>((k + 1) * static_cast<std::size_t>(tau));
    const double sigma = 1.0 / std::sqrt(scale);
    const bool v = std::abs(estimates[k + 1].rho - estimates[k].rho) > n * sigma;
    r.flags.push_back(v);
    r.violations += v ? 1 : 0;
  }
  return r;
}

namespace {

CountTable local_counts(const ReturnPanel& panel, const std::string& label,
                        std::span<const LocalConfig> configs, std::span<const int> n_values,
                        SigmaConvention convention, std::size_t threads, std::vector<PairFailure>& skipped) {
  const Index n = panel.assets();
  Eigen::MatrixXd z = panel.returns;
  std::vector<bool> ok(static_cast<std::size_t>(n), true);
  if (!(panel.standardized && panel.scope.kind == Scope::Kind::global)) {
    for (Index i = 0; i < n; ++i) {
      Eigen::VectorXd row = z.row(i).transpose();
      ok[static_cast<std::size_t>(i)] = standardize_series(row);
      z.row(i) = row.transpose();
    }
  }
  const auto pairs = all_pairs(n);
  // per pair, per config, per n: (violations, steps)
  std::vector<std::vector<std::vector<CellCounts>>> outcomes(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    if (!ok[static_cast<std::size_t>(i)] || !ok[static_cast<std::size_t>(j)]) return;
    auto& out = outcomes[k];
    out.resize(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const auto est = cumulative_standardized(z.row(i), z.row(j), configs[c].t1, configs[c].tau);
      for (int nv : n_values) {
        const auto r = local_test(est, nv, convention, configs[c].tau);
        out[c].push_back({r.violations, r.steps()});
      }
    }
  });
  CountTable counts(configs.size(), std::vector<CellCounts>(n_values.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (outcomes[k].empty()) {
      const auto [i, j] = pairs[k];
      const auto bad = ok[static_cast<std::size_t>(i)] ? j : i;
      skipped.push_back({label, i, j, "zero variance: " + panel.tickers[static_cast<std::size_t>(bad)]});
      continue;
    }
    for (std::size_t c = 0; c < configs.size(); ++c)
      for (std::size_t m = 0; m < n_values.size(); ++m) {
        counts[c][m].violations += outcomes[k][c][m].violations;
        counts[c][m].denominator += outcomes[k][c][m].denominator;
      }
  }
  return counts;
}

}  // namespace

ScanResult local_scan(const ReturnPanel& panel, std::span<const LocalConfig> configs,
                      std::span<const int> n_values, const ScanControls& controls,
                      SigmaConvention convention, std::size_t threads, const std::string& dataset) {
  if (panel.assets() < 2) throw InsufficientData("local scan needs at least two series");
  for (const auto& c : configs) check_local_config(panel.steps(), c.t1, c.tau);
  for (int nv : n_values)
    if (nv < 1) throw InvalidArgument("n must be >= 1");
  ScanResult result;
  const auto data = local_counts(panel, "data", configs, n_values, convention, threads, result.skipped);
  std::optional<CountTable> reshuffled, mc;
  if (controls.reshuffle_seed) {
    reshuffled = local_counts(synchronous_reshuffle(panel, *controls.reshuffle_seed), "reshuffle", configs,
                              n_values, convention, threads, result.skipped);
  }
  if (controls.mc) {
    TrueCorrelation truth;
    const auto synth = mc_control_panel(panel, *controls.mc, &truth);
    result.mc_truth = std::move(truth);
    mc = local_counts(synth, "mc", configs, n_values, convention, threads, result.skipped);
  }
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t m = 0; m < n_values.size(); ++m) {
      ScanReport cell;
      cell.dataset = dataset;
      cell.dimension_name = "tau";
      cell.dimension = configs[c].tau;
      cell.t1 = configs[c].t1;
      cell.threshold_name = "n";
      cell.threshold = n_values[m];
      cell.fraction = fraction_of(data[c][m]);
      cell.violations = data[c][m].violations;
      cell.denominator = data[c][m].denominator;
      if (reshuffled) cell.reshuffle = control_of((*reshuffled)[c][m]);
      if (mc) cell.mc = control_of((*mc)[c][m]);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace corrstat
