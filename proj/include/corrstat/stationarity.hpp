#pragma once

// Stationarity tests on pairwise correlations.
//
// Global test: Pearson estimates over K non-overlapping windows of length T_w are compared
// with the exact Gaussian-null law of the sample correlation by a Kolmogorov-Smirnov test,
// using as true correlation the estimate over the union of the windows.
//
// Local test: estimates over expanding prefixes T1, T1 + tau, ... must stay within
// n * sigma of their predecessor.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrstat/corrdist.hpp"
#include "corrstat/dataio.hpp"
#include "corrstat/error.hpp"
#include "corrstat/synthgen.hpp"

namespace corrstat {

/// One-sample KS distance D = max_i max(i/K - F(x_(i)), F(x_(i)) - (i-1)/K).
/// `sorted` must be ascending with at least 5 entries (InsufficientSamples otherwise).
template <class Cdf>
double ks_statistic(std::span<const double> sorted, Cdf&& cdf) {
  const std::size_t k = sorted.size();
  if (k < 5) throw InsufficientSamples("KS test needs at least 5 samples, got " + std::to_string(k));
  for (std::size_t i = 1; i < k; ++i)
    if (sorted[i] < sorted[i - 1]) throw InvalidArgument("ks_statistic: samples are not sorted");
  const double kk = static_cast<double>(k);
  double d = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / kk - f, f - static_cast<double>(i) / kk});
  }
  return std::min(d, 1.0);
}

/// Kolmogorov tail probability Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

/// Asymptotic p-value with the finite-K correction lambda = D (sqrt K + 0.12 + 0.11/sqrt K).
/// Values below 1e-12 are reported as 0.
double ks_pvalue(double d, std::size_t k);

struct RejectFlag {
  double alpha;
  bool reject;
};

struct GlobalTestResult {
  Index i = 0, j = 0;
  Index window_len = 0;
  std::vector<double> samples;  ///< window estimates, window order
  double rho_bar_hat = 0.0;     ///< estimate over the union of the windows
  double rho_bar_used = 0.0;    ///< value the null was tabulated at (after cache rounding)
  double d = 0.0;
  double p = 1.0;
  bool degenerate = false;      ///< |rho_bar_hat| == 1: no continuous null exists, rejected
  std::vector<RejectFlag> reject_at;
};

/// KS test of one pair. Window estimates are per-window standardized Pearson coefficients.
/// Requires at least 5 windows. With `cache` the null is tabulated at rho_bar_hat rounded
/// to the cache resolution; without it, at rho_bar_hat exactly.
GlobalTestResult global_test(const ReturnPanel& panel, Index i, Index j, Index window_len,
                             std::span<const double> alphas, RhoCdfCache* cache = nullptr);

struct McControl {
  Family family = Family::student_t;
  double nu = 3.0;
  std::uint64_t seed = 42;
};

struct ScanControls {
  std::optional<std::uint64_t> reshuffle_seed;
  std::optional<McControl> mc;
};

struct ControlFraction {
  double fraction = 0.0;
  std::size_t violations = 0;
  std::size_t denominator = 0;
};

/// One cell of a scan table: a window length (or tau) crossed with an alpha (or n).
struct ScanReport {
  std::string dataset;
  std::string dimension_name;  ///< "T_w" or "tau"
  Index dimension = 0;
  Index t1 = 0;                ///< local scans: initial window
  std::string threshold_name;  ///< "alpha" or "n"
  double threshold = 0.0;
  double fraction = 0.0;
  std::size_t violations = 0;
  std::size_t denominator = 0;  ///< pairs (global) or estimate steps (local)
  std::optional<ControlFraction> reshuffle;
  std::optional<ControlFraction> mc;
};

struct PairFailure {
  std::string panel;  ///< "data", "reshuffle" or "mc"
  Index i = 0, j = 0;
  std::string reason;
};

struct ScanResult {
  std::vector<ScanReport> cells;
  std::vector<PairFailure> skipped;
  std::optional<TrueCorrelation> mc_truth;  ///< truth the MC control was drawn from
};

/// Fraction of pairs rejecting the global test for every (T_w, alpha). Pairs are mapped in
/// parallel and aggregated in (i, j) order, so the result does not depend on `threads`.
/// Failing pairs are skipped and listed.
ScanResult global_scan(const ReturnPanel& panel, std::span<const Index> window_lens,
                       std::span<const double> alphas, const ScanControls& controls = {},
                       std::size_t threads = 0, const std::string& dataset = "panel");

struct CumulativeEstimate {
  Index length;
  double rho;
};

/// Pearson rho over the prefixes of length T1, T1 + tau, ... of the pair, computed on the
/// globally standardized rows.
/// floor((T - T1) / tau) + 1 estimates.
std::vector<CumulativeEstimate> cumulative_corr(const ReturnPanel& panel, Index i, Index j, Index t1,
                                                Index tau);

/// sigma of the earlier estimate: window -> 1/sqrt(L_k); increment -> 1/sqrt(k tau), k 1-based.
enum class SigmaConvention { window, increment };

struct LocalTestResult {
  std::size_t violations = 0;
  std::vector<bool> flags;  ///< one per consecutive step

  std::size_t steps() const noexcept { return flags.size(); }
};

/// Flags step k -> k+1 when |rho_{k+1} - rho_k| > n sigma_k.
LocalTestResult local_test(std::span<const CumulativeEstimate> estimates, int n,
                           SigmaConvention convention = SigmaConvention::window, Index tau = 0);

struct LocalConfig {
  Index t1;
  Index tau;
};

/// Pooled fraction of violating steps over all pairs for every (tau, n).
ScanResult local_scan(const ReturnPanel& panel, std::span<const LocalConfig> configs,
                      std::span<const int> n_values, const ScanControls& controls = {},
                      SigmaConvention convention = SigmaConvention::window, std::size_t threads = 0,
                      const std::string& dataset = "panel");

/// Student-t or Gaussian panel of the same shape as `panel` whose truth is the full-sample
/// correlation of `panel`.
ReturnPanel mc_control_panel(const ReturnPanel& panel, const McControl& mc, TrueCorrelation* truth = nullptr);

}  // namespace corrstat
