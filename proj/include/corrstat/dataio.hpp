#pragma once

// Price/return panels: CSV ingest and export, price changes, standardization, windowing and
// the synchronous reshuffle control.
//
// Panels store one ticker per row and one time step per column (N x T), so a row is a
// time series and `returns.col(t)` is the cross-section at step t.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "corrstat/types.hpp"

namespace corrstat {

struct PricePanel {
  std::vector<std::string> tickers;
  std::vector<std::string> times;  ///< T+1 labels, kept verbatim
  Eigen::MatrixXd prices;          ///< N x (T+1), all > 0

  Index assets() const noexcept { return prices.rows(); }
  Index steps() const noexcept { return prices.cols(); }
};

struct ReturnPanel {
  std::vector<std::string> tickers;
  std::vector<std::string> times;  ///< T labels
  Eigen::MatrixXd returns;         ///< N x T
  bool standardized = false;
  Scope scope;

  Index assets() const noexcept { return returns.rows(); }
  Index steps() const noexcept { return returns.cols(); }
};

struct WindowPlan {
  Index total = 0;
  Index window_len = 0;
  std::vector<IndexRange> windows;
};

enum class PanelFormat { prices, returns };
enum class ReturnKind { log, simple };

/// Reads a CSV panel. The header is either `date,T1,T2,...` or `T1,T2,...`; a first header
/// cell named date/time/timestamp (any case) marks a label column. Without one, times are
/// the 1-based row numbers. Throws ParseError, DuplicateTicker; for prices also DomainError
/// on a nonpositive cell.
std::variant<PricePanel, ReturnPanel> load_panel(const std::filesystem::path& path,
                                                 PanelFormat format);
PricePanel load_price_panel(const std::filesystem::path& path);
ReturnPanel load_return_panel(const std::filesystem::path& path);

/// Stream parsers behind the file loaders.
PricePanel parse_price_panel(std::istream& in);
ReturnPanel parse_return_panel(std::istream& in);

/// Writes `date,<tickers>` followed by one row per time step (same shape as the input CSV).
void write_panel_csv(std::ostream& out, const ReturnPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const ReturnPanel& panel);

ReturnPanel to_returns(const PricePanel& panel, ReturnKind kind = ReturnKind::log);

/// Population-sd standardization (divide by T). `scope` is global or per_window(T_w); in
/// the per-window case each full window is standardized on its own and a trailing
/// remainder of at least two steps is standardized as one extra segment (a lone trailing
/// step is set to 0). Throws ZeroVariance(ticker, window).
ReturnPanel standardize(const ReturnPanel& panel, Scope scope);

/// Standardizes a single series in place over its whole length.
/// Returns false, leaving the series untouched, when its sd is zero.
bool standardize_series(Eigen::Ref<Eigen::VectorXd> x);

/// Same series permutation for every row. Deterministic in `seed`.
ReturnPanel synchronous_reshuffle(const ReturnPanel& panel, std::uint64_t seed);

/// Column permutation used by synchronous_reshuffle; `perm[k]` is the source column of
/// output column k.
std::vector<Index> reshuffle_permutation(Index steps, std::uint64_t seed);
ReturnPanel apply_permutation(const ReturnPanel& panel, const std::vector<Index>& perm);

/// K = floor(total / window_len) contiguous windows starting at 0; the remainder is
/// dropped. Requires window_len >= 10.
WindowPlan window_slices(Index total, Index window_len);

/// Rows `rows` of `panel`, in the given order.
ReturnPanel select_rows(const ReturnPanel& panel, const std::vector<Index>& rows);

/// `count` distinct rows drawn with `seed`, returned in ascending order. If count >= N all
/// rows are returned.
std::vector<Index> random_subset(Index assets, Index count, std::uint64_t seed);

}  // namespace corrstat
