#include "corrstat/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "corrstat/error.hpp"
#include "corrstat/random.hpp"

namespace corrstat {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool is_label_header(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s == "date" || s == "time" || s == "timestamp";
}

struct RawTable {
  std::vector<std::string> tickers;
  std::vector<std::string> times;
  Eigen::MatrixXd values;  // N x rows
};

RawTable parse_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(lineno == 0 ? 1 : lineno, 1, "missing header row");

  const bool has_labels = is_label_header(header.front());
  const std::size_t first = has_labels ? 1 : 0;
  RawTable table;
  std::unordered_set<std::string> seen;
  for (std::size_t c = first; c < header.size(); ++c) {
    if (header[c].empty()) throw ParseError(lineno, c + 1, "empty ticker name");
    if (!seen.insert(header[c]).second) throw DuplicateTicker(header[c]);
    table.tickers.push_back(header[c]);
  }
  if (table.tickers.empty()) throw ParseError(lineno, 1, "header has no ticker columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(lineno, std::min(cells.size(), header.size()) + 1,
                       "expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
    }
    std::vector<double> row(table.tickers.size());
    for (std::size_t c = first; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty()) throw ParseError(lineno, c + 1, "missing value");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(lineno, c + 1, "non-numeric value '" + cell + "'");
      }
      row[c - first] = v;
    }
    table.times.push_back(has_labels ? cells.front() : std::to_string(rows.size() + 1));
    rows.push_back(std::move(row));
  }

  table.values.resize(static_cast<Index>(table.tickers.size()), static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < table.tickers.size(); ++i)
      table.values(static_cast<Index>(i), static_cast<Index>(t)) = rows[t][i];
  return table;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

PricePanel parse_price_panel(std::istream& in) {
  RawTable t = parse_table(in);
  for (Index i = 0; i < t.values.rows(); ++i)
    for (Index j = 0; j < t.values.cols(); ++j)
      if (!(t.values(i, j) > 0.0))
        throw DomainError("nonpositive price for " + t.tickers[static_cast<std::size_t>(i)] +
                          " at " + t.times[static_cast<std::size_t>(j)]);
  return {std::move(t.tickers), std::move(t.times), std::move(t.values)};
}

ReturnPanel parse_return_panel(std::istream& in) {
  RawTable t = parse_table(in);
  return {std::move(t.tickers), std::move(t.times), std::move(t.values), false, Scope::none()};
}

PricePanel load_price_panel(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_price_panel(in);
}

ReturnPanel load_return_panel(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_return_panel(in);
}

std::variant<PricePanel, ReturnPanel> load_panel(const std::filesystem::path& path,
                                                 PanelFormat format) {
  if (format == PanelFormat::prices) return load_price_panel(path);
  return load_return_panel(path);
}

void write_panel_csv(std::ostream& out, const ReturnPanel& panel) {
  out << "date";
  for (const auto& t : panel.tickers) out << ',' << t;
  out << '\n';
  out << std::setprecision(17);
  for (Index t = 0; t < panel.steps(); ++t) {
    out << panel.times[static_cast<std::size_t>(t)];
    for (Index i = 0; i < panel.assets(); ++i) out << ',' << panel.returns(i, t);
    out << '\n';
  }
}

void write_panel_csv(const std::filesystem::path& path, const ReturnPanel& panel) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_panel_csv(out, panel);
}

ReturnPanel to_returns(const PricePanel& panel, ReturnKind kind) {
  if (panel.steps() < 2) throw InsufficientData("need at least two price rows");
  const Index n = panel.assets();
  const Index t = panel.steps() - 1;
  ReturnPanel out;
  out.tickers = panel.tickers;
  out.times.assign(panel.times.begin() + 1, panel.times.end());
  out.returns.resize(n, t);
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < t; ++s) {
      const double p0 = panel.prices(i, s);
      const double p1 = panel.prices(i, s + 1);
      if (kind == ReturnKind::log) {
        if (!(p0 > 0.0) || !(p1 > 0.0))
          throw DomainError("log return of nonpositive price for " +
                            panel.tickers[static_cast<std::size_t>(i)]);
        out.returns(i, s) = std::log(p1 / p0);
      } else {
        if (p0 == 0.0)
          throw DomainError("simple return from zero price for " +
                            panel.tickers[static_cast<std::size_t>(i)]);
        out.returns(i, s) = (p1 - p0) / p0;
      }
    }
  }
  return out;
}

bool standardize_series(Eigen::Ref<Eigen::VectorXd> x) {
  const double len = static_cast<double>(x.size());
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / len;
  const double sd = std::sqrt(var);
  // sd relative to the magnitude of the data; exact constants land here.
  if (!(sd > 1e-14 * std::max(std::abs(mean), x.cwiseAbs().maxCoeff())) || sd == 0.0) return false;
  x = (x.array() - mean) / sd;
  return true;
}

ReturnPanel standardize(const ReturnPanel& panel, Scope scope) {
  ReturnPanel out = panel;
  const Index t = panel.steps();
  std::vector<IndexRange> segments;
  if (scope.kind == Scope::Kind::per_window) {
    if (scope.window_len < 2) throw InvalidArgument("per-window standardization needs T_w >= 2");
    Index b = 0;
    for (; b + scope.window_len <= t; b += scope.window_len) segments.push_back({b, scope.window_len});
    if (t - b >= 2) segments.push_back({b, t - b});
    else if (t - b == 1) out.returns.col(b).setZero();
  } else {
    scope = Scope::global();
    segments.push_back({0, t});
  }
  if (t < 2) throw InsufficientData("need at least two observations to standardize");

  for (Index i = 0; i < out.assets(); ++i) {
    for (const auto& seg : segments) {
      Eigen::VectorXd row = out.returns.row(i).segment(seg.begin, seg.length).transpose();
      if (!standardize_series(row))
        throw ZeroVariance(out.tickers[static_cast<std::size_t>(i)],
                           scope.kind == Scope::Kind::global ? std::string() : seg.str());
      out.returns.row(i).segment(seg.begin, seg.length) = row.transpose();
    }
  }
  out.standardized = true;
  out.scope = scope;
  return out;
}

std::vector<Index> reshuffle_permutation(Index steps, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(steps));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto rng = make_engine(seed, 0, 0x5245u);
  // Explicit Fisher-Yates so the permutation does not depend on the library's shuffle.
  for (std::size_t k = perm.size(); k > 1; --k) {
    const std::uint64_t j = rng() % k;
    std::swap(perm[k - 1], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

ReturnPanel apply_permutation(const ReturnPanel& panel, const std::vector<Index>& perm) {
  if (static_cast<Index>(perm.size()) != panel.steps())
    throw InvalidArgument("permutation length does not match the panel");
  ReturnPanel out = panel;
  for (Index k = 0; k < panel.steps(); ++k) {
    const Index src = perm[static_cast<std::size_t>(k)];
    out.returns.col(k) = panel.returns.col(src);
    out.times[static_cast<std::size_t>(k)] = panel.times[static_cast<std::size_t>(src)];
  }
  return out;
}

ReturnPanel synchronous_reshuffle(const ReturnPanel& panel, std::uint64_t seed) {
  return apply_permutation(panel, reshuffle_permutation(panel.steps(), seed));
}

WindowPlan window_slices(Index total, Index window_len) {
  if (window_len < 10) throw InvalidArgument("window length must be >= 10");
  if (window_len > total)
    throw InsufficientData("window length " + std::to_string(window_len) + " exceeds " +
                           std::to_string(total) + " observations");
  WindowPlan plan{total, window_len, {}};
  const Index k = total / window_len;
  plan.windows.reserve(static_cast<std::size_t>(k));
  for (Index w = 0; w < k; ++w) plan.windows.push_back({w * window_len, window_len});
  return plan;
}

ReturnPanel select_rows(const ReturnPanel& panel, const std::vector<Index>& rows) {
  ReturnPanel out;
  out.times = panel.times;
  out.standardized = panel.standardized;
  out.scope = panel.scope;
  out.returns.resize(static_cast<Index>(rows.size()), panel.steps());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= panel.assets()) throw InvalidArgument("row index out of range");
    out.tickers.push_back(panel.tickers[static_cast<std::size_t>(r)]);
    out.returns.row(static_cast<Index>(k)) = panel.returns.row(r);
  }
  return out;
}

std::vector<Index> random_subset(Index assets, Index count, std::uint64_t seed) {
  std::vector<Index> all(static_cast<std::size_t>(assets));
  std::iota(all.begin(), all.end(), Index{0});
  if (count >= assets) return all;
  auto rng = make_engine(seed, 0, 0x53454cu);
  for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
    const std::uint64_t j = k + rng() % (all.size() - k);
    std::swap(all[k], all[static_cast<std::size_t>(j)]);
  }
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace corrstat
