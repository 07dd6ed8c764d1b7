#include "corrstat/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "corrstat/corrdist.hpp"
#include "corrstat/dataio.hpp"
#include "corrstat/parallel.hpp"
#include "corrstat/portfolio.hpp"
#include "corrstat/spectral.hpp"
#include "corrstat/stationarity.hpp"
#include "corrstat/synthgen.hpp"

namespace corrstat::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// A configuration value that violates a module precondition. Reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what) : std::runtime_error(flag + ": " + what) {}
};

void require(bool ok, const std::string& flag, const std::string& what) {
  if (!ok) throw UsageError(flag, what);
}

struct Common {
  std::size_t threads = 0;
  bool timestamp = false;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json header(const std::string& command, const Common& common, json config) {
  json j;
  j["tool"] = "corrstat";
  j["version"] = kVersion;
  j["command"] = command;
  if (common.timestamp) j["generated_at"] = utc_now();
  j["config"] = std::move(config);
  return j;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

void emit_json(const json& j, const std::string& path, std::ostream& out) { emit(j.dump(2) + "\n", path, out); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ReturnPanel load_input(const std::string& path, const std::string& format) {
  require(!path.empty(), "--input", "an input panel is required");
  require(fs::exists(path), "--input", "file not found: " + path);
  if (format == "prices") return to_returns(load_price_panel(path));
  return load_return_panel(path);
}

std::string dataset_name(const std::string& path) { return fs::path(path).filename().string(); }

std::optional<McControl> parse_mc(const std::string& text, std::uint64_t seed) {
  if (text.empty() || text == "none") return std::nullopt;
  McControl mc;
  mc.seed = seed;
  if (text == "gaussian") {
    mc.family = Family::gaussian;
    return mc;
  }
  const std::string prefix = "student-t";
  require(text.rfind(prefix, 0) == 0, "--mc", "expected none, gaussian or student-t[:nu], got '" + text + "'");
  mc.family = Family::student_t;
  if (text.size() > prefix.size()) {
    require(text[prefix.size()] == ':', "--mc", "expected student-t:nu");
    try {
      mc.nu = std::stod(text.substr(prefix.size() + 1));
    } catch (const std::exception&) {
      throw UsageError("--mc", "cannot read nu from '" + text + "'");
    }
  }
  require(mc.nu >= 3.0, "--mc", "Student-t control needs nu >= 3");
  return mc;
}

json mc_json(const std::optional<McControl>& mc) {
  if (!mc) return nullptr;
  return {{"family", mc->family == Family::gaussian ? "gaussian" : "student-t"},
          {"nu", mc->family == Family::gaussian ? json(nullptr) : json(mc->nu)},
          {"seed", mc->seed}};
}

json truth_json(const TrueCorrelation& t) {
  json j = {{"source", to_string(t.source)}, {"model", t.model}, {"n", t.size()}, {"repaired", t.repaired}};
  if (!std::isnan(t.min_eigenvalue_before)) j["min_eigenvalue_before"] = t.min_eigenvalue_before;
  return j;
}

json control_json(const std::optional<ControlFraction>& c) {
  if (!c) return nullptr;
  return {{"fraction", c->fraction}, {"violations", c->violations}, {"denominator", c->denominator}};
}

json scan_json(const ScanResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cell;
    cell[c.dimension_name] = c.dimension;
    if (c.t1 > 0) cell["T1"] = c.t1;
    cell[c.threshold_name] = c.threshold;
    cell["fraction"] = c.fraction;
    cell["violations"] = c.violations;
    cell["denominator"] = c.denominator;
    cell["control_fractions"] = {{"reshuffle", control_json(c.reshuffle)}, {"mc", control_json(c.mc)}};
    cells.push_back(std::move(cell));
  }
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"panel", s.panel}, {"i", s.i}, {"j", s.j}, {"reason", s.reason}});
  json j;
  j["cells"] = std::move(cells);
  j["skipped"] = std::move(skipped);
  j["mc_truth"] = r.mc_truth ? truth_json(*r.mc_truth) : json(nullptr);
  return j;
}

json range_json(const IndexRange& r) { return {r.begin, r.end()}; }

json band_json(const QBand& b) { return {{"mean", b.mean}, {"sd", b.sd}, {"k", b.k}}; }

// ---------------------------------------------------------------------------------------
// Synthetic fixtures shared by the reproduce recipes.

// First half: `base`; second half: `base` with the leading `block` assets equicorrelated at
// `jump`. Both halves share the innovations of a stationary draw with the same seed.
ReturnPanel jump_panel(Family family, double nu, Index n, Index t, Index block, double jump, std::uint64_t seed) {
  GeneratorSpec g;
  g.family = family;
  g.nu = nu;
  g.T = t;
  g.seed = seed;
  g.correlation = identity_truth(n);
  Eigen::MatrixXd after = Eigen::MatrixXd::Identity(n, n);
  after.topLeftCorner(block, block).setConstant(jump);
  after.diagonal().setOnes();
  const auto second = make_true_correlation(after, TrueCorrelation::Source::model, "block jump");
  return sample_piecewise_panel(g, {g.correlation, second}, {t / 2, t - t / 2});
}

ReturnPanel stationary_panel(Family family, double nu, const TrueCorrelation& truth, Index t, std::uint64_t seed) {
  GeneratorSpec g;
  g.family = family;
  g.nu = nu;
  g.T = t;
  g.seed = seed;
  g.correlation = truth;
  return sample_panel(g);
}

// ---------------------------------------------------------------------------------------

struct DensityOpts {
  double rho_bar = 0.0;
  long t = 0;
  long grid = 2001;
  std::string out;
};

int cmd_density(const DensityOpts& o, std::ostream& out) {
  require(o.t >= CorrParams::kMinT, "--T", "T >= " + std::to_string(CorrParams::kMinT) + " required, got " + std::to_string(o.t));
  require(std::abs(o.rho_bar) <= 1.0 - 1e-12, "--rho-bar", "|rho_bar| < 1 required");
  require(o.grid >= 2, "--grid", "at least 2 grid points required");
  const CorrParams p(o.rho_bar, o.t);
  std::string csv = "rho,density,gaussian_approx\n";
  for (long k = 0; k < o.grid; ++k) {
    const double rho = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(o.grid - 1);
    csv += fmt(rho) + "," + fmt(rho_density(rho, p)) + "," + fmt(gaussian_approx_density(rho, p)) + "\n";
  }
  emit(csv, o.out, out);
  return 0;
}

struct GlobalOpts {
  std::string input, format = "returns", out, mc;
  std::vector<long> windows{25, 50, 100};
  std::vector<double> alphas{0.01, 0.05, 0.10};
  std::optional<std::uint64_t> reshuffle_seed;
  std::uint64_t mc_seed = 42;
};

void check_alphas(const std::vector<double>& alphas) {
  require(!alphas.empty(), "--alpha", "at least one level required");
  for (double a : alphas) require(a > 0.0 && a < 1.0, "--alpha", "levels must lie in (0, 1)");
}

int cmd_global(const GlobalOpts& o, const Common& common, std::ostream& out) {
  require(!o.windows.empty(), "--window", "at least one window length required");
  for (long w : o.windows) require(w >= CorrParams::kMinT, "--window", "window lengths must be >= " + std::to_string(CorrParams::kMinT));
  check_alphas(o.alphas);
  ScanControls controls;
  controls.reshuffle_seed = o.reshuffle_seed;
  controls.mc = parse_mc(o.mc, o.mc_seed);
  const auto panel = load_input(o.input, o.format);
  for (long w : o.windows)
    require(panel.steps() / w >= 5, "--window",
            "T_w = " + std::to_string(w) + " leaves fewer than 5 windows in " + std::to_string(panel.steps()) + " steps");
  const std::vector<Index> windows(o.windows.begin(), o.windows.end());
  const auto result = global_scan(panel, windows, o.alphas, controls, common.threads, dataset_name(o.input));

  json config = {{"input", o.input},         {"format", o.format},
                 {"window", o.windows},      {"alpha", o.alphas},
                 {"reshuffle_seed", o.reshuffle_seed ? json(*o.reshuffle_seed) : json(nullptr)},
                 {"mc", mc_json(controls.mc)}};
  json j = header("global-scan", common, config);
  j["dataset"] = dataset_name(o.input);
  j["params"] = {{"assets", panel.assets()}, {"steps", panel.steps()}, {"pairs", panel.assets() * (panel.assets() - 1) / 2}};
  j.update(scan_json(result));
  emit_json(j, o.out, out);
  return 0;
}

struct LocalOpts {
  std::string input, format = "returns", out, mc, sigma = "window";
  long t1 = 200;
  std::vector<long> taus{50};
  std::vector<int> ns{1, 2, 3, 4, 5};
  std::optional<std::uint64_t> reshuffle_seed;
  std::uint64_t mc_seed = 42;
};

int cmd_local(const LocalOpts& o, const Common& common, std::ostream& out) {
  require(o.t1 >= CorrParams::kMinT, "--t1", "T1 >= " + std::to_string(CorrParams::kMinT) + " required");
  require(!o.taus.empty(), "--tau", "at least one step required");
  for (long t : o.taus) require(t >= 1, "--tau", "tau >= 1 required");
  require(!o.ns.empty(), "--n", "at least one multiplier required");
  for (int n : o.ns) require(n >= 1, "--n", "n >= 1 required");
  require(o.sigma == "window" || o.sigma == "increment", "--sigma", "expected window or increment");
  ScanControls controls;
  controls.reshuffle_seed = o.reshuffle_seed;
  controls.mc = parse_mc(o.mc, o.mc_seed);
  const auto panel = load_input(o.input, o.format);
  for (long t : o.taus)
    require(o.t1 + t <= panel.steps(), "--t1", "T1 + tau exceeds the panel length " + std::to_string(panel.steps()));
  std::vector<LocalConfig> configs;
  for (long t : o.taus) configs.push_back({o.t1, t});
  const auto convention = o.sigma == "increment" ? SigmaConvention::increment : SigmaConvention::window;
  const auto result = local_scan(panel, configs, o.ns, controls, convention, common.threads, dataset_name(o.input));

  json config = {{"input", o.input}, {"format", o.format}, {"t1", o.t1}, {"tau", o.taus}, {"n", o.ns},
                 {"sigma", o.sigma},
                 {"reshuffle_seed", o.reshuffle_seed ? json(*o.reshuffle_seed) : json(nullptr)},
                 {"mc", mc_json(controls.mc)}};
  json j = header("local-scan", common, config);
  j["dataset"] = dataset_name(o.input);
  json estimates = json::array();
  for (long t : o.taus) estimates.push_back({{"tau", t}, {"estimates", (panel.steps() - o.t1) / t + 1}});
  j["params"] = {{"assets", panel.assets()}, {"steps", panel.steps()}, {"estimates_per_pair", estimates}};
  j.update(scan_json(result));
  emit_json(j, o.out, out);
  return 0;
}

struct SimulateOpts {
  std::string family = "gaussian", corr = "identity", out, report;
  double nu = 3.0;
  long n = 10, t = 0;
  std::uint64_t seed = 42, replica = 0;
  bool normalize = false;
};

TrueCorrelation parse_truth(const std::string& text, Index n, std::vector<std::string>* tickers) {
  auto arg = [&](const std::string& prefix) { return text.substr(prefix.size()); };
  try {
    if (text == "identity") return identity_truth(n);
    if (text.rfind("equi:", 0) == 0) {
      const double rho = std::stod(arg("equi:"));
      require(rho > -1.0 / static_cast<double>(n - 1) && rho < 1.0, "--corr", "equicorrelation outside (-1/(N-1), 1)");
      return equicorrelation_truth(n, rho);
    }
    if (text.rfind("one-factor:", 0) == 0) return one_factor_truth(n, std::stoull(arg("one-factor:")));
    if (text.rfind("from:", 0) == 0) {
      const std::string path = arg("from:");
      require(fs::exists(path), "--corr", "file not found: " + path);
      const auto panel = load_return_panel(path);
      if (tickers != nullptr) *tickers = panel.tickers;
      return sample_estimate_as_truth(panel, {0, panel.steps()});
    }
  } catch (const std::invalid_argument&) {
    throw UsageError("--corr", "cannot read '" + text + "'");
  }
  throw UsageError("--corr", "expected identity, equi:RHO, one-factor:SEED or from:PATH, got '" + text + "'");
}

int cmd_simulate(const SimulateOpts& o, const Common& common, std::ostream& out) {
  require(o.t >= 1, "--T", "T >= 1 required");
  require(o.family == "gaussian" || o.family == "student-t", "--family", "expected gaussian or student-t");
  if (o.family == "student-t") require(o.nu >= 3.0, "--nu", "nu >= 3 required");
  require(o.n >= 1, "--N", "N >= 1 required");
  GeneratorSpec g;
  g.family = o.family == "gaussian" ? Family::gaussian : Family::student_t;
  g.nu = o.nu;
  g.T = o.t;
  g.seed = o.seed;
  g.replica = o.replica;
  g.normalize_variance = o.normalize;
  g.correlation = parse_truth(o.corr, o.n, &g.tickers);
  const auto panel = sample_panel(g);
  std::ostringstream csv;
  write_panel_csv(csv, panel);
  emit(csv.str(), o.out, out);
  if (!o.report.empty()) {
    json config = {{"family", o.family}, {"nu", g.family == Family::student_t ? json(o.nu) : json(nullptr)},
                   {"corr", o.corr},     {"N", g.correlation.size()},
                   {"T", o.t},           {"seed", o.seed},
                   {"replica", o.replica}, {"normalize_variance", o.normalize}};
    json j = header("simulate", common, config);
    j["truth"] = truth_json(g.correlation);
    emit_json(j, o.report, out);
  }
  return 0;
}

struct QOpts {
  std::string input, format = "returns", out, band_truth = "identity";
  long n_stocks = 0, t1 = 150, t2 = 150;
  std::uint64_t select_seed = 1, mc_seed = 42;
  long replicas = 100;
  double band_sigmas = 5.0, ridge = 0.0;
  bool unchained = false;
};

int cmd_qscan(const QOpts& o, const Common& common, std::ostream& out) {
  require(o.replicas == 0 || o.replicas >= 30, "--replicas", "0 (no band) or at least 30 replicas required");
  require(o.band_sigmas > 0.0, "--band-sigmas", "must be positive");
  require(o.ridge >= 0.0, "--ridge", "must be nonnegative");
  require(o.band_truth == "identity" || o.band_truth == "sample", "--band-truth", "expected identity or sample");
  auto panel = load_input(o.input, o.format);
  require(o.n_stocks >= 0 && o.n_stocks <= panel.assets(), "--n-stocks",
          "must lie in [1, " + std::to_string(panel.assets()) + "] (0 keeps all)");
  std::vector<Index> rows;
  if (o.n_stocks > 0 && o.n_stocks < panel.assets()) {
    rows = random_subset(panel.assets(), o.n_stocks, o.select_seed);
    panel = select_rows(panel, rows);
  }
  const Index n = panel.assets();
  require(o.t1 > n, "--t1", "T1 > N required (N = " + std::to_string(n) + ")");
  require(o.t2 > n, "--t2", "T2 > N required (N = " + std::to_string(n) + ")");
  QConfig cfg;
  cfg.t1 = o.t1;
  cfg.t2 = o.t2;
  cfg.chained = !o.unchained;
  cfg.optimizer.ridge = o.ridge;
  auto series = q_series(panel, cfg);

  json band = nullptr;
  std::optional<TrueCorrelation> truth;
  if (o.replicas > 0) {
    truth = o.band_truth == "identity" ? identity_truth(n) : sample_estimate_as_truth(panel, {0, panel.steps()});
    McBandSpec spec;
    spec.n = n;
    spec.t1 = o.t1;
    spec.t2 = o.t2;
    spec.replicas = static_cast<std::size_t>(o.replicas);
    spec.seed = o.mc_seed;
    spec.k = o.band_sigmas;
    const auto b = mc_band(spec, *truth, {}, common.threads);
    for (auto& e : series) e.band = b;
    band = band_json(b);
  }

  json config = {{"input", o.input},
                 {"format", o.format},
                 {"n_stocks", n},
                 {"select_seed", o.select_seed},
                 {"t1", o.t1},
                 {"t2", o.t2},
                 {"chained", cfg.chained},
                 {"replicas", o.replicas},
                 {"mc_seed", o.mc_seed},
                 {"band_sigmas", o.band_sigmas},
                 {"band_truth", o.band_truth},
                 {"ridge", o.ridge}};
  json j = header("qscan", common, config);
  j["dataset"] = dataset_name(o.input);
  json tickers = panel.tickers;
  j["tickers"] = tickers;
  j["band"] = band;
  if (truth) j["band_truth"] = truth_json(*truth);
  json samples = json::array();
  for (const auto& e : series) {
    json s = {{"sample", e.sample},
              {"in_sample", range_json(e.in_sample)},
              {"out_of_sample", range_json(e.out_of_sample)},
              {"sigma_E", e.sigma_e},
              {"sigma_R", e.sigma_r},
              {"q", e.q}};
    if (e.band) {
      s["band"] = band_json(*e.band);
      s["violation"] = e.q > e.band->upper();
    }
    samples.push_back(std::move(s));
  }
  j["samples"] = std::move(samples);
  emit_json(j, o.out, out);
  return 0;
}

struct SpectralOpts {
  std::string input, format = "returns", out;
  long window = 150, sectors = 3, n_stocks = 0;
  std::uint64_t select_seed = 1;
  double theta_market = 0.0, theta_sector = 0.0, theta_ipr = 0.0;
};

int cmd_spectral(const SpectralOpts& o, const Common& common, std::ostream& out) {
  require(o.window >= CorrParams::kMinT, "--window", "window >= " + std::to_string(CorrParams::kMinT) + " required");
  require(o.sectors >= 0, "--sectors", "must be nonnegative");
  require(o.theta_market >= 0.0, "--theta-market", "must be >= 0");
  require(o.theta_sector <= 0.0, "--theta-sector", "must be <= 0");
  require(o.theta_ipr <= 0.0, "--theta-ipr", "must be <= 0");
  auto panel = load_input(o.input, o.format);
  require(o.n_stocks >= 0 && o.n_stocks <= panel.assets(), "--n-stocks", "exceeds the panel width");
  if (o.n_stocks > 0 && o.n_stocks < panel.assets())
    panel = select_rows(panel, random_subset(panel.assets(), o.n_stocks, o.select_seed));
  require(panel.assets() > o.sectors + 1, "--sectors", "N > S + 1 required (N = " + std::to_string(panel.assets()) + ")");
  require(o.window <= panel.steps(), "--window", "longer than the panel");
  const auto plan = window_slices(panel.steps(), o.window);

  std::vector<SpectralSnapshot> snaps(plan.windows.size());
  parallel_for(snaps.size(), common.threads, [&](std::size_t k) {
    snaps[k] = spectral_snapshot(corr_matrix(panel, plan.windows[k]).entries, o.sectors, static_cast<Index>(k));
  });

  const CoOccurrenceThresholds th{o.theta_market, o.theta_sector, o.theta_ipr};
  json config = {{"input", o.input},           {"format", o.format},
                 {"window", o.window},         {"sectors", o.sectors},
                 {"n_stocks", panel.assets()}, {"select_seed", o.select_seed},
                 {"theta", {{"market", th.market}, {"sector", th.sector}, {"ipr", th.ipr}}}};
  json j = header("spectral", common, config);
  j["dataset"] = dataset_name(o.input);
  json js = json::array();
  for (std::size_t k = 0; k < snaps.size(); ++k)
    js.push_back({{"window", snaps[k].window_id},
                  {"range", range_json(plan.windows[k])},
                  {"lambda_market", snaps[k].lambda_market},
                  {"lambda_sector", snaps[k].lambda_sector},
                  {"ipr_market", snaps[k].ipr_market},
                  {"ipr_unstable", snaps[k].ipr_unstable}});
  json jd = json::array();
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const auto d = spectral_delta(snaps[k], snaps[k + 1]);
    // Window k is the in-sample window of q sample k when T1 = T2 = window.
    jd.push_back({{"sample", k},
                  {"from_window", k},
                  {"to_window", k + 1},
                  {"d_market", d.d_market},
                  {"d_sector", d.d_sector},
                  {"d_ipr", d.d_ipr ? json(*d.d_ipr) : json(nullptr)},
                  {"co_occurrence", co_occurrence_flag(d, th)}});
  }
  j["snapshots"] = std::move(js);
  j["deltas"] = std::move(jd);
  emit_json(j, o.out, out);
  return 0;
}

// ---------------------------------------------------------------------------------------
// reproduce

struct ReproduceOpts {
  std::string recipe, input, format = "returns", out_dir = ".";
  std::uint64_t seed = 42;
};

std::string out_path(const ReproduceOpts& o, const std::string& name) { return (fs::path(o.out_dir) / name).string(); }

int recipe_fig1(const ReproduceOpts& o, const Common& common, std::ostream& out) {
  constexpr double kRhoBar = 0.2;
  constexpr long kGrid = 2001;
  const CorrParams p50(kRhoBar, 50), p150(kRhoBar, 150);
  std::string csv = "rho,density_T50,gaussian_T50,density_T150,gaussian_T150\n";
  double peak = 0.0, gap = 0.0;
  for (long k = 0; k < kGrid; ++k) {
    const double rho = -1.0 + 2.0 * static_cast<double>(k) / (kGrid - 1);
    const double d50 = rho_density(rho, p50), g50 = gaussian_approx_density(rho, p50);
    peak = std::max(peak, d50);
    gap = std::max(gap, std::abs(d50 - g50));
    csv += fmt(rho) + "," + fmt(d50) + "," + fmt(g50) + "," + fmt(rho_density(rho, p150)) + "," +
           fmt(gaussian_approx_density(rho, p150)) + "\n";
  }
  emit(csv, out_path(o, "fig1.csv"), out);
  const auto m50 = rho_numerical_moments(p50), m150 = rho_numerical_moments(p150);
  json j = header("reproduce", common, {{"recipe", "fig1"}, {"rho_bar", kRhoBar}, {"T", {50, 150}}, {"grid", kGrid}});
  j["comparison"] = {{"sup_gap_T50", gap},
                     {"peak_T50", peak},
                     {"sup_gap_over_peak_T50", gap / peak},
                     {"variance_T50", m50.variance},
                     {"variance_T150", m150.variance},
                     {"narrower_at_T150", m150.variance < m50.variance}};
  j["series"] = "fig1.csv";
  emit_json(j, out_path(o, "fig1.json"), out);
  return 0;
}

int recipe_table1(const ReproduceOpts& o, const Common& common, std::ostream& out) {
  const std::vector<Index> windows{25, 50, 100};
  const std::vector<double> alphas{0.01, 0.05, 0.10};
  json j = header("reproduce", common,
                  {{"recipe", "table1"}, {"seed", o.seed}, {"window", windows}, {"alpha", alphas},
                   {"input", o.input.empty() ? json(nullptr) : json(o.input)}});
  ScanControls controls;
  controls.reshuffle_seed = o.seed;
  if (!o.input.empty()) {
    // User panel: data rows plus reshuffle and Student-t MC controls.
    const auto panel = load_input(o.input, o.format);
    controls.mc = McControl{Family::student_t, 3.0, o.seed};
    j["data"] = scan_json(global_scan(panel, windows, alphas, controls, common.threads, dataset_name(o.input)));
  } else {
    constexpr Index kN = 50, kT = 1750, kBlock = 10;
    const auto truth = one_factor_truth(kN, o.seed);
    const auto mc = stationary_panel(Family::student_t, 3.0, truth, kT, o.seed);
    j["mc_control"] = {{"panel", {{"family", "student-t"}, {"nu", 3.0}, {"N", kN}, {"T", kT}}},
                       {"truth", truth_json(truth)}};
    j["mc_control"].update(scan_json(global_scan(mc, windows, alphas, controls, common.threads, "mc-control")));
    const auto jumped = select_rows(jump_panel(Family::student_t, 3.0, kN, kT, kBlock, 0.6, o.seed),
                                    [] {
                                      std::vector<Index> r(kBlock);
                                      for (Index i = 0; i < kBlock; ++i) r[static_cast<std::size_t>(i)] = i;
                                      return r;
                                    }());
    j["jump"] = {{"panel", {{"family", "student-t"}, {"nu", 3.0}, {"affected_assets", kBlock}, {"T", kT},
                            {"jump", 0.6}, {"at", kT / 2}}}};
    j["jump"].update(scan_json(global_scan(jumped, windows, alphas, {}, common.threads, "jump")));
  }
  emit_json(j, out_path(o, "table1.json"), out);
  return 0;
}

int recipe_table2(const ReproduceOpts& o, const Common& common, std::ostream& out) {
  const std::vector<int> ns{1, 2, 3, 4, 5};
  const std::vector<LocalConfig> configs{{200, 50}, {200, 100}, {250, 250}};
  json jc = json::array();
  for (const auto& c : configs) jc.push_back({{"T1", c.t1}, {"tau", c.tau}});
  json j = header("reproduce", common,
                  {{"recipe", "table2"}, {"seed", o.seed}, {"configs", jc}, {"n", ns},
                   {"input", o.input.empty() ? json(nullptr) : json(o.input)}});
  ReturnPanel panel;
  if (!o.input.empty()) {
    panel = load_input(o.input, o.format);
  } else {
    constexpr Index kN = 50, kT = 1758;
    const auto truth = one_factor_truth(kN, o.seed);
    panel = stationary_panel(Family::gaussian, 0.0, truth, kT, o.seed);
    j["panel"] = {{"family", "gaussian"}, {"N", kN}, {"T", kT}, {"truth", truth_json(truth)}};
  }
  json counts = json::array();
  for (const auto& c : configs)
    counts.push_back({{"T", panel.steps()}, {"T1", c.t1}, {"tau", c.tau}, {"estimates", (panel.steps() - c.t1) / c.tau + 1}});
  j["window_counts"] = std::move(counts);
  j.update(scan_json(local_scan(panel, configs, ns, {}, SigmaConvention::window, common.threads,
                                o.input.empty() ? "stationary-gaussian" : dataset_name(o.input))));
  emit_json(j, out_path(o, "table2.json"), out);
  return 0;
}

int recipe_fig3(const ReproduceOpts& o, const Common& common, std::ostream& out) {
  constexpr Index kN = 80, kT2 = 150;
  json j = header("reproduce", common, {{"recipe", "fig3-bands"}, {"seed", o.seed}, {"N", kN}, {"replicas", 100}});
  // Estimated truth: the full-sample estimate of a synthetic one-factor panel.
  const auto source = stationary_panel(Family::gaussian, 0.0, one_factor_truth(kN, o.seed), 1758, o.seed);
  const auto estimated = sample_estimate_as_truth(source, {0, source.steps()});
  const auto identity = identity_truth(kN);
  McBandSpec spec;
  spec.n = kN;
  spec.seed = o.seed;
  const QBand bi = mc_band(spec, identity, {}, common.threads);
  const QBand be = mc_band(spec, estimated, {}, common.threads);
  const double pooled = std::sqrt(0.5 * (bi.sd * bi.sd + be.sd * be.sd));
  j["bands"] = {{"identity", band_json(bi)}, {"estimated", band_json(be)}};
  j["estimated_truth"] = truth_json(estimated);
  j["center_gap_in_pooled_sd"] = std::abs(bi.mean - be.mean) / pooled;
  json trend = json::array();
  for (Index t1 : {100, 150, 200}) {
    McBandSpec s = spec;
    s.t1 = t1;
    s.t2 = kT2;
    trend.push_back({{"T1", t1}, {"T2", kT2}, {"band", band_json(mc_band(s, identity, {}, common.threads))}});
  }
  j["t1_trend"] = std::move(trend);
  emit_json(j, out_path(o, "fig3-bands.json"), out);
  return 0;
}

int cmd_reproduce(const ReproduceOpts& o, const Common& common, std::ostream& out) {
  require(o.input.empty() || fs::exists(o.input), "--input", "fixture not found: " + o.input);
  require(o.input.empty() || o.recipe == "table1" || o.recipe == "table2", "--input",
          "only table1 and table2 accept a user panel");
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  require(fs::is_directory(o.out_dir), "--out-dir", "cannot create " + o.out_dir);
  if (o.recipe == "fig1") return recipe_fig1(o, common, out);
  if (o.recipe == "table1") return recipe_table1(o, common, out);
  if (o.recipe == "table2") return recipe_table2(o, common, out);
  if (o.recipe == "fig3-bands") return recipe_fig3(o, common, out);
  throw UsageError("recipe", "unknown recipe '" + o.recipe + "' (expected table1, table2, fig1 or fig3-bands)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"corrstat: correlation stationarity and portfolio risk diagnostics", "corrstat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Common common;
  long threads = 0;
  app.add_option("--threads", threads, "worker cap (default: CORRSTAT_THREADS, else all cores)")->envname("CORRSTAT_THREADS");
  app.add_flag("--timestamp", common.timestamp, "add generated_at to JSON reports");

  DensityOpts dens;
  auto* density = app.add_subcommand("density", "exact density of the sample correlation as CSV");
  density->add_option("--rho-bar", dens.rho_bar, "true correlation")->required();
  density->add_option("--T", dens.t, "sample length")->required();
  density->add_option("--grid", dens.grid, "grid points on [-1, 1]");
  density->add_option("--out", dens.out, "output file (default stdout)");

  GlobalOpts glob;
  auto* global = app.add_subcommand("global-scan", "KS test of windowed correlations for every pair");
  global->add_option("--input", glob.input, "return panel CSV")->required();
  global->add_option("--format", glob.format)->check(CLI::IsMember({"returns", "prices"}));
  global->add_option("--window", glob.windows, "window lengths")->delimiter(',');
  global->add_option("--alpha", glob.alphas, "significance levels")->delimiter(',');
  global->add_option("--reshuffle-seed", glob.reshuffle_seed, "add a synchronous-reshuffle control");
  global->add_option("--mc", glob.mc, "add an MC control: gaussian or student-t[:nu]");
  global->add_option("--mc-seed", glob.mc_seed);
  global->add_option("--out", glob.out);

  LocalOpts loc;
  auto* local = app.add_subcommand("local-scan", "expanding-window n-sigma test for every pair");
  local->add_option("--input", loc.input, "return panel CSV")->required();
  local->add_option("--format", loc.format)->check(CLI::IsMember({"returns", "prices"}));
  local->add_option("--t1", loc.t1, "initial window");
  local->add_option("--tau", loc.taus, "steps between estimates")->delimiter(',');
  local->add_option("--n", loc.ns, "sigma multipliers")->delimiter(',');
  local->add_option("--sigma", loc.sigma, "window: 1/sqrt(L); increment: 1/sqrt(k tau)");
  local->add_option("--reshuffle-seed", loc.reshuffle_seed);
  local->add_option("--mc", loc.mc);
  local->add_option("--mc-seed", loc.mc_seed);
  local->add_option("--out", loc.out);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic return panel");
  simulate->add_option("--family", sim.family, "gaussian or student-t");
  simulate->add_option("--nu", sim.nu);
  simulate->add_option("--corr", sim.corr, "identity, equi:RHO, one-factor:SEED or from:PATH");
  simulate->add_option("--N", sim.n, "assets (ignored with from:)");
  simulate->add_option("--T", sim.t)->required();
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--replica", sim.replica);
  simulate->add_flag("--normalize-variance", sim.normalize);
  simulate->add_option("--out", sim.out);
  simulate->add_option("--report", sim.report, "also write a JSON description of the run");

  QOpts qo;
  auto* qscan = app.add_subcommand("qscan", "realized / in-sample risk of minimum-variance portfolios");
  qscan->add_option("--input", qo.input)->required();
  qscan->add_option("--format", qo.format)->check(CLI::IsMember({"returns", "prices"}));
  qscan->add_option("--n-stocks", qo.n_stocks, "random subset size (0 keeps all)");
  qscan->add_option("--select-seed", qo.select_seed);
  qscan->add_option("--t1", qo.t1);
  qscan->add_option("--t2", qo.t2);
  qscan->add_flag("--unchained", qo.unchained, "disjoint T1+T2 blocks");
  qscan->add_option("--replicas", qo.replicas, "MC band replicas (0: no band)");
  qscan->add_option("--mc-seed", qo.mc_seed);
  qscan->add_option("--band-sigmas", qo.band_sigmas);
  qscan->add_option("--band-truth", qo.band_truth, "identity or sample");
  qscan->add_option("--ridge", qo.ridge);
  qscan->add_option("--out", qo.out);

  SpectralOpts so;
  auto* spectral = app.add_subcommand("spectral", "eigenvalue diagnostics per window");
  spectral->add_option("--input", so.input)->required();
  spectral->add_option("--format", so.format)->check(CLI::IsMember({"returns", "prices"}));
  spectral->add_option("--window", so.window);
  spectral->add_option("--sectors", so.sectors);
  spectral->add_option("--n-stocks", so.n_stocks);
  spectral->add_option("--select-seed", so.select_seed);
  spectral->add_option("--theta-market", so.theta_market);
  spectral->add_option("--theta-sector", so.theta_sector);
  spectral->add_option("--theta-ipr", so.theta_ipr);
  spectral->add_option("--out", so.out);

  ReproduceOpts ro;
  auto* reproduce = app.add_subcommand("reproduce", "desk-scale analogues of the reference experiments");
  reproduce->add_option("recipe", ro.recipe, "table1, table2, fig1 or fig3-bands")->required();
  reproduce->add_option("--input", ro.input, "user panel (table1, table2)");
  reproduce->add_option("--format", ro.format)->check(CLI::IsMember({"returns", "prices"}));
  reproduce->add_option("--out-dir", ro.out_dir);
  reproduce->add_option("--seed", ro.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (threads < 0) {
    err << "error: --threads: must be nonnegative\n";
    return 2;
  }
  common.threads = static_cast<std::size_t>(threads);

  try {
    if (*density) return cmd_density(dens, out);
    if (*global) return cmd_global(glob, common, out);
    if (*local) return cmd_local(loc, common, out);
    if (*simulate) return cmd_simulate(sim, common, out);
    if (*qscan) return cmd_qscan(qo, common, out);
    if (*spectral) return cmd_spectral(so, common, out);
    if (*reproduce) return cmd_reproduce(ro, common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace corrstat::cli
