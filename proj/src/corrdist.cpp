#include "corrstat/corrdist.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "corrstat/quadrature.hpp"

namespace corrstat {
namespace {

// log(1 - x^2) without cancellation near |x| = 1.
double log_one_minus_sq(double x) { return std::log1p(-x) + std::log1p(x); }

// Breakpoints in r for int_0^inf (1 + 2 sinh^2(r/2) / (1-a))^-(T-1) dr. The integrand has
// a Gaussian core of width sqrt((1-a)/(T-1)) at r = 0 and an exp(-(T-1) r) tail.
std::vector<double> r_breaks(double one_minus_a, double tm1) {
  const double width = std::sqrt(one_minus_a / tm1);
  std::vector<double> r{0.0};
  for (double x = 0.5 * width;; x *= 2.0) {
    r.push_back(x);
    const double s = std::sinh(0.5 * x);
    if (-tm1 * std::log1p(2.0 * s * s / one_minus_a) < -745.0 || x > 60.0) break;
  }
  return r;
}

// log int_0^inf dr (cosh r - a)^-(T-1), integrated in u = exp(-r).
double log_cosh_integral(double a, Index T) {
  const double tm1 = static_cast<double>(T - 1);
  const double one_minus_a = 1.0 - a;
  auto scaled = [&](double u) {
    if (!(u > 0.0)) return 0.0;
    const double d = 1.0 - u;
    const double lg = -std::log(u) - tm1 * std::log1p(d * d / (2.0 * u * one_minus_a));
    return std::exp(lg);
  };
  const auto r = r_breaks(one_minus_a, tm1);
  std::vector<double> u;
  u.reserve(r.size() + 1);
  u.push_back(0.0);
  for (auto it = r.rbegin(); it != r.rend(); ++it) u.push_back(std::exp(-*it));
  const auto q = integrate_adaptive(scaled, u, 1e-11, 0.0, 2000);
  if (!q.converged || !(q.value > 0.0)) {
    throw NumericsError("quadrature of the correlation density did not converge",
                        q.value > 0.0 ? q.error / q.value : q.error);
  }
  return std::log(q.value) - tm1 * std::log(one_minus_a);
}

}  // namespace

CorrelationMatrix corr_matrix(const ReturnPanel& panel, IndexRange range) {
  if (range.begin < 0 || range.end() > panel.steps())
    throw InvalidArgument("range " + range.str() + " outside panel of length " +
                          std::to_string(panel.steps()));
  if (range.length < 10) throw InsufficientData("correlation window must hold >= 10 observations");
  const Index n = panel.assets();
  Eigen::MatrixXd z = panel.returns.middleCols(range.begin, range.length);
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = z.row(i).transpose();
    if (!standardize_series(row)) throw ZeroVariance(panel.tickers[static_cast<std::size_t>(i)], range.str());
    z.row(i) = row.transpose();
  }
  CorrelationMatrix out;
  out.tickers = panel.tickers;
  out.window = range;
  out.scope = panel.standardized ? panel.scope : Scope::none();
  out.entries = (z * z.transpose()) / static_cast<double>(range.length);
  for (Index i = 0; i < n; ++i) {
    out.entries(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      const double v = std::clamp(0.5 * (out.entries(i, j) + out.entries(j, i)), -1.0, 1.0);
      out.entries(i, j) = v;
      out.entries(j, i) = v;
    }
  }
  return out;
}

CorrelationMatrix corr_matrix(const ReturnPanel& panel) {
  return corr_matrix(panel, {0, panel.steps()});
}

CorrParams::CorrParams(double rho_bar, Index T) : rho_bar_(rho_bar), T_(T) {
  if (!(std::abs(rho_bar) <= 1.0 - 1e-12))
    throw InvalidArgument("rho_bar must lie strictly inside (-1, 1), got " + std::to_string(rho_bar));
  if (T < kMinT)
    throw InvalidArgument("T must be >= " + std::to_string(kMinT) + ", got " + std::to_string(T));
}

double log_rho_density(double rho, const CorrParams& params) {
  if (!(std::abs(rho) < 1.0)) return -std::numeric_limits<double>::infinity();
  const double t = static_cast<double>(params.T());
  const double rb = params.rho_bar();
  return std::log(t - 2.0) - std::log(std::numbers::pi) + 0.5 * (t - 4.0) * log_one_minus_sq(rho) +
         0.5 * (t - 1.0) * log_one_minus_sq(rb) + log_cosh_integral(rho * rb, params.T());
}

double rho_density(double rho, const CorrParams& params) {
  return std::exp(log_rho_density(rho, params));
}

RhoMoments rho_moments(const CorrParams& params) {
  const double rb = params.rho_bar();
  const double t = static_cast<double>(params.T());
  const double one_minus = 1.0 - rb * rb;
  return {rb - rb * one_minus / (2.0 * t), one_minus * one_minus / t * (1.0 + 11.0 * rb * rb / (2.0 * t)),
          rb, one_minus / std::sqrt(t)};
}

double gaussian_approx_density(double rho, const CorrParams& params) {
  const auto m = rho_moments(params);
  const double z = (rho - m.m_p) / m.sigma_p;
  return std::exp(-0.5 * z * z) / (m.sigma_p * std::sqrt(2.0 * std::numbers::pi));
}

NumericalMoments rho_numerical_moments(const CorrParams& params) {
  const double rb = params.rho_bar();
  const double s = rho_moments(params).sigma_p;
  std::vector<double> breaks{-1.0};
  for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
    const double x = rb + k * s;
    if (x > breaks.back() && x < 1.0) breaks.push_back(x);
  }
  breaks.push_back(1.0);
  auto moment = [&](int power) {
    auto f = [&](double r) { return std::pow(r, power) * rho_density(r, params); };
    const auto q = integrate_adaptive(f, breaks, 1e-12, 1e-15);
    if (!q.converged) throw NumericsError("moment quadrature did not converge", q.error);
    return q.value;
  };
  const double m0 = moment(0);
  const double m1 = moment(1) / m0;
  auto centred = [&](double r) { return (r - m1) * (r - m1) * rho_density(r, params); };
  const auto q2 = integrate_adaptive(centred, breaks, 1e-12, 1e-15);
  if (!q2.converged) throw NumericsError("variance quadrature did not converge", q2.error);
  return {m0, m1, q2.value / m0};
}

RhoCdfTable::RhoCdfTable(const CorrParams& params, Index cells)
    : params_(params), h_(2.0 / static_cast<double>(cells)) {
  if (cells < 2) throw InvalidArgument("CDF grid needs at least two cells");
  const auto m = static_cast<std::size_t>(cells);
  // Nodes and midpoints interleaved: sample k sits at -1 + k h / 2.
  std::vector<double> f(2 * m + 1, 0.0);
  auto x_of = [&](std::size_t k) { return -1.0 + 0.5 * h_ * static_cast<double>(k); };

  // The density is unimodal around rho_bar: walk outwards from there and stop once it has
  // fallen far below the running peak.
  const auto start = static_cast<std::size_t>(
      std::clamp<double>(std::round((params.rho_bar() + 1.0) / (0.5 * h_)), 1.0, static_cast<double>(2 * m - 1)));
  double peak = 0.0;
  for (std::size_t k = start; k < 2 * m; ++k) {
    f[k] = rho_density(x_of(k), params);
    peak = std::max(peak, f[k]);
    if (k > start && f[k] < 1e-20 * peak && f[k] <= f[k - 1]) break;
  }
  for (std::size_t k = start; k-- > 1;) {
    f[k] = rho_density(x_of(k), params);
    peak = std::max(peak, f[k]);
    if (f[k] < 1e-20 * peak && f[k] <= f[k + 1]) break;
  }

  density_.resize(m + 1);
  cdf_.resize(m + 1);
  cdf_[0] = 0.0;
  for (std::size_t c = 0; c <= m; ++c) density_[c] = f[2 * c];
  for (std::size_t c = 0; c < m; ++c)
    cdf_[c + 1] = cdf_[c] + h_ / 6.0 * (f[2 * c] + 4.0 * f[2 * c + 1] + f[2 * c + 2]);
}

double RhoCdfTable::cdf(double rho) const {
  if (!(rho > -1.0)) return 0.0;
  if (rho >= 1.0) return std::min(1.0, cdf_.back());
  const double s = (rho + 1.0) / h_;
  const auto c = std::min(static_cast<std::size_t>(s), cdf_.size() - 2);
  const double t = s - static_cast<double>(c);
  const double t2 = t * t, t3 = t2 * t;
  // Fritsch-Carlson limiter: slopes scaled into the monotone region of this cell.
  const double secant = (cdf_[c + 1] - cdf_[c]) / h_;
  double m0 = 0.0, m1 = 0.0;
  if (secant > 0.0) {
    m0 = density_[c];
    m1 = density_[c + 1];
    const double a = m0 / secant, b = m1 / secant;
    if (a * a + b * b > 9.0) {
      const double k = 3.0 / std::sqrt(a * a + b * b);
      m0 *= k;
      m1 *= k;
    }
  }
  // Increment form: adding a small monotone delta to cdf_[c] cannot round backwards.
  const double delta = h_ * (secant * (3 * t2 - 2 * t3) + m0 * (t3 - 2 * t2 + t) + m1 * (t3 - t2));
  const double v = cdf_[c] + std::max(0.0, delta);
  return std::clamp(std::clamp(v, cdf_[c], cdf_[c + 1]), 0.0, 1.0);
}

double RhoCdfTable::quantile(double p) const {
  if (p <= 0.0) return -1.0;
  if (p >= std::min(1.0, cdf_.back())) return 1.0;
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
  const auto c = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cdf_.begin())) - 1;
  double lo = -1.0 + h_ * static_cast<double>(c);
  double hi = lo + h_;
  for (int k = 0; k < 80 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) >= p ? hi : lo) = mid;
  }
  return hi;
}

double RhoCdfCache::rounded(double rho_bar) const {
  if (resolution_ <= 0.0) return rho_bar;
  const double r = std::round(rho_bar / resolution_) * resolution_;
  return std::clamp(r, -1.0 + 1e-12, 1.0 - 1e-12);
}

std::shared_ptr<const RhoCdfTable> RhoCdfCache::get(double rho_bar, Index T) {
  const double used = rounded(rho_bar);
  const std::int64_t key = resolution_ > 0.0 ? std::llround(used / resolution_)
                                              : std::bit_cast<std::int64_t>(used);
  {
    std::lock_guard lock(mutex_);
    auto it = tables_.find({T, key});
    if (it != tables_.end()) return it->second;
  }
  // Built outside the lock; a concurrent duplicate build yields an identical table.
  auto table = std::make_shared<const RhoCdfTable>(CorrParams(used, T));
  std::lock_guard lock(mutex_);
  return tables_.try_emplace({T, key}, std::move(table)).first->second;
}

std::size_t RhoCdfCache::size() const {
  std::lock_guard lock(mutex_);
  return tables_.size();
}

namespace {
RhoCdfCache& exact_cache() {
  static RhoCdfCache cache(0.0);
  return cache;
}
}  // namespace

double rho_cdf(double rho, const CorrParams& params) {
  return exact_cache().get(params.rho_bar(), params.T())->cdf(rho);
}

double rho_quantile(double p, const CorrParams& params) {
  return exact_cache().get(params.rho_bar(), params.T())->quantile(p);
}

}  // namespace corrstat
