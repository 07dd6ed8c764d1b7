#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <utility>
#include <vector>

namespace corrstat {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;      ///< sum of per-panel |Kronrod - Gauss| estimates
  int intervals = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// 7-point Gauss-Legendre weights on the odd Kronrod abscissae.
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[static_cast<std::size_t>(j)];
    const double fsum = f(c - dx) + f(c + dx);
    kronrod += kWgk[static_cast<std::size_t>(j)] * fsum;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * fsum;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive 15-point Gauss-Kronrod over the panels delimited by `breaks`
/// (sorted, at least two points). The panel with the largest error estimate is bisected
/// until the summed estimate drops below max(abs_tol, rel_tol * |value|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, const std::vector<double>& breaks, double rel_tol,
                                    double abs_tol = 0.0, int max_intervals = 4000) {
  std::priority_queue<detail::Panel> heap;
  QuadratureResult out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!(breaks[k + 1] > breaks[k])) continue;
    auto p = detail::gauss_kronrod15(f, breaks[k], breaks[k + 1]);
    out.value += p.value;
    out.error += p.error;
    heap.push(p);
  }
  out.intervals = static_cast<int>(heap.size());
  while (out.error > std::max(abs_tol, rel_tol * std::abs(out.value))) {
    if (out.intervals >= max_intervals || heap.empty()) return out;
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) return out;
    auto left = detail::gauss_kronrod15(f, worst.a, mid);
    auto right = detail::gauss_kronrod15(f, mid, worst.b);
    out.value += left.value + right.value - worst.value;
    out.error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++out.intervals;
  }
  // Re-sum to shed the drift accumulated by the incremental updates.
  double value = 0.0, error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  out.converged = true;
  return out;
}

template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                                    int max_intervals = 4000) {
  return integrate_adaptive(std::forward<F>(f), std::vector<double>{a, b}, rel_tol, abs_tol,
                            max_intervals);
}

}  // namespace corrstat
