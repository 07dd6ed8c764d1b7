#pragma once

// Reference implementations used only by the tests. None of them shares code with the
// library: different formulas, different algorithms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Gauss hypergeometric 2F1(a, b; c; z) by its power series, |z| < 1.
inline double hyp2f1(double a, double b, double c, double z) {
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 100000; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Density of the sample correlation in its hypergeometric form (n = T observations).
inline double rho_density(double r, double rho, int n) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double nn = n;
  const double log_c = std::log(nn - 2.0) + std::lgamma(nn - 1.0) - 0.5 * std::log(2.0 * std::numbers::pi) -
                       std::lgamma(nn - 0.5);
  const double log_body = 0.5 * (nn - 1.0) * std::log1p(-rho * rho) + 0.5 * (nn - 4.0) * std::log1p(-r * r) -
                          (nn - 1.5) * std::log1p(-rho * r);
  return std::exp(log_c + log_body) * hyp2f1(0.5, 0.5, nn - 0.5, 0.5 * (1.0 + rho * r));
}

// Composite Simpson on [a, b] with `m` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Cyclic Jacobi eigenvalue iteration. Returns ascending eigenvalues; columns of `vectors`.
inline Eigen::VectorXd jacobi_eigen(Eigen::MatrixXd a, Eigen::MatrixXd* vectors = nullptr) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
  Eigen::VectorXd w(n);
  Eigen::MatrixXd vs(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    w(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    vs.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  if (vectors != nullptr) *vectors = vs;
  return w;
}

// Budget-constrained minimum of w^T C w by exact pairwise transfers: moving t from asset j
// to asset i keeps sum w = 1, and the optimal t along e_i - e_j is closed form.
inline Eigen::VectorXd brute_min_variance(const Eigen::MatrixXd& c) {
  const Eigen::Index n = c.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Eigen::VectorXd g = c * w;
        const double curv = c(i, i) + c(j, j) - 2.0 * c(i, j);
        const double t = -(g(i) - g(j)) / curv;
        w(i) += t;
        w(j) -= t;
        moved = std::max(moved, std::abs(t));
      }
    }
    if (moved < 1e-15) break;
  }
  return w;
}

// sup_x |F_K(x) - F(x)| by scanning each sample point and its left limit.
inline double ks_dense(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double k = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    const auto below = std::lower_bound(x.begin(), x.end(), x[i]) - x.begin();
    const auto upto = std::upper_bound(x.begin(), x.end(), x[i]) - x.begin();
    d = std::max({d, std::abs(static_cast<double>(upto) / k - f), std::abs(static_cast<double>(below) / k - f)});
  }
  return d;
}

}  // namespace oracle
