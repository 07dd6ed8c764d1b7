#pragma once

#include <string>

#include <Eigen/Dense>

#include "corrstat/dataio.hpp"

inline corrstat::ReturnPanel make_panel(const Eigen::MatrixXd& r) {
  corrstat::ReturnPanel p;
  for (Eigen::Index i = 0; i < r.rows(); ++i) p.tickers.push_back("A" + std::to_string(i));
  for (Eigen::Index t = 0; t < r.cols(); ++t) p.times.push_back(std::to_string(t + 1));
  p.returns = r;
  return p;
}

// Deterministic standard-normal matrix for tests that just need "some data".
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, unsigned long long seed);

// Random symmetric positive-definite matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(Eigen::Index n, unsigned long long seed, double lo = 0.1, double hi = 3.0);
