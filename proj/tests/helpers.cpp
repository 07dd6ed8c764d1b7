#include "helpers.hpp"

#include <random>

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

Eigen::MatrixXd random_spd(Eigen::Index n, unsigned long long seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, seed ^ 0x9e37ULL));
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = u(rng);
  Eigen::MatrixXd c = q * d.asDiagonal() * q.transpose();
  return 0.5 * (c + c.transpose());
}
