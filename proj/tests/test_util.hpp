#pragma once

#include <cmath>
#include <random>

#include "sfcca/spd.hpp"

namespace sfcca::testing {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = z(rng);
  }
  return a;
}

inline SymMatrix random_sym(Eigen::Index m, std::mt19937_64& rng, double scale = 1.0) {
  const Matrix a = gaussian_matrix(m, m, rng);
  return SymMatrix::symmetrized(scale * 0.5 * (a + a.transpose()));
}

/// Well-conditioned SPD matrix A A^T / m + I/2.
inline SPDMatrix random_spd(Eigen::Index m, std::mt19937_64& rng) {
  const Matrix a = gaussian_matrix(m, m, rng);
  const Matrix s = a * a.transpose() / static_cast<double>(m) + 0.5 * Matrix::Identity(m, m);
  return SPDMatrix(0.5 * (s + s.transpose()));
}

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace sfcca::testing
