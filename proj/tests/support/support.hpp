#pragma once

#include <cmath>
#include <random>

#include "cyclolms/linalg.hpp"

namespace cyclolms::test {

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

inline CVector random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

/// Well-conditioned Hermitian positive definite matrix with trace ~ scale * m.
inline CMatrix random_covariance(Eigen::Index m, std::mt19937_64& rng, double scale = 1.0) {
  const CMatrix g = random_matrix(m, m, rng);
  CMatrix c = g * g.adjoint() / static_cast<double>(m) + 0.3 * CMatrix::Identity(m, m);
  c = (0.5 * (c + c.adjoint())).eval();
  return scale * c / (c.trace().real() / static_cast<double>(m));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace cyclolms::test
