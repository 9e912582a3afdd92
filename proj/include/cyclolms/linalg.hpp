#pragma once

// Dense complex kernels shared by the whole analysis: Kronecker products,
// column-major vec/unvec, weighted norms, eigen-analysis and ordered
// products over periodic matrix sequences.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cyclolms/errors.hpp"

namespace cyclolms {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Non-negative remainder of n modulo period.
inline std::size_t wrap_index(std::int64_t n, std::size_t period) {
  const auto p = static_cast<std::int64_t>(period);
  const std::int64_t r = n % p;
  return static_cast<std::size_t>(r < 0 ? r + p : r);
}

/// An N0-periodic sequence; element access wraps, so at(n) == at(n + N0)
/// for every integer n.
template <typename T>
class PeriodicSequence {
 public:
  PeriodicSequence() = default;
  explicit PeriodicSequence(std::vector<T> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw DimensionError("PeriodicSequence: period must be at least 1");
    }
  }

  /// Builds values[n] = fn(n) for n in [0, period).
  template <typename Fn>
  static PeriodicSequence generate(std::size_t period, Fn&& fn) {
    std::vector<T> values;
    values.reserve(period);
    for (std::size_t n = 0; n < period; ++n) values.push_back(fn(n));
    return PeriodicSequence(std::move(values));
  }

  std::size_t period() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const T& at(std::int64_t n) const { return values_[wrap_index(n, values_.size())]; }
  const T& operator[](std::int64_t n) const { return at(n); }
  const std::vector<T>& values() const { return values_; }

 private:
  std::vector<T> values_;
};

/// Tolerances used by the algebraic kernels and their tests.
namespace tol {
inline constexpr double kAlgebra = 1e-10;   // pure-algebra identities, relative
inline constexpr double kSolve = 1e-8;      // solver residual, relative to |b|
inline constexpr double kRealEig = 1e-9;    // imag threshold, scaled by (1 + rho)
inline constexpr double kMinRcond = 1e-14;  // below this the solver refuses
}  // namespace tol

/// (A kron B)(i*p + r, j*q + s) = A(i, j) * B(r, s).
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

/// Column-major stacking of a square matrix.
CVector vec(const CMatrix& x);
/// Inverse of vec; throws DimensionError when the length is not a square.
CMatrix unvec(const CVector& x);

/// y^H unvec(q) y.
Complex weighted_sq_norm(const CVector& y, const CVector& q);

/// vec((X + X^H) / 2) for x = vec(X). For any Hermitian weight q,
/// hermitian_part(x)^T q == Re{x^T q}.
CVector hermitian_part(const CVector& x);

/// All eigenvalues of a square matrix (general complex solver).
CVector eigenvalues(const CMatrix& x);

/// max |lambda_i|. Throws NumericalError if the eigen-solver fails.
double spectral_radius(const CMatrix& x);

/// Largest / smallest eigenvalue whose imaginary part is below
/// kRealEig * (1 + rho(X)); empty when no eigenvalue qualifies.
std::optional<double> max_real_eig(const CMatrix& x);
std::optional<double> min_real_eig(const CMatrix& x);

/// S[last] * ... * S[first] over l = k1 .. period-1+k2 (indices wrapped);
/// the identity when the range is empty.
CMatrix periodic_product(const PeriodicSequence<CMatrix>& seq, std::int64_t k1,
                         std::int64_t k2);

/// Dense LU solve with a conditioning check and residual verification.
CVector solve(const CMatrix& a, const CVector& b);
CMatrix solve(const CMatrix& a, const CMatrix& b);

/// Largest relative deviation from Hermitian symmetry, |X - X^H| / (1 + |X|).
double hermitian_defect(const CMatrix& x);

std::size_t lcm(std::size_t a, std::size_t b);

}  // namespace cyclolms
