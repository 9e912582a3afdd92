#include "cyclolms/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <sstream>

namespace cyclolms {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const auto p = b.rows();
  const auto q = b.cols();
  CMatrix out(a.rows() * p, a.cols() * q);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.block(i * p, j * q, p, q) = a(i, j) * b;
    }
  }
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

CVector vec(const CMatrix& x) {
  return Eigen::Map<const CVector>(x.data(), x.size());
}

CMatrix unvec(const CVector& x) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(x.size()))));
  if (n * n != x.size()) {
    std::ostringstream msg;
    msg << "unvec: length " << x.size() << " is not a perfect square";
    throw DimensionError(msg.str());
  }
  return Eigen::Map<const CMatrix>(x.data(), n, n);
}

Complex weighted_sq_norm(const CVector& y, const CVector& q) {
  if (q.size() != y.size() * y.size()) {
    throw DimensionError("weighted_sq_norm: weight length must be M^2");
  }
  const CMatrix w = unvec(q);
  return y.dot(w * y);  // Eigen's dot conjugates the left operand
}

CVector hermitian_part(const CVector& x) {
  const CMatrix m = unvec(x);
  return vec(0.5 * (m + m.adjoint()));
}

CVector eigenvalues(const CMatrix& x) {
  if (x.rows() != x.cols()) throw DimensionError("eigenvalues: matrix must be square");
  if (x.size() == 0) return CVector();
  Eigen::ComplexEigenSolver<CMatrix> solver(x, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalues: complex eigen-solver did not converge");
  }
  return solver.eigenvalues();
}

double spectral_radius(const CMatrix& x) {
  if (!x.allFinite()) throw NumericalError("spectral_radius: non-finite input");
  const CVector ev = eigenvalues(x);
  return ev.size() == 0 ? 0.0 : ev.cwiseAbs().maxCoeff();
}

namespace {

template <typename Better>
std::optional<double> extreme_real_eig(const CMatrix& x, Better better) {
  const CVector ev = eigenvalues(x);
  if (ev.size() == 0) return std::nullopt;
  const double rho = ev.cwiseAbs().maxCoeff();
  const double im_tol = tol::kRealEig * (1.0 + rho);
  std::optional<double> best;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i).imag()) > im_tol) continue;
    if (!best || better(ev(i).real(), *best)) best = ev(i).real();
  }
  return best;
}

}  // namespace

std::optional<double> max_real_eig(const CMatrix& x) {
  return extreme_real_eig(x, [](double a, double b) { return a > b; });
}

std::optional<double> min_real_eig(const CMatrix& x) {
  return extreme_real_eig(x, [](double a, double b) { return a < b; });
}

CMatrix periodic_product(const PeriodicSequence<CMatrix>& seq, std::int64_t k1, std::int64_t k2) {
  const auto n = seq.at(0).rows();
  for (const auto& m : seq.values()) {
    if (m.rows() != n || m.cols() != n) {
      throw DimensionError("periodic_product: sequence entries must share one square shape");
    }
  }
  const std::int64_t last = static_cast<std::int64_t>(seq.period()) - 1 + k2;
  CMatrix out = CMatrix::Identity(n, n);
  for (std::int64_t l = k1; l <= last; ++l) {
    out = seq.at(l) * out;
  }
  return out;
}

namespace {

template <typename Rhs>
Rhs solve_impl(const CMatrix& a, const Rhs& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw DimensionError("solve: expected square A with matching right-hand side");
  }
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > tol::kMinRcond)) {
    std::ostringstream msg;
    msg << "solve: matrix is singular to working precision (rcond=" << rcond << ")";
    throw SingularMatrixError(msg.str(), rcond);
  }
  Rhs x = lu.solve(b);
  const double residual = (a * x - b).norm();
  if (!(residual <= tol::kSolve * b.norm()) && b.norm() > 0.0) {
    std::ostringstream msg;
    msg << "solve: residual " << residual << " exceeds tolerance (rcond=" << rcond << ")";
    throw SingularMatrixError(msg.str(), rcond);
  }
  return x;
}

}  // namespace

CVector solve(const CMatrix& a, const CVector& b) { return solve_impl(a, b); }
CMatrix solve(const CMatrix& a, const CMatrix& b) { return solve_impl(a, b); }

double hermitian_defect(const CMatrix& x) {
  if (x.rows() != x.cols()) throw DimensionError("hermitian_defect: matrix must be square");
  return (x - x.adjoint()).cwiseAbs().maxCoeff() / (1.0 + x.cwiseAbs().maxCoeff());
}

std::size_t lcm(std::size_t a, std::size_t b) { return std::lcm(a, b); }

}  // namespace cyclolms
