#pragma once

// Per-phase M^2 x M^2 matrices driving the LMS moment recursions.
//
//   B[n] = E{(x x^H)^T kron (x x^H)}
//   A[n] = C_x^T kron I + I kron C_x
//   F[n] = I - mu A + mu^2 B        (unvec(F q) = E{R Q R}, R = I - mu x x^H)
//   P[n] = C_x^T kron I - mu B      (unvec(P q) = E{R Q x x^H})
//   H[n] = 1/2 [[A, -B], [2 I, 0]]
//
// F, P and H are formed from A and B, so B is the single source of
// fourth-order information.

#include <cstddef>
#include <memory>

#include "cyclolms/linalg.hpp"
#include "cyclolms/signal_models.hpp"

namespace cyclolms {

enum class FourthMomentPath {
  kClosedForm,  // compound-Gaussian / mixture formulas; empirical models use their tensor
  kGeneric,     // entry by entry from InputModel::fourth_moment
};

/// B[n] of a model at phase n.
CMatrix build_B(const InputModel& model, std::int64_t n,
                FourthMomentPath path = FourthMomentPath::kClosedForm);
/// Isserlis block c^T kron c + vec(c) vec(c)^H of a proper Gaussian with covariance c.
CMatrix gaussian_B(const CMatrix& c);
CMatrix build_A(const CMatrix& covariance);
CMatrix build_F(const CMatrix& a, const CMatrix& b, double mu);
CMatrix build_P(const CMatrix& covariance, const CMatrix& b, double mu);
CMatrix build_H(const CMatrix& a, const CMatrix& b);

/// The step-size independent part: covariances, A, B, H over one period.
struct MomentBasis {
  std::size_t dim = 0;
  PeriodicSequence<CMatrix> covariance;
  PeriodicSequence<CVector> c_x;  // vec(C_x[n])
  PeriodicSequence<CMatrix> A;
  PeriodicSequence<CMatrix> B;
  PeriodicSequence<CMatrix> H;

  std::size_t period() const { return covariance.period(); }
};

/// Builds the basis over `period` phases (a multiple of the model period).
std::shared_ptr<const MomentBasis> build_basis(const InputModel& model, std::size_t period,
                                               FourthMomentPath path = FourthMomentPath::kClosedForm);

/// A basis together with the step-size dependent F and P.
class MomentMatrixSet {
 public:
  MomentMatrixSet(std::shared_ptr<const MomentBasis> basis, double mu);

  double mu() const { return mu_; }
  std::size_t dim() const { return basis_->dim; }
  std::size_t period() const { return basis_->period(); }
  const MomentBasis& basis() const { return *basis_; }
  const std::shared_ptr<const MomentBasis>& basis_ptr() const { return basis_; }

  const CMatrix& covariance(std::int64_t n) const { return basis_->covariance.at(n); }
  const CVector& c_x(std::int64_t n) const { return basis_->c_x.at(n); }
  const CMatrix& A(std::int64_t n) const { return basis_->A.at(n); }
  const CMatrix& B(std::int64_t n) const { return basis_->B.at(n); }
  const CMatrix& H(std::int64_t n) const { return basis_->H.at(n); }
  const CMatrix& F(std::int64_t n) const { return F_.at(n); }
  const CMatrix& P(std::int64_t n) const { return P_.at(n); }
  const PeriodicSequence<CMatrix>& F_sequence() const { return F_; }
  const PeriodicSequence<CMatrix>& P_sequence() const { return P_; }

 private:
  std::shared_ptr<const MomentBasis> basis_;
  double mu_;
  PeriodicSequence<CMatrix> F_;
  PeriodicSequence<CMatrix> P_;
};

}  // namespace cyclolms
