#include "cyclolms/moment_matrices.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "parallel.hpp"

namespace cyclolms {

CMatrix gaussian_B(const CMatrix& c) {
  const CVector v = vec(c);
  return kron(CMatrix(c.transpose()), c) + v * v.adjoint();
}

CMatrix build_B(const InputModel& model, std::int64_t n, FourthMomentPath path) {
  const auto m = static_cast<Eigen::Index>(model.dim());
  if (path == FourthMomentPath::kClosedForm) {
    const double a = model.envelope_at(n);
    const double a4 = a * a * a * a;
    const auto& base = model.base();
    if (const auto* cg = std::get_if<CompoundGaussianModel>(&base)) {
      return (a4 * cg->texture.at(n).second_moment()) * gaussian_B(cg->speckle_cov.at(n));
    }
    if (const auto* gm = std::get_if<GaussianMixtureModel>(&base)) {
      const RVector& w = gm->weights.at(n);
      CMatrix b = CMatrix::Zero(m * m, m * m);
      for (std::size_t k = 0; k < gm->component_covs.size(); ++k) {
        b += w(static_cast<Eigen::Index>(k)) * gaussian_B(gm->component_covs[k].at(n));
      }
      return a4 * b;
    }
    const auto& em = std::get<EmpiricalModel>(base);
    return a4 * em.fourth.at(n);
  }
  // B(l1*M + q1, l2*M + q2) = E{x_l2 x*_l1 x_q1 x*_q2}
  CMatrix b(m * m, m * m);
  const auto u = [](Eigen::Index i) { return static_cast<std::size_t>(i); };
  for (Eigen::Index l1 = 0; l1 < m; ++l1)
    for (Eigen::Index q1 = 0; q1 < m; ++q1)
      for (Eigen::Index l2 = 0; l2 < m; ++l2)
        for (Eigen::Index q2 = 0; q2 < m; ++q2) {
          b(l1 * m + q1, l2 * m + q2) = model.fourth_moment(n, u(l2), u(l1), u(q1), u(q2));
        }
  return b;
}

CMatrix build_A(const CMatrix& covariance) {
  const auto m = covariance.rows();
  const CMatrix eye = CMatrix::Identity(m, m);
  return kron(CMatrix(covariance.transpose()), eye) + kron(eye, covariance);
}

CMatrix build_F(const CMatrix& a, const CMatrix& b, double mu) {
  return CMatrix::Identity(a.rows(), a.cols()) - mu * a + (mu * mu) * b;
}

CMatrix build_P(const CMatrix& covariance, const CMatrix& b, double mu) {
  const auto m = covariance.rows();
  return kron(CMatrix(covariance.transpose()), CMatrix::Identity(m, m)) - mu * b;
}

CMatrix build_H(const CMatrix& a, const CMatrix& b) {
  const auto m2 = a.rows();
  CMatrix h = CMatrix::Zero(2 * m2, 2 * m2);
  h.topLeftCorner(m2, m2) = 0.5 * a;
  h.topRightCorner(m2, m2) = -0.5 * b;
  h.bottomLeftCorner(m2, m2) = CMatrix::Identity(m2, m2);
  return h;
}

std::shared_ptr<const MomentBasis> build_basis(const InputModel& model, std::size_t period,
                                               FourthMomentPath path) {
  if (period == 0 || period % model.period() != 0) {
    throw DimensionError("build_basis: period " + std::to_string(period) +
                         " is not a multiple of the model period " + std::to_string(model.period()));
  }
  auto basis = std::make_shared<MomentBasis>();
  basis->dim = model.dim();
  std::vector<CMatrix> cov(period), a(period), b(period), h(period);
  std::vector<CVector> cx(period);
#pragma omp parallel for schedule(dynamic) num_threads(detail::worker_threads())
  for (long k = 0; k < static_cast<long>(period); ++k) {
    const auto i = static_cast<std::size_t>(k);
    cov[i] = model.covariance(k);
    cx[i] = vec(cov[i]);
    a[i] = build_A(cov[i]);
    b[i] = build_B(model, k, path);
    h[i] = build_H(a[i], b[i]);
  }
  basis->covariance = PeriodicSequence<CMatrix>(std::move(cov));
  basis->c_x = PeriodicSequence<CVector>(std::move(cx));
  basis->A = PeriodicSequence<CMatrix>(std::move(a));
  basis->B = PeriodicSequence<CMatrix>(std::move(b));
  basis->H = PeriodicSequence<CMatrix>(std::move(h));
  return basis;
}

MomentMatrixSet::MomentMatrixSet(std::shared_ptr<const MomentBasis> basis, double mu)
    : basis_(std::move(basis)), mu_(mu) {
  if (!basis_) throw PreconditionError("MomentMatrixSet: no basis");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw PreconditionError("step size must be non-negative and finite");
  const std::size_t period = basis_->period();
  F_ = PeriodicSequence<CMatrix>::generate(period, [&](std::size_t k) {
    const auto n = static_cast<std::int64_t>(k);
    return build_F(basis_->A.at(n), basis_->B.at(n), mu_);
  });
  P_ = PeriodicSequence<CMatrix>::generate(period, [&](std::size_t k) {
    const auto n = static_cast<std::int64_t>(k);
    return build_P(basis_->covariance.at(n), basis_->B.at(n), mu_);
  });
}

}  // namespace cyclolms
