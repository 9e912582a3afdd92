#include <gtest/gtest.h>
#include <omp.h>

#include <cstdlib>

#include "cyclolms/moment_estimation.hpp"
#include "support.hpp"

namespace cyclolms {
namespace {

std::shared_ptr<const InputModel> small_model() {
  std::mt19937_64 rng(1);
  GaussianMixtureModel gm;
  RVector w(2);
  w << 0.3, 0.7;
  gm.weights = PeriodicSequence<RVector>({w});
  gm.component_covs.push_back(PeriodicSequence<CMatrix>({test::random_covariance(2, rng, 1.0)}));
  gm.component_covs.push_back(PeriodicSequence<CMatrix>({test::random_covariance(2, rng, 3.0)}));
  return std::make_shared<const InputModel>(std::move(gm), PeriodicSequence<double>({1.0, 0.6}));
}

std::shared_ptr<const PhaseSampler> sampler(const std::shared_ptr<const InputModel>& m) {
  return std::make_shared<const ModelSampler>(m, 2);
}

MomentEstimationOptions cheap() {
  MomentEstimationOptions o;
  o.min_draws = 2;
  return o;
}

TEST(MomentEstimation, AgreesWithClosedFormWithinStandardErrors) {
  const auto m = small_model();
  const MomentEstimate e = estimate_moments(sampler(m), 60000, 3, cheap());
  int checked = 0, outside = 0;
  for (std::int64_t n = 0; n < 2; ++n) {
    const CMatrix& c = e.model.covariance.at(n);
    const RMatrix& se = e.model.covariance_stderr.at(n);
    const CMatrix truth = m->covariance(n);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        ++checked;
        outside += std::abs(c(i, j) - truth(i, j)) > 4 * se(i, j) + 1e-12;
      }
    const CMatrix& f = e.model.fourth.at(n);
    const RMatrix& fse = e.model.fourth_stderr.at(n);
    for (std::size_t p1 = 0; p1 < 2; ++p1)
      for (std::size_t p2 = 0; p2 < 2; ++p2)
        for (std::size_t p3 = 0; p3 < 2; ++p3)
          for (std::size_t p4 = 0; p4 < 2; ++p4) {
            const auto r = static_cast<Eigen::Index>(p2 * 2 + p3), col = static_cast<Eigen::Index>(p1 * 2 + p4);
            ++checked;
            outside += std::abs(f(r, col) - m->fourth_moment(n, p1, p2, p3, p4)) > 4 * fse(r, col) + 1e-12;
          }
  }
  EXPECT_EQ(outside, 0) << "of " << checked;
}

TEST(MomentEstimation, EmpiricalModelReproducesEstimates) {
  const auto m = small_model();
  const MomentEstimate e = estimate_moments(sampler(m), 4000, 3, cheap());
  const InputModel emp(e.model);
  EXPECT_EQ(emp.kind(), ModelKind::kEmpirical);
  EXPECT_LT(test::rel_err(emp.covariance(1), e.model.covariance.at(1)), 1e-15);
  EXPECT_EQ(emp.fourth_moment(1, 0, 1, 1, 0), e.model.fourth.at(1)(1 * 2 + 1, 0 * 2 + 0));
}

// E{x x^H |x|^2} built from the tensor is Hermitian PSD.
TEST(MomentEstimation, ContractedFourthMomentIsPsd) {
  const auto m = small_model();
  const MomentEstimate e = estimate_moments(sampler(m), 5000, 8, cheap());
  const CMatrix& f = e.model.fourth.at(0);
  CMatrix k = CMatrix::Zero(2, 2);
  for (Eigen::Index p1 = 0; p1 < 2; ++p1)
    for (Eigen::Index p2 = 0; p2 < 2; ++p2)
      for (Eigen::Index p3 = 0; p3 < 2; ++p3) k(p1, p2) += f(p2 * 2 + p3, p1 * 2 + p3);
  EXPECT_LT(hermitian_defect(k), 1e-12);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (k + k.adjoint()));
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(MomentEstimation, SymmetrizationKeepsSymmetricTensors) {
  const auto m = small_model();
  CMatrix t(4, 4);
  for (Eigen::Index p1 = 0; p1 < 2; ++p1)
    for (Eigen::Index p2 = 0; p2 < 2; ++p2)
      for (Eigen::Index p3 = 0; p3 < 2; ++p3)
        for (Eigen::Index p4 = 0; p4 < 2; ++p4) t(p2 * 2 + p3, p1 * 2 + p4) = m->fourth_moment(0, p1, p2, p3, p4);
  EXPECT_LT(test::rel_err(detail::symmetrize_fourth(t, 2), t), 1e-15);
}

TEST(MomentEstimation, RejectsTooFewDraws) {
  EXPECT_THROW(estimate_moments(sampler(small_model()), 10, 1), PreconditionError);
}

TEST(MomentEstimation, ParallelMatchesSerialReference) {
  const auto m = small_model();
  omp_set_num_threads(4);
  const MomentEstimate a = estimate_moments(sampler(m), 3000, 17, cheap());
  const MomentEstimate b = reference::estimate_moments(sampler(m), 3000, 17, cheap());
  for (std::int64_t n = 0; n < 2; ++n) {
    EXPECT_LT(test::rel_err(a.model.covariance.at(n), b.model.covariance.at(n)), 1e-12);
    EXPECT_LT(test::rel_err(a.model.fourth.at(n), b.model.fourth.at(n)), 1e-12);
    EXPECT_LT((a.mean.at(n) - b.mean.at(n)).norm(), 1e-12);
  }
}

TEST(MomentEstimation, IndependentOfThreadCount) {
  const auto m = small_model();
  omp_set_num_threads(4);
  const MomentEstimate a = estimate_moments(sampler(m), 2000, 5, cheap());
  setenv("CYCLO_LMS_THREADS", "1", 1);
  const MomentEstimate b = estimate_moments(sampler(m), 2000, 5, cheap());
  unsetenv("CYCLO_LMS_THREADS");
  for (std::int64_t n = 0; n < 2; ++n) {
    EXPECT_EQ(a.model.covariance.at(n), b.model.covariance.at(n));
    EXPECT_EQ(a.model.fourth.at(n), b.model.fourth.at(n));
  }
}

}  // namespace
}  // namespace cyclolms
