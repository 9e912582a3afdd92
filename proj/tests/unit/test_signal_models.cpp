#include <gtest/gtest.h>

#include <cmath>

#include "cyclolms/signal_models.hpp"
#include "support.hpp"

namespace cyclolms {
namespace {

// E{(nu/X)^k}, X ~ chi2_nu, by composite Simpson after x = t^2, which removes
// the integrable singularity at the origin.
double inverse_chi2_moment(double nu, int k) {
  const auto integrand = [nu, k](double t) {
    if (t == 0.0) return 0.0;
    const double x = t * t;
    const double log_pdf = (nu / 2 - 1) * std::log(x) - x / 2 - (nu / 2) * std::log(2.0) - std::lgamma(nu / 2);
    return 2 * t * std::pow(nu / x, k) * std::exp(log_pdf);
  };
  const int n = 400000;
  const double hi = 40.0, h = hi / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    acc += w * integrand(i * h);
  }
  return acc * h / 3;
}

TEST(Texture, StudentTMomentsMatchQuadrature) {
  const Texture t = Texture::student_t(5.0);
  EXPECT_NEAR(t.mean(), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.second_moment(), 25.0 / 3.0, 1e-14);
  EXPECT_NEAR(inverse_chi2_moment(5.0, 1), t.mean(), 1e-5);
  EXPECT_NEAR(inverse_chi2_moment(5.0, 2), t.second_moment(), 1e-3);
  EXPECT_NEAR(inverse_chi2_moment(9.0, 2), Texture::student_t(9.0).second_moment(), 1e-5);
}

TEST(Texture, StudentTSampleMean) {
  const Texture t = Texture::student_t(5.0);
  Rng rng(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = t.draw(rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - t.mean()), 4 * se);
}

TEST(Texture, RejectsUnboundedFourthMoments) {
  EXPECT_THROW(Texture::student_t(4.0), PreconditionError);
  EXPECT_THROW(Texture::student_t(3.5), PreconditionError);
  EXPECT_THROW(Texture::constant(0.0), PreconditionError);
  EXPECT_EQ(Texture::constant(2.0).second_moment(), 4.0);
}

CMatrix kernel(Eigen::Index m, double scale, double decay) {
  CMatrix c(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) {
      const double d = static_cast<double>(k - l);
      c(k, l) = scale * std::exp(Complex(-decay * std::abs(d), 2 * M_PI * d / static_cast<double>(m)));
    }
  return c;
}

InputModel compound_model(double nu, std::optional<PeriodicSequence<double>> env = std::nullopt) {
  return InputModel(CompoundGaussianModel{PeriodicSequence<CMatrix>({kernel(3, 1.0, 1.0)}),
                                          PeriodicSequence<Texture>({Texture::student_t(nu)})},
                    std::move(env));
}

InputModel mixture_model() {
  GaussianMixtureModel gm;
  RVector w(3);
  w << 0.1, 0.2, 0.7;
  gm.weights = PeriodicSequence<RVector>({w});
  for (double m : {1.0, 2.0, 3.0}) gm.component_covs.push_back(PeriodicSequence<CMatrix>({kernel(3, 6.0, m)}));
  return InputModel(std::move(gm), PeriodicSequence<double>({1.0, 1.5}));
}

TEST(InputModel, CompoundCovarianceScalesWithEnvelopeAndTexture) {
  const InputModel m = compound_model(5.0, PeriodicSequence<double>({1.0, 2.0}));
  EXPECT_EQ(m.period(), 2u);
  EXPECT_LT(test::rel_err(m.covariance(1), CMatrix(4.0 * (5.0 / 3.0) * kernel(3, 1.0, 1.0))), 1e-14);
  EXPECT_EQ(m.kind(), ModelKind::kCompoundGaussian);
}

TEST(InputModel, MixtureCovarianceAndFourthMoment) {
  const InputModel m = mixture_model();
  CMatrix expect = CMatrix::Zero(3, 3);
  const double w[3] = {0.1, 0.2, 0.7};
  for (int k = 0; k < 3; ++k) expect += w[k] * kernel(3, 6.0, k + 1.0);
  EXPECT_LT(test::rel_err(m.covariance(1), CMatrix(2.25 * expect)), 1e-14);
  // E|x_0|^4 for a mixture: sum w_k 2 c_k(0,0)^2 a^4
  const Complex f = m.fourth_moment(1, 0, 0, 0, 0);
  EXPECT_NEAR(f.real(), std::pow(1.5, 4) * 2 * 36.0, 1e-10);
}

// Entrywise fourth moments against a sample average.
TEST(InputModel, FourthMomentMatchesSamples) {
  for (const InputModel& m : {compound_model(9.0), mixture_model()}) {
    Rng rng(21);
    const int n = 200000;
    const std::size_t idx[][4] = {{0, 0, 0, 0}, {0, 1, 2, 1}, {1, 0, 1, 2}, {2, 2, 0, 0}};
    std::vector<Complex> sum(4, 0.0);
    std::vector<double> sum2(4, 0.0);
    for (int i = 0; i < n; ++i) {
      const CVector x = m.sample(0, rng);
      for (int j = 0; j < 4; ++j) {
        const auto* p = idx[j];
        const Complex v = x(p[0]) * std::conj(x(p[1])) * x(p[2]) * std::conj(x(p[3]));
        sum[j] += v;
        sum2[j] += std::norm(v);
      }
    }
    for (int j = 0; j < 4; ++j) {
      const auto* p = idx[j];
      const Complex mean = sum[j] / double(n);
      const double se = std::sqrt((sum2[j] / n - std::norm(mean)) / n);
      EXPECT_LT(std::abs(mean - m.fourth_moment(0, p[0], p[1], p[2], p[3])), 4 * se * std::sqrt(2.0))
          << "entry " << j;
    }
  }
}

TEST(InputModel, SampleCovarianceMatchesModel) {
  const InputModel m = compound_model(9.0, PeriodicSequence<double>({0.5, 1.0, 1.5}));
  Rng rng(5);
  const int n = 100000;
  CMatrix s = CMatrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const CVector x = m.sample(2, rng);
    s += x * x.adjoint();
  }
  s /= n;
  const CMatrix c = m.covariance(2);
  // crude bound: |x_i x_j*| has second moment below E|x_i|^2|x_j|^2
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double bound = std::sqrt(m.fourth_moment(2, i, i, j, j).real() / n);
      EXPECT_LT(std::abs(s(i, j) - c(i, j)), 4 * bound);
    }
}

TEST(InputModel, RejectsNonHermitianCovariance) {
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = 1.0;
  EXPECT_THROW(require_hermitian_psd(bad, "test"), PreconditionError);
  CMatrix neg = CMatrix::Identity(2, 2);
  neg(1, 1) = -1.0;
  EXPECT_THROW(require_hermitian_psd(neg, "test"), PreconditionError);
}

TEST(GroundTruth, CommonPeriodAndTimeAveragedWiener) {
  const InputModel m = compound_model(9.0, PeriodicSequence<double>({1.0, 1.2, 0.8, 1.1}));
  std::vector<CVector> h;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2; ++i) h.push_back(test::random_vector(3, rng));
  const GroundTruth gt =
      make_ground_truth(PeriodicSequence<CVector>(h), PeriodicSequence<double>({1.0, 2.0, 3.0}), m);
  EXPECT_EQ(gt.period(), 12u);
  // sum_n C[n] (h[n] - h_ta) = 0 over one period
  CVector acc = CVector::Zero(3);
  for (std::int64_t n = 0; n < 12; ++n) acc += m.covariance(n) * gt.deviation.at(n);
  EXPECT_LT(acc.norm(), 1e-12);
  EXPECT_LT((gt.deviation.at(5) - (h[1] - gt.h_ta)).norm(), 1e-15);
  EXPECT_THROW(make_ground_truth(PeriodicSequence<CVector>(h), PeriodicSequence<double>({-1.0}), m),
               PreconditionError);
}

TEST(SignalSource, SoiResidualHasModelVariance) {
  auto m = std::make_shared<const InputModel>(compound_model(9.0));
  std::mt19937_64 g(4);
  auto gt = std::make_shared<const GroundTruth>(make_ground_truth(
      PeriodicSequence<CVector>({test::random_vector(3, g)}), PeriodicSequence<double>({0.5, 2.0}), *m));
  const IidSource src(m, gt);
  auto stream = src.open(9);
  CVector x;
  Complex d;
  double acc[2] = {0, 0};
  const int n = 100000;
  for (int i = 0; i < 2 * n; ++i) {
    stream->next(x, d);
    acc[i % 2] += std::norm(d - gt->h_lmmse.at(i).dot(x));
  }
  EXPECT_NEAR(acc[0] / n, 0.5, 4 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(acc[1] / n, 2.0, 4 * 2.0 / std::sqrt(n));
}

TEST(SignalSource, SameSeedSameStream) {
  auto m = std::make_shared<const InputModel>(mixture_model());
  auto gt = std::make_shared<const GroundTruth>(make_ground_truth(
      PeriodicSequence<CVector>({CVector::Ones(3)}), PeriodicSequence<double>({0.1}), *m));
  const IidSource src(m, gt);
  auto a = src.open(5), b = src.open(5), c = src.open(6);
  CVector xa, xb, xc;
  Complex da, db, dc;
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    a->next(xa, da);
    b->next(xb, db);
    c->next(xc, dc);
    EXPECT_EQ(xa, xb);
    EXPECT_EQ(da, db);
    differs |= (xa != xc);
  }
  EXPECT_TRUE(differs);
}

}  // namespace
}  // namespace cyclolms
