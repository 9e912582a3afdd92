#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "cyclolms/lms_theory.hpp"
#include "cyclolms/moment_matrices.hpp"
#include "cyclolms/signal_models.hpp"
#include "support.hpp"

namespace cyclolms::test {

// Per-entry Monte Carlo means of a matrix-valued function of x.
struct MatrixAverager {
  CMatrix sum, sum2;
  long n = 0;
  explicit MatrixAverager(Eigen::Index r) : sum(CMatrix::Zero(r, r)), sum2(CMatrix::Zero(r, r)) {}
  void add(const CMatrix& v) {
    sum += v;
    sum2 += v.cwiseAbs2().cast<Complex>();
    ++n;
  }
  // number of entries of `truth` farther than 4 standard errors from the mean
  int outside(const CMatrix& truth) const {
    const CMatrix mean = sum / double(n);
    int bad = 0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      for (Eigen::Index j = 0; j < truth.cols(); ++j) {
        const double var = sum2(i, j).real() / n - std::norm(mean(i, j));
        const double se = std::sqrt(std::max(var, 0.0) / n);
        bad += std::abs(mean(i, j) - truth(i, j)) > 4 * se + 1e-12;
      }
    return bad;
  }
};

struct Instance {
  std::shared_ptr<const InputModel> model;
  std::shared_ptr<const GroundTruth> gt;
  std::shared_ptr<const MomentBasis> basis;
  std::size_t period = 1;
};

inline Instance make_instance(std::shared_ptr<const InputModel> model, std::vector<CVector> h, std::vector<double> noise) {
  Instance in;
  in.model = std::move(model);
  in.gt = std::make_shared<const GroundTruth>(
      make_ground_truth(PeriodicSequence<CVector>(std::move(h)), PeriodicSequence<double>(std::move(noise)), *in.model));
  in.period = lcm(in.model->period(), in.gt->period());
  in.basis = build_basis(*in.model, in.period);
  return in;
}

// Random small cyclostationary instance: M in {2, 3}, phases in {1, 2, 3}.
inline Instance random_instance(std::mt19937_64& rng, int which) {
  std::uniform_int_distribution<int> dim(2, 3), per(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int m = dim(rng), nx = per(rng), nh = per(rng), nv = per(rng);
  std::shared_ptr<const InputModel> model;
  std::vector<double> env;
  for (int k = 0; k < nx; ++k) env.push_back(0.7 + 0.6 * u(rng));
  if (which % 2 == 0) {
    GaussianMixtureModel gm;
    std::vector<RVector> ws;
    for (int k = 0; k < nx; ++k) {
      RVector w(2);
      w << 0.2 + 0.6 * u(rng), 0.0;
      w(1) = 1.0 - w(0);
      ws.push_back(w);
    }
    gm.weights = PeriodicSequence<RVector>(ws);
    for (int c = 0; c < 2; ++c) {
      std::vector<CMatrix> covs;
      for (int k = 0; k < nx; ++k) covs.push_back(random_covariance(m, rng, 0.5 + 2.0 * u(rng)));
      gm.component_covs.push_back(PeriodicSequence<CMatrix>(covs));
    }
    model = std::make_shared<const InputModel>(std::move(gm), PeriodicSequence<double>(env));
  } else {
    std::vector<CMatrix> covs;
    for (int k = 0; k < nx; ++k) covs.push_back(random_covariance(m, rng));
    const Texture t = (which % 4 == 1) ? Texture::student_t(5.0 + 7.0 * u(rng)) : Texture::constant(0.5 + u(rng));
    model = std::make_shared<const InputModel>(
        CompoundGaussianModel{PeriodicSequence<CMatrix>(covs), PeriodicSequence<Texture>({t})},
        PeriodicSequence<double>(env));
  }
  std::vector<CVector> h;
  for (int k = 0; k < nh; ++k) h.push_back(random_vector(m, rng));
  std::vector<double> noise;
  for (int k = 0; k < nv; ++k) noise.push_back(0.01 + 0.1 * u(rng));
  return make_instance(model, h, noise);
}

// E{x x^H Q x x^H} entry by entry from the model's fourth moments.
inline CMatrix expect_xxqxx(const InputModel& model, std::int64_t n, const CMatrix& q) {
  const auto m = q.rows();
  CMatrix out = CMatrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index l = 0; l < m; ++l)
          out(i, j) += q(k, l) * model.fourth_moment(n, static_cast<std::size_t>(i), static_cast<std::size_t>(k),
                                                     static_cast<std::size_t>(l), static_cast<std::size_t>(j));
  return out;
}

// MSE at time n propagated backwards: the weight C[n] is pulled through
// Q -> E{R Q R} down to the deterministic start, collecting the forcing terms
// on the way.
inline double backward_chain_mse(const Instance& in, double mu, const CVector& h0, std::size_t n) {
  const InputModel& model = *in.model;
  const GroundTruth& gt = *in.gt;
  std::vector<CVector> mean{gt.h_ta - h0};
  for (std::size_t k = 0; k < n; ++k) {
    const auto t = static_cast<std::int64_t>(k);
    const CMatrix c = model.covariance(t);
    mean.push_back(mean.back() - mu * c * (mean.back() + gt.deviation.at(t)));
  }
  const auto tn = static_cast<std::int64_t>(n);
  CMatrix q = model.covariance(tn);
  double forcing = 0.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const auto t = static_cast<std::int64_t>(kk);
    const CMatrix c = model.covariance(t);
    const CVector& g = gt.deviation.at(t);
    const CMatrix xqx = expect_xxqxx(model, t, q);
    const CMatrix rqx = q * c - mu * xqx;
    forcing += mu * mu * std::real(g.dot(xqx * g)) + mu * mu * gt.noise_variance.at(t) * std::real((c * q).trace()) -
               2 * mu * std::real(mean[kk].dot(rqx * g));
    q = q - mu * (c * q + q * c) + mu * mu * xqx;
  }
  const CVector& h0t = mean[0];
  const double quad = std::real(h0t.dot(q * h0t)) + forcing;
  const CMatrix cn = model.covariance(tn);
  const CVector& gn = gt.deviation.at(tn);
    return quad + 2 * std::real(gn.dot(cn * mean[n])) + std::real(gn.dot(cn * gn)) + gt.noise_variance.at(tn);
}

// Classical analysis of LMS with a stationary elliptical input
// x = sqrt(tau) y: in the eigenbasis of C only the diagonal of K feeds the
// MSE, and k_i' = (1 - 2 mu l_i + kappa mu^2 l_i^2) k_i + kappa mu^2 l_i S
// + mu^2 sv l_i with S = sum l_j k_j and kappa = E{tau^2} / E{tau}^2.
struct Classical {
  RVector lambda;
  double kappa;
  double sv;
  double mu;
  RVector k;
  double mse() const { return lambda.dot(k) + sv; }
  void step() {
    const double s = lambda.dot(k);
    RVector next(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) {
      const double l = lambda(i);
      next(i) = (1 - 2 * mu * l + kappa * mu * mu * l * l) * k(i) + kappa * mu * mu * l * s + mu * mu * sv * l;
    }
    k = next;
  }
  double steady_mse() const {
    double b = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) b += mu * lambda(i) / (2 - kappa * mu * lambda(i));
    return sv + sv * b / (1 - kappa * b);
  }
};

}  // namespace cyclolms::test
