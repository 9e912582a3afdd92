// Plain serial versions of the parallel kernels, kept as test oracles and
// benchmark baselines.

#include <cmath>
#include <string>
#include <vector>

#include "cyclolms/lms_sim.hpp"
#include "cyclolms/moment_estimation.hpp"

namespace cyclolms::reference {

EmpiricalCurve monte_carlo_mse(const SignalSource& source, double mu, std::size_t horizon,
                               std::size_t n_trials, std::uint64_t base_seed, const CVector& h0) {
  if (n_trials < 1 || horizon < 1) throw PreconditionError("monte carlo: n_trials and horizon must be >= 1");
  std::vector<double> sum(horizon, 0.0), sum_sq(horizon, 0.0);
  std::size_t kept = 0;
  EmpiricalCurve curve;
  curve.mu = mu;
  curve.horizon = horizon;
  curve.n_trials = n_trials;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const TrialResult r = run_trial(source, mu, horizon, stream_seed(base_seed, t), h0);
    if (r.diverged) {
      ++curve.n_diverged;
      continue;
    }
    ++kept;
    for (std::size_t n = 0; n < horizon; ++n) {
      sum[n] += r.sq_error[n];
      sum_sq[n] += r.sq_error[n] * r.sq_error[n];
    }
  }
  if (kept == 0) throw DivergenceError("monte carlo: all trials diverged", n_trials);
  const auto k = static_cast<double>(kept);
  for (std::size_t n = 0; n < horizon; ++n) {
    const double mean = sum[n] / k;
    curve.mse.push_back(mean);
    const double var = kept > 1 ? std::max(0.0, (sum_sq[n] - k * mean * mean) / (k - 1.0)) : 0.0;
    curve.std_error.push_back(std::sqrt(var / k));
  }
  return curve;
}

MomentEstimate estimate_moments(std::shared_ptr<const PhaseSampler> sampler, std::size_t n_draws_per_phase,
                                std::uint64_t seed, const MomentEstimationOptions& options) {
  if (!sampler) throw PreconditionError("estimate_moments: no sampler");
  if (n_draws_per_phase < options.min_draws || n_draws_per_phase < 2) {
    throw PreconditionError("estimate_moments: too few draws per phase");
  }
  const std::size_t period = sampler->period();
  const auto m = static_cast<Eigen::Index>(sampler->dim());
  const bool with_soi = sampler->has_soi();
  const std::size_t n2 = n_draws_per_phase;
  const std::size_t n4 = options.fourth_order_draws == 0 ? n2 : options.fourth_order_draws;

  std::vector<CVector> sx(period, CVector::Zero(m)), sxd(period, CVector::Zero(m));
  std::vector<CMatrix> sxx(period, CMatrix::Zero(m, m));
  std::vector<RMatrix> sp(period, RMatrix::Zero(m, m));
  std::vector<Complex> sd(period, 0.0);
  std::vector<double> sdd(period, 0.0);
  for (std::size_t c = 0; c < detail::kMomentChunks; ++c) {
    sampler->generate(stream_seed(seed, c), detail::chunk_draws(n2, c), [&](std::size_t, const PeriodDraw& draw) {
      for (std::size_t n = 0; n < period; ++n) {
        const CVector x = draw.x.col(static_cast<Eigen::Index>(n));
        sx[n] += x;
        sxx[n] += x * x.adjoint();
        const RVector p = x.cwiseAbs2();
        sp[n] += p * p.transpose();
        if (with_soi) {
          const Complex d = draw.d(static_cast<Eigen::Index>(n));
          sxd[n] += x * std::conj(d);
          sd[n] += d;
          sdd[n] += std::norm(d);
        }
      }
    });
  }
  const double inv2 = 1.0 / static_cast<double>(n2);
  std::vector<CVector> means, cross;
  std::vector<CMatrix> covs;
  std::vector<RMatrix> cov_se;
  std::vector<double> power;
  for (std::size_t n = 0; n < period; ++n) {
    means.push_back(sx[n] * inv2);
    const CMatrix c = sxx[n] * inv2 - means[n] * means[n].adjoint();
    covs.push_back(0.5 * (c + c.adjoint()));
    cov_se.push_back(((sp[n] * inv2 - covs[n].cwiseAbs2()).cwiseMax(0.0) * inv2).cwiseSqrt());
    if (with_soi) {
      const Complex md = sd[n] * inv2;
      cross.push_back(sxd[n] * inv2 - means[n] * std::conj(md));
      power.push_back(sdd[n] * inv2 - std::norm(md));
    }
  }
  MomentEstimate out;
  out.mean = PeriodicSequence<CVector>(means);
  out.model.covariance = PeriodicSequence<CMatrix>(covs);
  out.model.covariance_stderr = PeriodicSequence<RMatrix>(cov_se);
  out.model.second_order_draws = n2;
  out.model.sampler = sampler;
  if (with_soi) out.soi = SoiMoments{PeriodicSequence<CVector>(cross), PeriodicSequence<double>(power)};

  const Eigen::Index m2 = m * m;
  if (!options.estimate_fourth) {
    out.model.fourth = PeriodicSequence<CMatrix>(std::vector<CMatrix>(period, CMatrix::Zero(m2, m2)));
    out.model.fourth_stderr = PeriodicSequence<RMatrix>(std::vector<RMatrix>(period, RMatrix::Zero(m2, m2)));
    return out;
  }
  std::vector<CMatrix> szz(period, CMatrix::Zero(m2, m2));
  std::vector<RMatrix> sww(period, RMatrix::Zero(m2, m2));
  const std::uint64_t seed4 = mix64(seed ^ detail::kFourthStreamTag);
  CVector z(m2);
  for (std::size_t c = 0; c < detail::kMomentChunks; ++c) {
    sampler->generate(stream_seed(seed4, c), detail::chunk_draws(n4, c), [&](std::size_t, const PeriodDraw& draw) {
      for (std::size_t n = 0; n < period; ++n) {
        const CVector xc = draw.x.col(static_cast<Eigen::Index>(n)) - means[n];
        z = kron(CVector(xc.conjugate()), xc);
        szz[n] += z * z.adjoint();
        const RVector w = z.cwiseAbs2();
        sww[n] += w * w.transpose();
      }
    });
  }
  const double inv4 = 1.0 / static_cast<double>(n4);
  std::vector<CMatrix> fourth;
  std::vector<RMatrix> fourth_se;
  for (std::size_t n = 0; n < period; ++n) {
    fourth.push_back(detail::symmetrize_fourth(szz[n] * inv4, m));
    fourth_se.push_back(((sww[n] * inv4 - fourth[n].cwiseAbs2()).cwiseMax(0.0) * inv4).cwiseSqrt());
  }
  out.model.fourth = PeriodicSequence<CMatrix>(fourth);
  out.model.fourth_stderr = PeriodicSequence<RMatrix>(fourth_se);
  out.model.fourth_order_draws = n4;
  return out;
}

}  // namespace cyclolms::reference
