#include "cyclolms/moment_estimation.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "parallel.hpp"

namespace cyclolms {

namespace {

constexpr Eigen::Index kBatch = 64;

// Raw first/second-order sums for one phase.
struct SecondOrderSums {
  CVector sum_x;
  CMatrix sum_xx;     // sum x x^H
  RMatrix sum_pow2;   // sum |x_i|^2 |x_j|^2
  CVector sum_xd;     // sum x d*
  Complex sum_d = 0.0;
  double sum_dd = 0.0;

  void reset(Eigen::Index m) {
    sum_x = CVector::Zero(m);
    sum_xx = CMatrix::Zero(m, m);
    sum_pow2 = RMatrix::Zero(m, m);
    sum_xd = CVector::Zero(m);
    sum_d = 0.0;
    sum_dd = 0.0;
  }
  void add(const SecondOrderSums& o) {
    sum_x += o.sum_x;
    sum_xx += o.sum_xx;
    sum_pow2 += o.sum_pow2;
    sum_xd += o.sum_xd;
    sum_d += o.sum_d;
    sum_dd += o.sum_dd;
  }
};

// Fourth-order sums for one phase, fed through rank-k updates of a batch.
struct FourthOrderSums {
  CMatrix sum_zz;   // lower triangle of sum z z^H
  RMatrix sum_ww;   // lower triangle of sum |z|^2 |z|^2^T
  CMatrix batch_z;
  RMatrix batch_w;
  Eigen::Index fill = 0;

  void reset(Eigen::Index m2) {
    sum_zz = CMatrix::Zero(m2, m2);
    sum_ww = RMatrix::Zero(m2, m2);
    batch_z.resize(m2, kBatch);
    batch_w.resize(m2, kBatch);
    fill = 0;
  }
  void push(const CVector& xc) {
    const Eigen::Index m = xc.size();
    for (Eigen::Index l = 0; l < m; ++l) {
      batch_z.col(fill).segment(l * m, m) = std::conj(xc(l)) * xc;
    }
    batch_w.col(fill) = batch_z.col(fill).cwiseAbs2();
    if (++fill == kBatch) flush();
  }
  void flush() {
    if (fill == 0) return;
    sum_zz.selfadjointView<Eigen::Lower>().rankUpdate(batch_z.leftCols(fill));
    sum_ww.selfadjointView<Eigen::Lower>().rankUpdate(batch_w.leftCols(fill));
    fill = 0;
  }
  void add(const FourthOrderSums& o) {
    sum_zz += o.sum_zz;
    sum_ww += o.sum_ww;
  }
};

}  // namespace

// Averages each entry of T(p1,p2,p3,p4) over the swaps p1<->p3 and p2<->p4,
// which leave the per-sample product unchanged. Stored layout as in
// EmpiricalModel: T(p1,p2,p3,p4) = t(p2*M + p3, p1*M + p4).
CMatrix detail::symmetrize_fourth(const CMatrix& t, Eigen::Index m) {
  CMatrix out(t.rows(), t.cols());
  const auto at = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index d) {
    return t(b * m + c, a * m + d);
  };
  for (Eigen::Index p1 = 0; p1 < m; ++p1)
    for (Eigen::Index p2 = 0; p2 < m; ++p2)
      for (Eigen::Index p3 = 0; p3 < m; ++p3)
        for (Eigen::Index p4 = 0; p4 < m; ++p4) {
          out(p2 * m + p3, p1 * m + p4) =
              0.25 * (at(p1, p2, p3, p4) + at(p3, p2, p1, p4) + at(p1, p4, p3, p2) + at(p3, p4, p1, p2));
        }
  return out;
}

MomentEstimate estimate_moments(std::shared_ptr<const PhaseSampler> sampler,
                                std::size_t n_draws_per_phase, std::uint64_t seed,
                                const MomentEstimationOptions& options) {
  if (!sampler) throw PreconditionError("estimate_moments: no sampler");
  if (n_draws_per_phase < options.min_draws || n_draws_per_phase < 2) {
    throw PreconditionError("estimate_moments: " + std::to_string(n_draws_per_phase) +
                            " draws per phase is below the configured minimum of " +
                            std::to_string(options.min_draws));
  }
  const std::size_t period = sampler->period();
  const auto m = static_cast<Eigen::Index>(sampler->dim());
  const bool with_soi = sampler->has_soi();
  const std::size_t n2 = n_draws_per_phase;
  const std::size_t n4 = options.fourth_order_draws == 0 ? n2 : options.fourth_order_draws;
  const auto nchunks = static_cast<long>(detail::kMomentChunks);

  // Pass 1: means and raw second-order sums.
  std::vector<SecondOrderSums> total(period);
  for (auto& s : total) s.reset(m);
#pragma omp parallel num_threads(detail::worker_threads())
  {
    std::vector<SecondOrderSums> local(period);
#pragma omp for ordered schedule(static, 1)
    for (long c = 0; c < nchunks; ++c) {
      for (auto& s : local) s.reset(m);
      const std::size_t count = detail::chunk_draws(n2, static_cast<std::size_t>(c));
      sampler->generate(stream_seed(seed, static_cast<std::uint64_t>(c)), count,
                        [&](std::size_t, const PeriodDraw& draw) {
                          for (std::size_t n = 0; n < period; ++n) {
                            const auto col = static_cast<Eigen::Index>(n);
                            auto& s = local[n];
                            const CVector x = draw.x.col(col);
                            s.sum_x += x;
                            s.sum_xx.noalias() += x * x.adjoint();
                            const RVector p = x.cwiseAbs2();
                            s.sum_pow2.noalias() += p * p.transpose();
                            if (with_soi) {
                              const Complex d = draw.d(col);
                              s.sum_xd += x * std::conj(d);
                              s.sum_d += d;
                              s.sum_dd += std::norm(d);
                            }
                          }
                        });
#pragma omp ordered
      for (std::size_t n = 0; n < period; ++n) total[n].add(local[n]);
    }
  }

  const double inv2 = 1.0 / static_cast<double>(n2);
  std::vector<CVector> means(period);
  std::vector<CMatrix> covs(period);
  std::vector<RMatrix> cov_se(period);
  std::vector<CVector> cross(period);
  std::vector<double> power(period);
  for (std::size_t n = 0; n < period; ++n) {
    const auto& s = total[n];
    means[n] = s.sum_x * inv2;
    CMatrix c = s.sum_xx * inv2 - means[n] * means[n].adjoint();
    covs[n] = 0.5 * (c + c.adjoint());
    const RMatrix second = s.sum_pow2 * inv2;
    cov_se[n] = ((second - covs[n].cwiseAbs2()).cwiseMax(0.0) * inv2).cwiseSqrt();
    if (with_soi) {
      const Complex mean_d = s.sum_d * inv2;
      cross[n] = s.sum_xd * inv2 - means[n] * std::conj(mean_d);
      power[n] = s.sum_dd * inv2 - std::norm(mean_d);
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

  // Pass 2: fourth-order moments of the centered draws from an independent stream.
  std::vector<FourthOrderSums> total4(period);
  for (auto& s : total4) s.reset(m2);
  const std::uint64_t seed4 = mix64(seed ^ detail::kFourthStreamTag);
#pragma omp parallel num_threads(detail::worker_threads())
  {
    std::vector<FourthOrderSums> local(period);
#pragma omp for ordered schedule(static, 1)
    for (long c = 0; c < nchunks; ++c) {
      for (auto& s : local) s.reset(m2);
      const std::size_t count = detail::chunk_draws(n4, static_cast<std::size_t>(c));
      sampler->generate(stream_seed(seed4, static_cast<std::uint64_t>(c)), count,
                        [&](std::size_t, const PeriodDraw& draw) {
                          for (std::size_t n = 0; n < period; ++n) {
                            local[n].push(draw.x.col(static_cast<Eigen::Index>(n)) - means[n]);
                          }
                        });
      for (auto& s : local) s.flush();
#pragma omp ordered
      for (std::size_t n = 0; n < period; ++n) total4[n].add(local[n]);
    }
  }

  const double inv4 = 1.0 / static_cast<double>(n4);
  std::vector<CMatrix> fourth(period);
  std::vector<RMatrix> fourth_se(period);
  for (std::size_t n = 0; n < period; ++n) {
    fourth[n] = detail::symmetrize_fourth(CMatrix(total4[n].sum_zz.selfadjointView<Eigen::Lower>()) * inv4, m);
    const RMatrix second = RMatrix(total4[n].sum_ww.selfadjointView<Eigen::Lower>()) * inv4;
    fourth_se[n] = ((second - fourth[n].cwiseAbs2()).cwiseMax(0.0) * inv4).cwiseSqrt();
  }
  out.model.fourth = PeriodicSequence<CMatrix>(fourth);
  out.model.fourth_stderr = PeriodicSequence<RMatrix>(fourth_se);
  out.model.fourth_order_draws = n4;
  return out;
}

}  // namespace cyclolms
