#include "cyclolms/lms_theory.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace cyclolms {

namespace {

constexpr double kSingularFloor = 1e-12;

bool below_one(double rho) { return rho < 1.0 - kBoundaryTol; }

CMatrix mean_factor(const CMatrix& c, double mu) {
  return CMatrix::Identity(c.rows(), c.cols()) - mu * c;
}

CVector gg_vector(const CVector& g) { return kron(g, CVector(g.conjugate())); }

// Per-phase pieces of the dual recursion that do not depend on the state.
struct DualCache {
  std::vector<CMatrix> Ft;
  std::vector<CMatrix> Pt;
  std::vector<CVector> forcing;  // mu^2 B^T (g kron g*) + mu^2 sigma^2 conj(c_x)

  DualCache(const MomentMatrixSet& mm, const GroundTruth& gt, std::size_t period) {
    const double mu = mm.mu();
    for (std::size_t k = 0; k < period; ++k) {
      const auto n = static_cast<std::int64_t>(k);
      Ft.push_back(mm.F(n).transpose());
      Pt.push_back(mm.P(n).transpose());
      const CVector& g = gt.deviation.at(n);
      forcing.push_back((mu * mu) * (mm.B(n).transpose() * gg_vector(g)) +
                        (mu * mu * gt.noise_variance.at(n)) * CVector(mm.c_x(n).conjugate()));
    }
  }
};

std::size_t common_period(const MomentMatrixSet& mm, const GroundTruth& gt) {
  return lcm(mm.period(), gt.period());
}

void check_dims(const MomentMatrixSet& mm, const GroundTruth& gt) {
  if (mm.dim() != gt.dim()) throw DimensionError("moment matrices and ground truth differ in M");
}

// Largest passing point of a predicate: coarse sweep, then bisection.
ThresholdSearch grid_search(const std::function<bool(double)>& pass, const ThresholdGrid& grid) {
  if (!(grid.step > 0.0) || !(grid.stop > 0.0) || grid.refinements < 0) {
    throw PreconditionError("threshold grid needs positive step and stop");
  }
  const double first = std::max(grid.start, grid.step);
  double last_pass = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double mu = first + static_cast<double>(i) * grid.step;
    if (mu > grid.stop) return {last_pass, true};
    if (pass(mu)) {
      last_pass = mu;
      continue;
    }
    if (i == 0) return {0.0, false};
    double lo = last_pass;
    double hi = mu;
    for (int r = 0; r < grid.refinements; ++r) {
      const double mid = 0.5 * (lo + hi);
      if (pass(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return {lo, false};
  }
}

double rho_mean_product(const MomentBasis& basis, double mu) {
  CMatrix prod = CMatrix::Identity(static_cast<Eigen::Index>(basis.dim), static_cast<Eigen::Index>(basis.dim));
  for (std::size_t k = 0; k < basis.period(); ++k) {
    prod = mean_factor(basis.covariance.at(static_cast<std::int64_t>(k)), mu) * prod;
  }
  return spectral_radius(prod);
}

double rho_ms_product(const MomentBasis& basis, double mu) {
  const auto m2 = static_cast<Eigen::Index>(basis.dim * basis.dim);
  CMatrix prod = CMatrix::Identity(m2, m2);
  for (std::size_t k = 0; k < basis.period(); ++k) {
    const auto n = static_cast<std::int64_t>(k);
    prod = build_F(basis.A.at(n), basis.B.at(n), mu) * prod;
  }
  return spectral_radius(prod);
}

std::pair<double, double> hermitian_extremes(const CMatrix& c) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigen-solver did not converge");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace

CVector mean_step(const CVector& m, std::int64_t n, const MomentMatrixSet& mm, const GroundTruth& gt) {
  const CMatrix& c = mm.covariance(n);
  return m - mm.mu() * (c * (m + gt.deviation.at(n)));
}

CVector dual_weight_step(const CVector& w, const CVector& m, std::int64_t n, const MomentMatrixSet& mm,
                         const GroundTruth& gt) {
  const double mu = mm.mu();
  const CVector& g = gt.deviation.at(n);
  CVector out = mm.F(n).transpose() * w;
  out += (mu * mu) * (mm.B(n).transpose() * gg_vector(g));
  out -= (2.0 * mu) * hermitian_part(mm.P(n).transpose() * kron(g, CVector(m.conjugate())));
  out += (mu * mu * gt.noise_variance.at(n)) * CVector(mm.c_x(n).conjugate());
  return out;
}

double transient_mse(const CVector& w, const CVector& m, std::int64_t n, const MomentMatrixSet& mm,
                     const GroundTruth& gt) {
  const CMatrix& c = mm.covariance(n);
  const CVector& g = gt.deviation.at(n);
  const CVector cg = c * g;
  const Complex value = (w.array() * mm.c_x(n).array()).sum() + 2.0 * std::real(cg.dot(m)) + g.dot(cg) +
                        gt.noise_variance.at(n);
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    throw NumericalError("transient_mse: non-finite value at n = " + std::to_string(n));
  }
  if (std::abs(value.imag()) > kImagResidueTol * (1.0 + std::abs(value.real()))) {
    std::ostringstream msg;
    msg << "transient_mse: imaginary residue " << value.imag() << " at n = " << n;
    throw ConsistencyError(msg.str());
  }
  return value.real();
}

CVector initial_mean(const GroundTruth& gt, const CVector& h0) {
  if (h0.size() == 0) return gt.h_ta;
  if (h0.size() != gt.h_ta.size()) throw DimensionError("initial filter has the wrong length");
  return gt.h_ta - h0;
}

CVector initial_dual(const GroundTruth& gt, const CVector& h0) {
  const CVector m0 = initial_mean(gt, h0);
  return vec(CMatrix((m0 * m0.adjoint()).conjugate()));
}

TheoryTrace run_theory(const MomentMatrixSet& mm, const GroundTruth& gt, std::size_t horizon,
                       const CVector& h0, bool keep_vectors) {
  if (horizon < 1) throw PreconditionError("run_theory: horizon must be at least 1");
  check_dims(mm, gt);
  const std::size_t period = common_period(mm, gt);
  const DualCache cache(mm, gt, period);
  const double mu = mm.mu();

  TheoryTrace trace;
  trace.mu = mu;
  trace.horizon = horizon;
  trace.mse.reserve(horizon);
  if (keep_vectors) {
    trace.mean.reserve(horizon);
    trace.dual_weight.reserve(horizon);
  }
  CVector m = initial_mean(gt, h0);
  CVector w = initial_dual(gt, h0);
  CVector next_w(w.size());
  for (std::size_t i = 0; i < horizon; ++i) {
    const auto n = static_cast<std::int64_t>(i);
    const std::size_t k = i % period;
    trace.mse.push_back(transient_mse(w, m, n, mm, gt));
    if (keep_vectors) {
      trace.mean.push_back(m);
      trace.dual_weight.push_back(w);
    }
    const CVector& g = gt.deviation.at(n);
    next_w.noalias() = cache.Ft[k] * w;
    next_w += cache.forcing[k];
    next_w -= (2.0 * mu) * hermitian_part(cache.Pt[k] * kron(g, CVector(m.conjugate())));
    w.swap(next_w);
    m = mean_step(m, n, mm, gt);
  }
  trace.final_mean = m;
  trace.final_dual = w;
  return trace;
}

MeanConvergence check_mean_convergence(const MomentMatrixSet& mm) {
  const std::size_t period = mm.period();
  const PeriodicSequence<CMatrix> phi = PeriodicSequence<CMatrix>::generate(
      period, [&](std::size_t k) { return mean_factor(mm.covariance(static_cast<std::int64_t>(k)), mm.mu()); });
  MeanConvergence out;
  out.convergent = true;
  for (std::size_t k = 0; k < period; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const double rho = spectral_radius(periodic_product(phi, kk, kk));
    out.rho.push_back(rho);
    out.convergent = out.convergent && below_one(rho);
  }
  return out;
}

std::vector<std::size_t> singular_covariance_phases(const MomentBasis& basis) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < basis.period(); ++k) {
    const auto [lo, hi] = hermitian_extremes(basis.covariance.at(static_cast<std::int64_t>(k)));
    if (lo <= kSingularFloor * std::max(hi, std::numeric_limits<double>::min())) out.push_back(k);
  }
  return out;
}

StabilityReport check_ms_stability(const MomentMatrixSet& mm) {
  StabilityReport report;
  report.mu = mm.mu();
  const MeanConvergence mean = check_mean_convergence(mm);
  report.rho_mean = mean.rho;
  report.mean_convergent = mean.convergent;
  for (std::size_t k : singular_covariance_phases(mm.basis())) {
    report.precondition_flags.push_back("singular_covariance_phase_" + std::to_string(k));
  }
  report.inconclusive = !report.precondition_flags.empty();
  bool all_below = true;
  for (std::size_t k = 0; k < mm.period(); ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const double rho = spectral_radius(periodic_product(mm.F_sequence(), kk, kk));
    report.rho_ms.push_back(rho);
    all_below = all_below && below_one(rho);
  }
  report.ms_stable = all_below && report.mean_convergent && !report.inconclusive;
  return report;
}

ThresholdSearch search_mu_threshold(const std::shared_ptr<const MomentBasis>& basis,
                                    StabilityPredicate predicate, const ThresholdGrid& grid) {
  if (!basis) throw PreconditionError("search_mu_threshold: no basis");
  const MomentBasis& b = *basis;
  if (predicate == StabilityPredicate::kMeanConvergence) {
    return grid_search([&](double mu) { return below_one(rho_mean_product(b, mu)); }, grid);
  }
  return grid_search(
      [&](double mu) { return below_one(rho_mean_product(b, mu)) && below_one(rho_ms_product(b, mu)); }, grid);
}

SufficientMean sufficient_mu_mean(const MomentBasis& basis, const ThresholdGrid& grid) {
  std::vector<std::pair<double, double>> ext;
  SufficientMean out;
  out.mu_mean_eig_bound = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < basis.period(); ++k) {
    ext.push_back(hermitian_extremes(basis.covariance.at(static_cast<std::int64_t>(k))));
    if (ext.back().second <= 0.0) throw PreconditionError("covariance with no positive eigenvalue");
    out.mu_mean_eig_bound = std::min(out.mu_mean_eig_bound, 2.0 / ext.back().second);
  }
  out.mu_mean_product_bound = grid_search(
                   [&](double mu) {
                     double prod = 1.0;
                     for (const auto& [lo, hi] : ext) prod *= std::max(1.0 - mu * lo, mu * hi - 1.0);
                     return prod < 1.0;
                   },
                   grid)
                   .mu;
  return out;
}

double sufficient_mu_ms(const MomentBasis& basis) {
  if (!singular_covariance_phases(basis).empty()) {
    throw SingularMatrixError("sufficient_mu_ms: A[k] is singular for a singular covariance", 0.0);
  }
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < basis.period(); ++k) {
    const auto n = static_cast<std::int64_t>(k);
    const CMatrix& a = basis.A.at(n);
    const CMatrix& b = basis.B.at(n);
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> ges(0.5 * (b + b.adjoint()), 0.5 * (a + a.adjoint()),
                                                          Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success) throw NumericalError("sufficient_mu_ms: generalized eigen-solver failed");
    const double lam_ab = ges.eigenvalues().maxCoeff();
    if (lam_ab > 0.0) out = std::min(out, 1.0 / lam_ab);
    const std::optional<double> lam_h = max_real_eig(basis.H.at(n));
    if (lam_h && *lam_h > 0.0) out = std::min(out, 1.0 / *lam_h);
  }
  return out;
}

Thresholds compute_thresholds(const std::shared_ptr<const MomentBasis>& basis, const ThresholdGrid& grid) {
  Thresholds t;
  const auto singular = singular_covariance_phases(*basis);
  for (std::size_t k : singular) t.precondition_flags.push_back("singular_covariance_phase_" + std::to_string(k));
  if (singular.empty()) {
    const SufficientMean sm = sufficient_mu_mean(*basis, grid);
    t.mu_mean_product_bound = sm.mu_mean_product_bound;
    t.mu_mean_eig_bound = sm.mu_mean_eig_bound;
    t.mu_ms_sufficient = sufficient_mu_ms(*basis);
  }
  const ThresholdSearch mean_search = search_mu_threshold(basis, StabilityPredicate::kMeanConvergence, grid);
  const ThresholdSearch ms_search = search_mu_threshold(basis, StabilityPredicate::kMeanSquare, grid);
  t.mu_mean_exact = mean_search.mu;
  t.mu_ms_exact = ms_search.mu;
  t.capped = mean_search.capped || ms_search.capped;
  return t;
}

std::variant<SteadyState, StabilityReport> steady_state(const MomentMatrixSet& mm, const GroundTruth& gt) {
  check_dims(mm, gt);
  StabilityReport report = check_ms_stability(mm);
  if (!report.ms_stable) return report;

  const std::size_t period = common_period(mm, gt);
  const double mu = mm.mu();
  const auto m = static_cast<Eigen::Index>(mm.dim());
  const PeriodicSequence<CMatrix> phi = PeriodicSequence<CMatrix>::generate(
      period, [&](std::size_t k) { return mean_factor(mm.covariance(static_cast<std::int64_t>(k)), mu); });

  SteadyState ss;
  ss.mu = mu;
  // s_k = (I - Phi_k)^-1 sum_{l=k}^{N0-1+k} Phi(l+1, k) C_x[l] g[l]
  for (std::size_t k = 0; k < period; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    CVector acc = CVector::Zero(m);
    for (std::int64_t l = kk; l <= static_cast<std::int64_t>(period) - 1 + kk; ++l) {
      acc += periodic_product(phi, l + 1, kk) * (mm.covariance(l) * gt.deviation.at(l));
    }
    const CMatrix lhs = CMatrix::Identity(m, m) - periodic_product(phi, kk, kk);
    ss.s.push_back(solve(lhs, acc));
    ss.mean_limit.push_back(-mu * ss.s.back());
  }
  for (std::size_t k = 0; k < period; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const CVector& g = gt.deviation.at(kk);
    ss.p.push_back(mm.B(kk).transpose() * gg_vector(g) +
                   2.0 * hermitian_part(mm.P(kk).transpose() * kron(g, CVector(ss.s[k].conjugate()))) +
                   gt.noise_variance.at(kk) * CVector(mm.c_x(kk).conjugate()));
  }
  // Periodic fixed point of w[n+1] = F^T[n] w[n] + mu^2 p_n.
  const auto m2 = m * m;
  CVector acc = CVector::Zero(m2);
  CMatrix psi = CMatrix::Identity(m2, m2);
  for (std::size_t l = 0; l < period; ++l) {
    const CMatrix ft = mm.F(static_cast<std::int64_t>(l)).transpose();
    acc = ft * acc + (mu * mu) * ss.p[l];
    psi = ft * psi;
  }
  CVector w = solve(CMatrix(CMatrix::Identity(m2, m2) - psi), acc);
  for (std::size_t k = 0; k < period; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    ss.dual_limit.push_back(w);
    ss.xi.push_back(transient_mse(w, ss.mean_limit[k], kk, mm, gt));
    w = mm.F(kk).transpose() * w + (mu * mu) * ss.p[k];
  }
  double sum = 0.0;
  for (double x : ss.xi) sum += x;
  ss.ta_mse = sum / static_cast<double>(period);
  return ss;
}

PeriodicityCheck detect_asymptotic_periodicity(const std::vector<double>& seq, std::size_t period,
                                               std::size_t window, double tol) {
  if (period == 0 || window == 0) throw PreconditionError("periodicity check needs period and window >= 1");
  if (seq.size() < 2 * window * period) {
    throw PreconditionError("periodicity check needs at least 2 * window * period samples");
  }
  PeriodicityCheck out;
  out.periodic = true;
  const std::size_t len = seq.size();
  for (std::size_t k = 0; k < period; ++k) {
    // last index congruent to k
    std::size_t last = len - 1 - ((len - 1 + period - k) % period);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      const double v = seq[last - j * period];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    const double mean = sum / static_cast<double>(window);
    out.limits.push_back(mean);
    out.spread.push_back(hi - lo);
    if (!(hi - lo < tol * (1.0 + std::abs(mean)))) out.periodic = false;
  }
  return out;
}

}  // namespace cyclolms
