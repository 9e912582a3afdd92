#pragma once

// Mean and mean-square analysis of LMS driven by jointly cyclostationary
// (x, d): transient MSE, convergence / stability predicates, step-size
// thresholds and the periodic steady state.
//
// The second-order state is carried as a dual vector w[n] with
// E{h~^H[n] Q h~[n]} = w[n]^T vec(Q) for every Hermitian Q, where
// h~ = h_o - h. It is propagated forward:
//   w[n+1] = F^T w + mu^2 B^T (g kron g*) - 2 mu herm(P^T (g kron m*))
//            + mu^2 sigma_v^2 conj(c_x)

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cyclolms/linalg.hpp"
#include "cyclolms/moment_matrices.hpp"
#include "cyclolms/signal_models.hpp"

namespace cyclolms {

/// Largest |imag| allowed on an MSE value, relative to (1 + |value|).
inline constexpr double kImagResidueTol = 1e-8;
/// Spectral radii within this distance of one count as "not convergent".
inline constexpr double kBoundaryTol = 1e-12;

CVector mean_step(const CVector& m, std::int64_t n, const MomentMatrixSet& mm, const GroundTruth& gt);

CVector dual_weight_step(const CVector& w, const CVector& m, std::int64_t n, const MomentMatrixSet& mm,
                         const GroundTruth& gt);

/// MSE at time n from the mean and dual vector. Throws ConsistencyError when
/// the imaginary residue exceeds kImagResidueTol * (1 + |value|).
double transient_mse(const CVector& w, const CVector& m, std::int64_t n, const MomentMatrixSet& mm,
                     const GroundTruth& gt);

/// Initial conditions for a deterministic start h[0] = h0.
CVector initial_mean(const GroundTruth& gt, const CVector& h0);
CVector initial_dual(const GroundTruth& gt, const CVector& h0);

struct TheoryTrace {
  double mu = 0.0;
  std::size_t horizon = 0;
  std::vector<CVector> mean;         // empty unless vectors were kept
  std::vector<CVector> dual_weight;  // empty unless vectors were kept
  std::vector<double> mse;
  CVector final_mean;  // state at n = horizon
  CVector final_dual;
};

/// Runs the mean / dual recursions for `horizon` iterations from h[0] = h0
/// (zero vector when empty). mse[n] is the MSE of iteration n.
TheoryTrace run_theory(const MomentMatrixSet& mm, const GroundTruth& gt, std::size_t horizon,
                       const CVector& h0 = CVector(), bool keep_vectors = true);

struct MeanConvergence {
  std::vector<double> rho;  // rho(Phi_k), k = 0..N0-1
  bool convergent = false;
};

struct StabilityReport {
  double mu = 0.0;
  std::vector<double> rho_mean;  // rho(Phi_k)
  std::vector<double> rho_ms;    // rho(Psi_k)
  bool mean_convergent = false;
  bool ms_stable = false;
  bool inconclusive = false;  // a precondition of the mean-square theorem failed
  std::vector<std::string> precondition_flags;
};

/// Products of (I - mu C_x[.]) over one period starting at each phase.
MeanConvergence check_mean_convergence(const MomentMatrixSet& mm);
StabilityReport check_ms_stability(const MomentMatrixSet& mm);

/// Phases whose covariance is singular (relative eigenvalue floor 1e-12).
std::vector<std::size_t> singular_covariance_phases(const MomentBasis& basis);

struct ThresholdGrid {
  double step = 1e-3;        // coarse sweep resolution
  double start = 0.0;        // first grid point is max(start, step)
  double stop = 100.0;       // sweep ceiling
  int refinements = 10;      // bisections inside the failing bracket
};

enum class StabilityPredicate { kMeanConvergence, kMeanSquare };

struct ThresholdSearch {
  double mu = 0.0;       // largest passing point found
  bool capped = false;   // no failure up to grid.stop
};

/// Coarse sweep until the predicate first fails, then bisection inside the
/// failing bracket. Monotonicity is not assumed beyond the first failure.
ThresholdSearch search_mu_threshold(const std::shared_ptr<const MomentBasis>& basis,
                                    StabilityPredicate predicate, const ThresholdGrid& grid = {});

struct SufficientMean {
  double mu_mean_product_bound = 0.0;  // grid-searched product-of-extreme-eigenvalues condition
  double mu_mean_eig_bound = 0.0;      // min_k 2 / lambda_max(C_x[k])
};
SufficientMean sufficient_mu_mean(const MomentBasis& basis, const ThresholdGrid& grid = {});

/// min_k min(1/lambda_max(A^-1 B), 1/lambda_max(H)), the H term dropped for
/// phases whose H has no real positive eigenvalue.
double sufficient_mu_ms(const MomentBasis& basis);

struct Thresholds {
  double mu_mean_product_bound = 0.0;
  double mu_mean_eig_bound = 0.0;
  double mu_mean_exact = 0.0;
  double mu_ms_sufficient = 0.0;
  double mu_ms_exact = 0.0;
  bool capped = false;
  std::vector<std::string> precondition_flags;
};
Thresholds compute_thresholds(const std::shared_ptr<const MomentBasis>& basis,
                              const ThresholdGrid& grid = {});

struct SteadyState {
  double mu = 0.0;
  std::vector<CVector> s;           // per phase
  std::vector<CVector> p;           // per phase
  std::vector<CVector> dual_limit;  // periodic limit of w at each phase
  std::vector<CVector> mean_limit;  // -mu s_k
  std::vector<double> xi;
  double ta_mse = 0.0;
};

/// Periodic steady state; returns the stability report instead when the
/// configuration is not mean-square stable.
std::variant<SteadyState, StabilityReport> steady_state(const MomentMatrixSet& mm, const GroundTruth& gt);

struct PeriodicityCheck {
  bool periodic = false;
  std::vector<double> limits;  // mean of the last `window` values per phase
  std::vector<double> spread;  // max - min over that window per phase
};

/// Each phase subsequence's last `window` values must have spread below
/// tol * (1 + |mean|). Needs at least 2 * window * period samples.
PeriodicityCheck detect_asymptotic_periodicity(const std::vector<double>& seq, std::size_t period,
                                               std::size_t window, double tol);

}  // namespace cyclolms
