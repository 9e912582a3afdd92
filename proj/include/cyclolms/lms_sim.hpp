#pragma once

// The complex LMS filter and a seeded, parallel Monte Carlo harness.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cyclolms/linalg.hpp"
#include "cyclolms/signal_models.hpp"

namespace cyclolms {

/// Trials abort once ||h||^2 exceeds this bound.
inline constexpr double kDivergenceBound = 1e12;
/// Trials are grouped into chunks of this size; chunk sums are combined by
/// pairwise reduction in chunk order.
inline constexpr std::size_t kTrialChunk = 64;

struct LmsState {
  CVector h;
  double mu = 0.0;
  bool diverged = false;
};

/// e = d - h^H x, then h += mu x e*. Marks the state diverged when h leaves
/// the finite range or ||h||^2 > kDivergenceBound.
Complex lms_step(LmsState& state, const CVector& x, Complex d);

struct TrialResult {
  std::vector<double> sq_error;  // |e[n]|^2, truncated at divergence
  bool diverged = false;
};

/// One realization of `horizon` steps from h[0] = h0 (zero when empty).
TrialResult run_trial(const SignalSource& source, double mu, std::size_t horizon, std::uint64_t seed,
                      const CVector& h0 = CVector());

struct EmpiricalCurve {
  double mu = 0.0;
  std::size_t horizon = 0;
  std::size_t n_trials = 0;
  std::size_t n_diverged = 0;
  std::vector<double> mse;     // mean over non-diverged trials
  std::vector<double> std_error;  // standard error of that mean
};

/// Trial t uses the stream stream_seed(base_seed, t). Diverged trials are
/// counted and left out of the average. Throws DivergenceError when every
/// trial diverges.
EmpiricalCurve monte_carlo_mse(const SignalSource& source, double mu, std::size_t horizon,
                               std::size_t n_trials, std::uint64_t base_seed, const CVector& h0 = CVector());

/// Number of diverged trials, without storing curves.
std::size_t count_diverged_trials(const SignalSource& source, double mu, std::size_t horizon,
                                  std::size_t n_trials, std::uint64_t base_seed, const CVector& h0 = CVector());

struct EmpiricalSteadyState {
  std::vector<double> phase_mse;
  double ta_mse = 0.0;
  std::size_t window_start = 0;
};

/// Phase-wise average of the curve over n >= settle_fraction * horizon.
EmpiricalSteadyState empirical_steady_state(const std::vector<double>& mse, std::size_t period,
                                            double settle_fraction = 0.8);

namespace reference {
/// Serial, single-accumulator versions of the Monte Carlo kernels.
EmpiricalCurve monte_carlo_mse(const SignalSource& source, double mu, std::size_t horizon,
                               std::size_t n_trials, std::uint64_t base_seed, const CVector& h0 = CVector());
}  // namespace reference

}  // namespace cyclolms
