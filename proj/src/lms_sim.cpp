#include "cyclolms/lms_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"

namespace cyclolms {

namespace {

struct ChunkSums {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::vector<std::size_t> count;
  std::size_t diverged = 0;

  void reset(std::size_t horizon) {
    sum.assign(horizon, 0.0);
    sum_sq.assign(horizon, 0.0);
    count.assign(horizon, 0);
    diverged = 0;
  }
  void add(const ChunkSums& o) {
    for (std::size_t n = 0; n < sum.size(); ++n) {
      sum[n] += o.sum[n];
      sum_sq[n] += o.sum_sq[n];
      count[n] += o.count[n];
    }
    diverged += o.diverged;
  }
};

// Sums chunks[lo, hi) into chunks[lo] by recursive halving.
void pairwise_reduce(std::vector<ChunkSums>& chunks, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  pairwise_reduce(chunks, lo, mid);
  pairwise_reduce(chunks, mid, hi);
  chunks[lo].add(chunks[mid]);
}

void require_trials(std::size_t n_trials, std::size_t horizon) {
  if (n_trials < 1) throw PreconditionError("monte carlo: n_trials must be at least 1");
  if (horizon < 1) throw PreconditionError("monte carlo: horizon must be at least 1");
}

}  // namespace

Complex lms_step(LmsState& state, const CVector& x, Complex d) {
  const Complex e = d - state.h.dot(x);
  state.h += (state.mu * std::conj(e)) * x;
  const double norm2 = state.h.squaredNorm();
  if (!std::isfinite(norm2) || norm2 > kDivergenceBound || !std::isfinite(std::norm(e))) state.diverged = true;
  return e;
}

TrialResult run_trial(const SignalSource& source, double mu, std::size_t horizon, std::uint64_t seed,
                      const CVector& h0) {
  const auto m = static_cast<Eigen::Index>(source.dim());
  LmsState state;
  state.mu = mu;
  state.h = h0.size() == 0 ? CVector::Zero(m) : h0;
  if (state.h.size() != m) throw DimensionError("run_trial: initial filter has the wrong length");
  auto stream = source.open(seed);
  TrialResult out;
  out.sq_error.reserve(horizon);
  CVector x(m);
  Complex d;
  for (std::size_t n = 0; n < horizon; ++n) {
    stream->next(x, d);
    const Complex e = lms_step(state, x, d);
    if (state.diverged) {
      out.diverged = true;
      break;
    }
    out.sq_error.push_back(std::norm(e));
  }
  return out;
}

EmpiricalCurve monte_carlo_mse(const SignalSource& source, double mu, std::size_t horizon,
                               std::size_t n_trials, std::uint64_t base_seed, const CVector& h0) {
  require_trials(n_trials, horizon);
  const std::size_t n_chunks = (n_trials + kTrialChunk - 1) / kTrialChunk;
  std::vector<ChunkSums> chunks(n_chunks);
#pragma omp parallel for schedule(dynamic) num_threads(detail::worker_threads())
  for (long c = 0; c < static_cast<long>(n_chunks); ++c) {
    ChunkSums& s = chunks[static_cast<std::size_t>(c)];
    s.reset(horizon);
    const std::size_t first = static_cast<std::size_t>(c) * kTrialChunk;
    const std::size_t last = std::min(n_trials, first + kTrialChunk);
    for (std::size_t t = first; t < last; ++t) {
      const TrialResult r = run_trial(source, mu, horizon, stream_seed(base_seed, t), h0);
      if (r.diverged) {
        ++s.diverged;
        continue;
      }
      for (std::size_t n = 0; n < horizon; ++n) {
        const double v = r.sq_error[n];
        s.sum[n] += v;
        s.sum_sq[n] += v * v;
        s.count[n] += 1;
      }
    }
  }
  pairwise_reduce(chunks, 0, n_chunks);
  const ChunkSums& total = chunks.front();

  EmpiricalCurve curve;
  curve.mu = mu;
  curve.horizon = horizon;
  curve.n_trials = n_trials;
  curve.n_diverged = total.diverged;
  if (total.diverged == n_trials) {
    throw DivergenceError("monte carlo: all " + std::to_string(n_trials) + " trials diverged", n_trials);
  }
  curve.mse.resize(horizon);
  curve.std_error.resize(horizon);
  for (std::size_t n = 0; n < horizon; ++n) {
    const auto k = static_cast<double>(total.count[n]);
    const double mean = total.sum[n] / k;
    curve.mse[n] = mean;
    const double var = k > 1 ? std::max(0.0, (total.sum_sq[n] - k * mean * mean) / (k - 1.0)) : 0.0;
    curve.std_error[n] = std::sqrt(var / k);
  }
  return curve;
}

std::size_t count_diverged_trials(const SignalSource& source, double mu, std::size_t horizon,
                                  std::size_t n_trials, std::uint64_t base_seed, const CVector& h0) {
  require_trials(n_trials, horizon);
  std::size_t diverged = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : diverged) num_threads(detail::worker_threads())
  for (long t = 0; t < static_cast<long>(n_trials); ++t) {
    if (run_trial(source, mu, horizon, stream_seed(base_seed, static_cast<std::uint64_t>(t)), h0).diverged) {
      ++diverged;
    }
  }
  return diverged;
}

EmpiricalSteadyState empirical_steady_state(const std::vector<double>& mse, std::size_t period,
                                            double settle_fraction) {
  if (period == 0) throw PreconditionError("empirical_steady_state: period must be at least 1");
  if (!(settle_fraction >= 0.0 && settle_fraction < 1.0)) {
    throw PreconditionError("empirical_steady_state: settle_fraction must lie in [0, 1)");
  }
  const std::size_t horizon = mse.size();
  const auto start = static_cast<std::size_t>(std::ceil(settle_fraction * static_cast<double>(horizon)));
  if (horizon - start < 10 * period) {
    throw PreconditionError("empirical_steady_state: fewer than 10 periods after the settle point");
  }
  EmpiricalSteadyState out;
  out.window_start = start;
  std::vector<double> sum(period, 0.0);
  std::vector<std::size_t> count(period, 0);
  for (std::size_t n = start; n < horizon; ++n) {
    sum[n % period] += mse[n];
    count[n % period] += 1;
  }
  double ta = 0.0;
  for (std::size_t k = 0; k < period; ++k) {
    out.phase_mse.push_back(sum[k] / static_cast<double>(count[k]));
    ta += out.phase_mse.back();
  }
  out.ta_mse = ta / static_cast<double>(period);
  return out;
}

}  // namespace cyclolms
