#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>

#include "cyclolms/signal_models.hpp"

namespace cyclolms {

struct MomentEstimationOptions {
  std::size_t min_draws = 100000;
  /// Draws per phase used for the fourth-order tensor; 0 means "same as the
  /// second-order draws". Fourth-order draws come from an independent stream.
  std::size_t fourth_order_draws = 0;
  bool estimate_fourth = true;
};

/// Second-order statistics between x[n] and the SOI d[n].
struct SoiMoments {
  PeriodicSequence<CVector> cross;  // E{x d*}
  PeriodicSequence<double> power;   // E{|d|^2}
};

struct MomentEstimate {
  EmpiricalModel model;
  PeriodicSequence<CVector> mean;  // removed before forming the moments
  std::optional<SoiMoments> soi;
};

/// Per-phase sample moments of a sampler: mean-removed covariance, the dense
/// fourth-order tensor and standard errors. Draws are split into a fixed
/// number of seeded chunks processed in parallel and merged in chunk order,
/// so the result does not depend on the thread count.
MomentEstimate estimate_moments(std::shared_ptr<const PhaseSampler> sampler,
                                std::size_t n_draws_per_phase, std::uint64_t seed,
                                const MomentEstimationOptions& options = {});

namespace reference {
/// Same draws and estimator as estimate_moments, accumulated one draw at a
/// time on a single thread.
MomentEstimate estimate_moments(std::shared_ptr<const PhaseSampler> sampler,
                                std::size_t n_draws_per_phase, std::uint64_t seed,
                                const MomentEstimationOptions& options = {});
}  // namespace reference

namespace detail {
inline constexpr std::size_t kMomentChunks = 64;
inline constexpr std::uint64_t kFourthStreamTag = 0x4f75727468ULL;
/// Draws assigned to chunk c when n draws are split into kMomentChunks.
inline std::size_t chunk_draws(std::size_t n, std::size_t c) {
  const std::size_t base = n / kMomentChunks;
  return base + (c < n % kMomentChunks ? 1 : 0);
}
/// Average of T over the swaps p1<->p3 and p2<->p4 (EmpiricalModel layout).
CMatrix symmetrize_fourth(const CMatrix& t, Eigen::Index m);
}  // namespace detail

}  // namespace cyclolms
