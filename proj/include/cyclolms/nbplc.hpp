#pragma once

// Narrowband power-line recovery setup: an OFDM SOI (QPSK subcarriers with a
// cyclic prefix) through an LPTV channel with cyclostationary Gaussian noise.
// The receiver input is x[n] = (r[n], ..., r[n-M+1]).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "cyclolms/moment_estimation.hpp"
#include "cyclolms/signal_models.hpp"

namespace cyclolms {

struct OfdmFormat {
  std::size_t subcarriers = 36;
  std::size_t cyclic_prefix = 12;
  std::size_t block() const { return subcarriers + cyclic_prefix; }
};

/// taps[p][l] = g[n, l] for n congruent to p modulo taps.size().
using LptvTaps = std::vector<std::vector<Complex>>;

/// g[n, l] = amplitude_l e^{j angle_l} (1 + depth_l cos(2 pi n / period + offset_l)).
LptvTaps synthetic_taps(std::size_t period, const std::vector<double>& amplitudes,
                        const std::vector<double>& angles, const std::vector<double>& depths,
                        const std::vector<double>& offsets);

/// E{d[a] d*[b]} of the unit-power OFDM stream (1 on the diagonal and between
/// a cyclic-prefix sample and its source sample, 0 elsewhere).
double ofdm_correlation(const OfdmFormat& fmt, std::int64_t a, std::int64_t b);

/// E{|sum_l g[n,l] d[n-l]|^2} at phase n.
double channel_output_power(const OfdmFormat& fmt, const LptvTaps& taps, std::int64_t n);

/// Scales a non-negative noise shape so that
/// sum_k signal_power[k] / sum_k noise[k] = 10^(snr_db / 10), summed over the
/// common period.
std::vector<double> scale_noise_to_snr(const OfdmFormat& fmt, const LptvTaps& taps,
                                       const std::vector<double>& shape, double snr_db);

struct NbplcConfig {
  std::size_t dim = 8;
  OfdmFormat format;
  LptvTaps taps;                        // period divides the common period
  std::vector<double> noise_variance;   // per phase, absolute
  std::size_t moment_draws = 1000000;   // per phase, second order
  std::size_t fourth_order_draws = 100000;
  std::size_t min_draws = 100000;
  std::uint64_t seed = 48;

  std::size_t period() const;
};

/// Independent realizations of the joint (x, d) stream. Each realization
/// starts with one pre-roll block so that x[0] has a full history.
class NbplcSource final : public SignalSource, public PhaseSampler {
 public:
  explicit NbplcSource(NbplcConfig cfg);
  std::size_t dim() const override { return cfg_.dim; }
  std::size_t period() const override { return period_; }
  bool has_soi() const override { return true; }
  std::unique_ptr<SignalStream> open(std::uint64_t seed) const override;
  void generate(std::uint64_t seed, std::size_t count, const Sink& sink) const override;
  const NbplcConfig& config() const { return cfg_; }

 private:
  NbplcConfig cfg_;
  std::size_t period_;
};

struct NbplcModel {
  std::shared_ptr<const NbplcSource> source;
  std::shared_ptr<const InputModel> input;  // Empirical
  std::shared_ptr<const GroundTruth> gt;
  MomentEstimate estimate;
};

/// Estimates the moments and derives h_M[n] = C_x^-1 E{x d*} and
/// sigma_v^2[n] = E|d|^2 - h_M^H C_x h_M per phase.
NbplcModel build_nbplc(const NbplcConfig& cfg);

}  // namespace cyclolms
