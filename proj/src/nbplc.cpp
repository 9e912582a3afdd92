#include "cyclolms/nbplc.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cyclolms {

namespace {

// Streaming generator: OFDM blocks -> LPTV channel -> tapped delay line.
class NbplcStream final : public SignalStream {
 public:
  NbplcStream(const NbplcConfig& cfg, std::size_t period, std::uint64_t seed)
      : cfg_(cfg), period_(period), rng_(seed) {
    const std::size_t taps = max_taps();
    d_hist_ = CVector::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(taps, 1)));
    x_ = CVector::Zero(static_cast<Eigen::Index>(cfg_.dim));
    block_.resize(cfg_.format.block());
    const double w = 2.0 * std::numbers::pi / static_cast<double>(cfg_.format.subcarriers);
    const auto k = static_cast<std::size_t>(cfg_.format.subcarriers);
    twiddle_.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    const double norm = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t f = 0; f < k; ++f) {
        twiddle_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) =
            norm * std::polar(1.0, w * static_cast<double>(t * f % k));
      }
    }
    // pre-roll so that x[0] carries r[-1], ..., r[-M+1]
    n_ = -static_cast<std::int64_t>(cfg_.format.block());
    Complex d;
    while (n_ < 0) step(d);
  }

  void next(CVector& x, Complex& d) override {
    step(d);
    x = x_;
  }

 private:
  std::size_t max_taps() const {
    std::size_t l = 0;
    for (const auto& t : cfg_.taps) l = std::max(l, t.size());
    return l;
  }

  void new_block() {
    const auto k = static_cast<Eigen::Index>(cfg_.format.subcarriers);
    CVector sym(k);
    std::uniform_int_distribution<int> bit(0, 1);
    const double a = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < k; ++i) {
      sym(i) = Complex(bit(rng_) ? a : -a, bit(rng_) ? a : -a);
    }
    const CVector body = twiddle_ * sym;
    const std::size_t cp = cfg_.format.cyclic_prefix;
    const auto ks = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < cp; ++i) block_[i] = body(static_cast<Eigen::Index>(ks - cp + i));
    for (std::size_t i = 0; i < ks; ++i) block_[cp + i] = body(static_cast<Eigen::Index>(i));
  }

  void step(Complex& d_out) {
    const std::size_t pos = wrap_index(n_, cfg_.format.block());
    if (pos == 0) new_block();
    const Complex d = block_[pos];
    // shift histories
    for (Eigen::Index i = d_hist_.size() - 1; i > 0; --i) d_hist_(i) = d_hist_(i - 1);
    d_hist_(0) = d;
    const auto& g = cfg_.taps[wrap_index(n_, cfg_.taps.size())];
    Complex r = 0.0;
    for (std::size_t l = 0; l < g.size(); ++l) r += g[l] * d_hist_(static_cast<Eigen::Index>(l));
    const double var = cfg_.noise_variance[wrap_index(n_, cfg_.noise_variance.size())];
    if (var > 0.0) r += std::sqrt(var) * complex_normal(rng_);
    for (Eigen::Index i = x_.size() - 1; i > 0; --i) x_(i) = x_(i - 1);
    x_(0) = r;
    d_out = d;
    ++n_;
  }

  NbplcConfig cfg_;
  std::size_t period_;
  Rng rng_;
  std::int64_t n_ = 0;
  std::vector<Complex> block_;
  CMatrix twiddle_;
  CVector d_hist_;
  CVector x_;
};

}  // namespace

LptvTaps synthetic_taps(std::size_t period, const std::vector<double>& amplitudes,
                        const std::vector<double>& angles, const std::vector<double>& depths,
                        const std::vector<double>& offsets) {
  const std::size_t taps = amplitudes.size();
  if (angles.size() != taps || depths.size() != taps || offsets.size() != taps || taps == 0) {
    throw DimensionError("synthetic_taps: amplitude, angle, depth and offset lists must share one length");
  }
  if (period == 0) throw DimensionError("synthetic_taps: period must be at least 1");
  LptvTaps out(period, std::vector<Complex>(taps));
  for (std::size_t n = 0; n < period; ++n) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(period);
    for (std::size_t l = 0; l < taps; ++l) {
      out[n][l] = std::polar(amplitudes[l], angles[l]) * (1.0 + depths[l] * std::cos(phase + offsets[l]));
    }
  }
  return out;
}

double ofdm_correlation(const OfdmFormat& fmt, std::int64_t a, std::int64_t b) {
  if (a == b) return 1.0;
  const auto blk = static_cast<std::int64_t>(fmt.block());
  const auto floor_div = [blk](std::int64_t v) { return v >= 0 ? v / blk : -((-v + blk - 1) / blk); };
  if (floor_div(a) != floor_div(b)) return 0.0;
  std::size_t pa = wrap_index(a, fmt.block());
  std::size_t pb = wrap_index(b, fmt.block());
  if (pa > pb) std::swap(pa, pb);
  // prefix sample i copies body sample subcarriers - cp + i, found at position subcarriers + i
  return (pa < fmt.cyclic_prefix && pb == pa + fmt.subcarriers) ? 1.0 : 0.0;
}

double channel_output_power(const OfdmFormat& fmt, const LptvTaps& taps, std::int64_t n) {
  const auto& g = taps[wrap_index(n, taps.size())];
  Complex acc = 0.0;
  for (std::size_t l = 0; l < g.size(); ++l) {
    for (std::size_t q = 0; q < g.size(); ++q) {
      acc += g[l] * std::conj(g[q]) *
             ofdm_correlation(fmt, n - static_cast<std::int64_t>(l), n - static_cast<std::int64_t>(q));
    }
  }
  return acc.real();
}

std::vector<double> scale_noise_to_snr(const OfdmFormat& fmt, const LptvTaps& taps,
                                       const std::vector<double>& shape, double snr_db) {
  if (shape.empty() || taps.empty()) throw DimensionError("scale_noise_to_snr: empty profile");
  const std::size_t period = lcm(lcm(fmt.block(), taps.size()), shape.size());
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t k = 0; k < period; ++k) {
    signal += channel_output_power(fmt, taps, static_cast<std::int64_t>(k));
    noise += shape[k % shape.size()];
  }
  if (!(noise > 0.0)) throw PreconditionError("scale_noise_to_snr: noise shape has no power");
  const double scale = signal / (noise * std::pow(10.0, snr_db / 10.0));
  std::vector<double> out(shape);
  for (double& v : out) v *= scale;
  return out;
}

std::size_t NbplcConfig::period() const {
  return lcm(lcm(format.block(), taps.empty() ? 1 : taps.size()),
             noise_variance.empty() ? 1 : noise_variance.size());
}

NbplcSource::NbplcSource(NbplcConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.dim == 0) throw DimensionError("nbplc: filter length must be at least 1");
  if (cfg_.format.subcarriers == 0 || cfg_.format.cyclic_prefix > cfg_.format.subcarriers) {
    throw PreconditionError("nbplc: need subcarriers >= cyclic prefix >= 0");
  }
  if (cfg_.taps.empty()) throw PreconditionError("nbplc: channel taps are missing");
  if (cfg_.noise_variance.empty()) cfg_.noise_variance = {0.0};
  for (double v : cfg_.noise_variance) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("nbplc: noise variance must be non-negative");
  }
  period_ = cfg_.period();
}

std::unique_ptr<SignalStream> NbplcSource::open(std::uint64_t seed) const {
  return std::make_unique<NbplcStream>(cfg_, period_, seed);
}

void NbplcSource::generate(std::uint64_t seed, std::size_t count, const Sink& sink) const {
  NbplcStream stream(cfg_, period_, seed);
  PeriodDraw draw;
  draw.x.resize(static_cast<Eigen::Index>(cfg_.dim), static_cast<Eigen::Index>(period_));
  draw.d.resize(static_cast<Eigen::Index>(period_));
  CVector x;
  Complex d;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t n = 0; n < period_; ++n) {
      stream.next(x, d);
      draw.x.col(static_cast<Eigen::Index>(n)) = x;
      draw.d(static_cast<Eigen::Index>(n)) = d;
    }
    sink(i, draw);
  }
}

NbplcModel build_nbplc(const NbplcConfig& cfg) {
  NbplcModel out;
  auto source = std::make_shared<const NbplcSource>(cfg);
  out.source = source;
  MomentEstimationOptions opts;
  opts.min_draws = cfg.min_draws;
  opts.fourth_order_draws = cfg.fourth_order_draws;
  out.estimate = estimate_moments(source, cfg.moment_draws, cfg.seed, opts);
  const std::size_t period = source->period();
  const auto& soi = *out.estimate.soi;
  std::vector<CVector> h(period);
  std::vector<double> var(period);
  for (std::size_t k = 0; k < period; ++k) {
    const auto n = static_cast<std::int64_t>(k);
    const CMatrix& c = out.estimate.model.covariance.at(n);
    try {
      h[k] = solve(c, soi.cross.at(n));
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError("nbplc: estimated covariance is singular at phase " + std::to_string(k) + " (" +
                                    e.what() + ")",
                                e.reciprocal_condition());
    }
    var[k] = std::max(0.0, soi.power.at(n) - std::real(h[k].dot(c * h[k])));
  }
  auto input = std::make_shared<const InputModel>(out.estimate.model);
  out.input = input;
  out.gt = std::make_shared<const GroundTruth>(
      make_ground_truth(PeriodicSequence<CVector>(h), PeriodicSequence<double>(var), *input));
  return out;
}

}  // namespace cyclolms
