#pragma once

// Cyclostationary input models (second- and fourth-order moments plus
// samplers) and the LPTV ground truth d[n] = h_M^H[n] x[n] + v[n].

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "cyclolms/linalg.hpp"
#include "cyclolms/random.hpp"

namespace cyclolms {

/// Positive scalar texture of a compound-Gaussian vector x = sqrt(tau) y.
class Texture {
 public:
  enum class Kind { kConstant, kStudentT };

  static Texture constant(double value);
  /// tau = nu / chi2_nu, which makes sqrt(tau) y a multivariate t with nu
  /// degrees of freedom and scatter Cov(y). Requires nu > 4 so that E{tau^2}
  /// (and with it every fourth-order moment of x) is finite.
  static Texture student_t(double nu);

  Kind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  double mean() const;
  double second_moment() const;
  double draw(Rng& rng) const;

  bool operator==(const Texture&) const = default;

 private:
  Texture(Kind kind, double parameter) : kind_(kind), parameter_(parameter) {}
  Kind kind_;
  double parameter_;
};

struct CompoundGaussianModel {
  PeriodicSequence<CMatrix> speckle_cov;  // C_y[n], Hermitian PSD
  PeriodicSequence<Texture> texture;
};

struct GaussianMixtureModel {
  PeriodicSequence<RVector> weights;                   // gamma_m[n], sums to one
  std::vector<PeriodicSequence<CMatrix>> component_covs;  // C_{G_m}[n]
};

/// One draw of x[n] (and optionally the SOI d[n]) for each phase of a period.
struct PeriodDraw {
  CMatrix x;  // M x N0, column n holds x[n]
  CVector d;  // N0 entries, empty when the sampler carries no SOI
};

/// Generator of per-phase draws. Periods produced by one generate() call may
/// be statistically dependent (streaming samplers); calls with different
/// seeds are independent.
class PhaseSampler {
 public:
  using Sink = std::function<void(std::size_t, const PeriodDraw&)>;
  virtual ~PhaseSampler() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t period() const = 0;
  virtual bool has_soi() const { return false; }
  virtual void generate(std::uint64_t seed, std::size_t count, const Sink& sink) const = 0;
  /// A single draw of x at phase n.
  virtual CVector draw(std::int64_t n, Rng& rng) const;
};

/// Moments estimated from a sampler. The fourth-order tensor
/// T(p1,p2,p3,p4) = E{x_p1 x*_p2 x_p3 x*_p4} is stored densely as the
/// M^2 x M^2 matrix E{z z^H}, z = conj(x) kron x, so that
/// T(p1,p2,p3,p4) = fourth(p2*M + p3, p1*M + p4).
struct EmpiricalModel {
  PeriodicSequence<CMatrix> covariance;
  PeriodicSequence<CMatrix> fourth;
  PeriodicSequence<RMatrix> covariance_stderr;
  PeriodicSequence<RMatrix> fourth_stderr;
  std::size_t second_order_draws = 0;
  std::size_t fourth_order_draws = 0;
  std::shared_ptr<const PhaseSampler> sampler;
};

enum class ModelKind { kCompoundGaussian, kGaussianMixture, kEmpirical };
std::string_view to_string(ModelKind kind);

/// A WSCS input process. The optional real envelope a[n] turns the base model
/// into x[n] = a[n] z[n]: covariances scale by a^2, fourth moments by a^4.
class InputModel {
 public:
  using Base = std::variant<CompoundGaussianModel, GaussianMixtureModel, EmpiricalModel>;

  explicit InputModel(Base base, std::optional<PeriodicSequence<double>> envelope = std::nullopt);

  std::size_t dim() const { return dim_; }
  std::size_t period() const { return period_; }
  ModelKind kind() const;
  const Base& base() const { return base_; }
  const std::optional<PeriodicSequence<double>>& envelope() const { return envelope_; }
  double envelope_at(std::int64_t n) const { return envelope_ ? envelope_->at(n) : 1.0; }

  CMatrix covariance(std::int64_t n) const;
  Complex fourth_moment(std::int64_t n, std::size_t p1, std::size_t p2, std::size_t p3,
                        std::size_t p4) const;
  CVector sample(std::int64_t n, Rng& rng) const;

 private:
  Base base_;
  std::optional<PeriodicSequence<double>> envelope_;
  std::size_t dim_ = 0;
  std::size_t period_ = 1;
  // Square-root factors L with L L^H = C, per phase (and per mixture component).
  std::vector<std::vector<CMatrix>> factors_;
};

/// Draws x ~ CN(0, L L^H) given the factor L.
CVector draw_gaussian(const CMatrix& factor, Rng& rng);
/// L with L L^H = c for Hermitian PSD c (negative eigenvalues clipped).
CMatrix psd_sqrt(const CMatrix& c);
/// Throws PreconditionError unless c is Hermitian PSD within tolerance.
void require_hermitian_psd(const CMatrix& c, std::string_view what);

/// LPTV ground truth. deviation[n] = h_lmmse[n] - h_ta, all sequences share
/// one period.
struct GroundTruth {
  PeriodicSequence<CVector> h_lmmse;
  PeriodicSequence<double> noise_variance;
  CVector h_ta;
  PeriodicSequence<CVector> deviation;
  std::size_t period() const { return deviation.period(); }
  std::size_t dim() const { return static_cast<std::size_t>(h_ta.size()); }
};

/// Solves the time-averaged Wiener-Hopf equations
/// (1/N0) sum_n C_x[n] h = (1/N0) sum_n C_x[n] h_lmmse[n].
CVector compute_ta_wiener(const PeriodicSequence<CVector>& h_lmmse, const InputModel& model,
                          std::size_t period);

/// Builds the ground truth on the common period of the model, the filter and
/// the noise profile.
GroundTruth make_ground_truth(PeriodicSequence<CVector> h_lmmse,
                              PeriodicSequence<double> noise_variance, const InputModel& model);

/// d = h_lmmse[n]^H x + v, v ~ CN(0, noise_variance[n]) independent of x.
Complex soi_sample(const GroundTruth& gt, const CVector& x, std::int64_t n, Rng& rng);

/// Per-phase independent draws from an InputModel; attaches d[n] when a
/// ground truth is given.
class ModelSampler final : public PhaseSampler {
 public:
  ModelSampler(std::shared_ptr<const InputModel> model, std::size_t period,
               std::shared_ptr<const GroundTruth> gt = nullptr);
  std::size_t dim() const override { return model_->dim(); }
  std::size_t period() const override { return period_; }
  bool has_soi() const override { return gt_ != nullptr; }
  void generate(std::uint64_t seed, std::size_t count, const Sink& sink) const override;
  CVector draw(std::int64_t n, Rng& rng) const override { return model_->sample(n, rng); }

 private:
  std::shared_ptr<const InputModel> model_;
  std::size_t period_;
  std::shared_ptr<const GroundTruth> gt_;
};

/// A single realization of the joint (x[n], d[n]) process, n = 0, 1, ...
class SignalStream {
 public:
  virtual ~SignalStream() = default;
  virtual void next(CVector& x, Complex& d) = 0;
};

/// Factory of independent realizations; open(seed) is deterministic in seed.
class SignalSource {
 public:
  virtual ~SignalSource() = default;
  virtual std::size_t dim() const = 0;
  virtual std::unique_ptr<SignalStream> open(std::uint64_t seed) const = 0;
};

/// Temporally independent x[n] drawn from an InputModel, d[n] from the ground
/// truth.
class IidSource final : public SignalSource {
 public:
  IidSource(std::shared_ptr<const InputModel> model, std::shared_ptr<const GroundTruth> gt);
  std::size_t dim() const override { return model_->dim(); }
  std::unique_ptr<SignalStream> open(std::uint64_t seed) const override;

 private:
  std::shared_ptr<const InputModel> model_;
  std::shared_ptr<const GroundTruth> gt_;
};

}  // namespace cyclolms
