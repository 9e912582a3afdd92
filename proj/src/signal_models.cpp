#include "cyclolms/signal_models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace cyclolms {

namespace {

constexpr double kPsdTol = 1e-10;
constexpr double kWeightTol = 1e-12;

std::size_t variant_period(const InputModel::Base& base) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          return lcm(m.speckle_cov.period(), m.texture.period());
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          std::size_t p = m.weights.period();
          for (const auto& c : m.component_covs) p = lcm(p, c.period());
          return p;
        } else {
          return m.covariance.period();
        }
      },
      base);
}

std::size_t variant_dim(const InputModel::Base& base) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          return static_cast<std::size_t>(m.speckle_cov.at(0).rows());
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          if (m.component_covs.empty()) throw PreconditionError("mixture needs at least one component");
          return static_cast<std::size_t>(m.component_covs.front().at(0).rows());
        } else {
          return static_cast<std::size_t>(m.covariance.at(0).rows());
        }
      },
      base);
}

void check_square(const CMatrix& c, std::size_t dim, std::string_view what) {
  if (c.rows() != static_cast<Eigen::Index>(dim) || c.cols() != static_cast<Eigen::Index>(dim)) {
    throw DimensionError(std::string(what) + ": expected a " + std::to_string(dim) + "x" +
                         std::to_string(dim) + " matrix");
  }
}

// Isserlis for a proper complex Gaussian with covariance c.
Complex isserlis(const CMatrix& c, std::size_t p1, std::size_t p2, std::size_t p3, std::size_t p4) {
  const auto i = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  return c(i(p1), i(p2)) * c(i(p3), i(p4)) + c(i(p1), i(p4)) * c(i(p3), i(p2));
}

}  // namespace

// ---------------------------------------------------------------- Texture

Texture Texture::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw PreconditionError("constant texture must be positive and finite");
  }
  return Texture(Kind::kConstant, value);
}

Texture Texture::student_t(double nu) {
  if (!(nu > 4.0) || !std::isfinite(nu)) {
    throw PreconditionError("student-t texture needs nu > 4 for bounded fourth-order moments");
  }
  return Texture(Kind::kStudentT, nu);
}

double Texture::mean() const {
  if (kind_ == Kind::kConstant) return parameter_;
  return parameter_ / (parameter_ - 2.0);
}

double Texture::second_moment() const {
  if (kind_ == Kind::kConstant) return parameter_ * parameter_;
  const double nu = parameter_;
  return nu * nu / ((nu - 2.0) * (nu - 4.0));
}

double Texture::draw(Rng& rng) const {
  if (kind_ == Kind::kConstant) return parameter_;
  std::chi_squared_distribution<double> chi2(parameter_);
  return parameter_ / chi2(rng);
}

// ---------------------------------------------------------------- helpers

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCompoundGaussian: return "compound_gaussian";
    case ModelKind::kGaussianMixture: return "gaussian_mixture";
    case ModelKind::kEmpirical: return "empirical";
  }
  return "unknown";
}

void require_hermitian_psd(const CMatrix& c, std::string_view what) {
  if (!c.allFinite()) throw PreconditionError(std::string(what) + " has non-finite entries");
  if (hermitian_defect(c) > kPsdTol) {
    throw PreconditionError(std::string(what) + " is not Hermitian");
  }
  const CMatrix h = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -kPsdTol * scale) {
    std::ostringstream msg;
    msg << what << " is not positive semi-definite (min eigenvalue " << es.eigenvalues().minCoeff()
        << ")";
    throw PreconditionError(msg.str());
  }
}

CMatrix psd_sqrt(const CMatrix& c) {
  const CMatrix h = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.cast<Complex>().asDiagonal();
}

CVector draw_gaussian(const CMatrix& factor, Rng& rng) {
  CVector w(factor.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = complex_normal(rng);
  return factor * w;
}

// ---------------------------------------------------------------- InputModel

InputModel::InputModel(Base base, std::optional<PeriodicSequence<double>> envelope)
    : base_(std::move(base)), envelope_(std::move(envelope)) {
  dim_ = variant_dim(base_);
  period_ = variant_period(base_);
  if (envelope_) {
    period_ = lcm(period_, envelope_->period());
    for (double a : envelope_->values()) {
      if (!std::isfinite(a)) throw PreconditionError("envelope must be finite");
    }
  }
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          std::vector<CMatrix> f;
          for (const auto& c : m.speckle_cov.values()) {
            check_square(c, dim_, "speckle covariance");
            require_hermitian_psd(c, "speckle covariance");
            f.push_back(psd_sqrt(c));
          }
          factors_.push_back(std::move(f));
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          for (const auto& w : m.weights.values()) {
            if (w.size() != static_cast<Eigen::Index>(m.component_covs.size())) {
              throw DimensionError("mixture weights must have one entry per component");
            }
            if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > kWeightTol) {
              throw PreconditionError("mixture weights must be a probability vector");
            }
          }
          for (const auto& comp : m.component_covs) {
            std::vector<CMatrix> f;
            for (const auto& c : comp.values()) {
              check_square(c, dim_, "mixture component covariance");
              require_hermitian_psd(c, "mixture component covariance");
              f.push_back(psd_sqrt(c));
            }
            factors_.push_back(std::move(f));
          }
        } else {
          for (const auto& c : m.covariance.values()) check_square(c, dim_, "empirical covariance");
          for (const auto& t : m.fourth.values()) {
            check_square(t, dim_ * dim_, "empirical fourth-moment matrix");
          }
          if (m.fourth.period() != m.covariance.period()) {
            throw DimensionError("empirical moments must share one period");
          }
        }
      },
      base_);
}

ModelKind InputModel::kind() const {
  return static_cast<ModelKind>(base_.index());
}

CMatrix InputModel::covariance(std::int64_t n) const {
  const double a = envelope_at(n);
  return std::visit(
      [&](const auto& m) -> CMatrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          return (a * a * m.texture.at(n).mean()) * m.speckle_cov.at(n);
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          const RVector& w = m.weights.at(n);
          CMatrix c = CMatrix::Zero(dim_, dim_);
          for (std::size_t k = 0; k < m.component_covs.size(); ++k) {
            c += w(static_cast<Eigen::Index>(k)) * m.component_covs[k].at(n);
          }
          return (a * a) * c;
        } else {
          return (a * a) * m.covariance.at(n);
        }
      },
      base_);
}

Complex InputModel::fourth_moment(std::int64_t n, std::size_t p1, std::size_t p2, std::size_t p3,
                                  std::size_t p4) const {
  if (p1 >= dim_ || p2 >= dim_ || p3 >= dim_ || p4 >= dim_) {
    throw DimensionError("fourth_moment: index out of range");
  }
  const double a = envelope_at(n);
  const double a4 = a * a * a * a;
  return std::visit(
      [&](const auto& m) -> Complex {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          return a4 * m.texture.at(n).second_moment() * isserlis(m.speckle_cov.at(n), p1, p2, p3, p4);
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          const RVector& w = m.weights.at(n);
          Complex acc = 0.0;
          for (std::size_t k = 0; k < m.component_covs.size(); ++k) {
            acc += w(static_cast<Eigen::Index>(k)) * isserlis(m.component_covs[k].at(n), p1, p2, p3, p4);
          }
          return a4 * acc;
        } else {
          const auto dim = static_cast<Eigen::Index>(dim_);
          const auto row = static_cast<Eigen::Index>(p2) * dim + static_cast<Eigen::Index>(p3);
          const auto col = static_cast<Eigen::Index>(p1) * dim + static_cast<Eigen::Index>(p4);
          return a4 * m.fourth.at(n)(row, col);
        }
      },
      base_);
}

CVector InputModel::sample(std::int64_t n, Rng& rng) const {
  const double a = envelope_at(n);
  return std::visit(
      [&](const auto& m) -> CVector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CompoundGaussianModel>) {
          const double tau = m.texture.at(n).draw(rng);
          const auto& f = factors_[0][wrap_index(n, factors_[0].size())];
          return (a * std::sqrt(tau)) * draw_gaussian(f, rng);
        } else if constexpr (std::is_same_v<T, GaussianMixtureModel>) {
          const RVector& w = m.weights.at(n);
          std::uniform_real_distribution<double> u01(0.0, 1.0);
          const double u = u01(rng);
          std::size_t k = 0;
          double cum = w(0);
          while (u >= cum && k + 1 < m.component_covs.size()) {
            ++k;
            cum += w(static_cast<Eigen::Index>(k));
          }
          const auto& f = factors_[k][wrap_index(n, factors_[k].size())];
          return a * draw_gaussian(f, rng);
        } else {
          if (!m.sampler) throw PreconditionError("empirical model carries no sampler");
          return a * m.sampler->draw(n, rng);
        }
      },
      base_);
}

// ---------------------------------------------------------------- samplers

CVector PhaseSampler::draw(std::int64_t n, Rng& rng) const {
  CVector out;
  const std::size_t phase = wrap_index(n, period());
  generate(rng(), 1, [&](std::size_t, const PeriodDraw& p) {
    out = p.x.col(static_cast<Eigen::Index>(phase));
  });
  return out;
}

ModelSampler::ModelSampler(std::shared_ptr<const InputModel> model, std::size_t period,
                           std::shared_ptr<const GroundTruth> gt)
    : model_(std::move(model)), period_(period), gt_(std::move(gt)) {
  if (period_ == 0) throw DimensionError("ModelSampler: period must be at least 1");
}

void ModelSampler::generate(std::uint64_t seed, std::size_t count, const Sink& sink) const {
  Rng rng(seed);
  PeriodDraw draw;
  draw.x.resize(static_cast<Eigen::Index>(model_->dim()), static_cast<Eigen::Index>(period_));
  if (gt_) draw.d.resize(static_cast<Eigen::Index>(period_));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t n = 0; n < period_; ++n) {
      const auto col = static_cast<Eigen::Index>(n);
      draw.x.col(col) = model_->sample(static_cast<std::int64_t>(n), rng);
      if (gt_) draw.d(col) = soi_sample(*gt_, draw.x.col(col), static_cast<std::int64_t>(n), rng);
    }
    sink(i, draw);
  }
}

namespace {

class IidStream final : public SignalStream {
 public:
  IidStream(const InputModel& model, const GroundTruth& gt, std::uint64_t seed)
      : model_(model), gt_(gt), rng_(seed) {}
  void next(CVector& x, Complex& d) override {
    x = model_.sample(n_, rng_);
    d = soi_sample(gt_, x, n_, rng_);
    ++n_;
  }

 private:
  const InputModel& model_;
  const GroundTruth& gt_;
  Rng rng_;
  std::int64_t n_ = 0;
};

}  // namespace

IidSource::IidSource(std::shared_ptr<const InputModel> model, std::shared_ptr<const GroundTruth> gt)
    : model_(std::move(model)), gt_(std::move(gt)) {
  if (model_->dim() != gt_->dim()) throw DimensionError("IidSource: model and ground truth differ in M");
}

std::unique_ptr<SignalStream> IidSource::open(std::uint64_t seed) const {
  return std::make_unique<IidStream>(*model_, *gt_, seed);
}

// ---------------------------------------------------------------- ground truth

CVector compute_ta_wiener(const PeriodicSequence<CVector>& h_lmmse, const InputModel& model,
                          std::size_t period) {
  const auto m = static_cast<Eigen::Index>(model.dim());
  CMatrix avg_cov = CMatrix::Zero(m, m);
  CVector avg_cross = CVector::Zero(m);
  for (std::size_t n = 0; n < period; ++n) {
    const auto t = static_cast<std::int64_t>(n);
    const CMatrix c = model.covariance(t);
    if (h_lmmse.at(t).size() != m) throw DimensionError("compute_ta_wiener: filter length differs from M");
    avg_cov += c;
    avg_cross += c * h_lmmse.at(t);
  }
  avg_cov /= static_cast<double>(period);
  avg_cross /= static_cast<double>(period);
  return solve(avg_cov, avg_cross);
}

GroundTruth make_ground_truth(PeriodicSequence<CVector> h_lmmse,
                              PeriodicSequence<double> noise_variance, const InputModel& model) {
  for (double s : noise_variance.values()) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw PreconditionError("noise variance must be non-negative");
  }
  const std::size_t period =
      lcm(lcm(model.period(), h_lmmse.period()), noise_variance.period());
  GroundTruth gt;
  gt.h_ta = compute_ta_wiener(h_lmmse, model, period);
  gt.deviation = PeriodicSequence<CVector>::generate(
      period, [&](std::size_t n) -> CVector { return h_lmmse.at(static_cast<std::int64_t>(n)) - gt.h_ta; });
  gt.h_lmmse = std::move(h_lmmse);
  gt.noise_variance = std::move(noise_variance);
  return gt;
}

Complex soi_sample(const GroundTruth& gt, const CVector& x, std::int64_t n, Rng& rng) {
  const Complex clean = gt.h_lmmse.at(n).dot(x);
  const double var = gt.noise_variance.at(n);
  if (var == 0.0) return clean;
  return clean + std::sqrt(var) * complex_normal(rng);
}

}  // namespace cyclolms
