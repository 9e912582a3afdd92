// JSON scenario documents -> Scenario objects.

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "cyclolms/scenarios.hpp"

namespace cyclolms {

namespace {

using nlohmann::json;

// A JSON value together with its dotted path, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_, msg); }

  void require_object() const {
    if (!j_.is_object()) fail("expected an object");
  }
  void allow(std::initializer_list<const char*> keys) const {
    require_object();
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) throw ConfigError(child_path(k), "unknown field");
    }
  }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }
  Node at(const std::string& key) const {
    require_object();
    if (!has(key)) throw ConfigError(child_path(key), "missing required field");
    return Node(j_.at(key), child_path(key));
  }
  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  Node operator[](std::size_t i) const {
    if (!j_.is_array() || i >= j_.size()) fail("index out of range");
    return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]");
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }
  double non_negative() const {
    const double v = number();
    if (!(v >= 0.0)) fail("must be non-negative");
    return v;
  }
  std::size_t count(std::size_t min_value = 1) const {
    if (!j_.is_number_integer() && !j_.is_number_unsigned()) fail("expected an integer");
    const auto v = j_.get<long long>();
    if (v < static_cast<long long>(min_value)) fail("must be at least " + std::to_string(min_value));
    return static_cast<std::size_t>(v);
  }
  std::uint64_t seed() const {
    if (!j_.is_number_integer() && !j_.is_number_unsigned()) fail("expected a non-negative integer seed");
    if (j_.is_number_integer() && j_.get<long long>() < 0) fail("expected a non-negative integer seed");
    return j_.get<std::uint64_t>();
  }
  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  Complex complex() const {
    if (j_.is_number()) return {number(), 0.0};
    if (j_.is_array() && j_.size() == 2) return {(*this)[0].number(), (*this)[1].number()};
    fail("expected a number or a [re, im] pair");
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
    return out;
  }
  CVector complex_vector() const {
    CVector out(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) out(static_cast<Eigen::Index>(i)) = (*this)[i].complex();
    return out;
  }
  CMatrix complex_matrix(std::size_t dim) const {
    if (size() != dim) fail("expected " + std::to_string(dim) + " rows");
    CMatrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
      const Node row = (*this)[r];
      if (row.size() != dim) row.fail("expected " + std::to_string(dim) + " columns");
      for (std::size_t c = 0; c < dim; ++c) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].complex();
      }
    }
    return out;
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& j_;
  std::string path_;
};

struct Periods {
  std::size_t nx = 1, nh = 1, nv = 1;
  std::size_t n0 = 0;  // explicit common period, 0 = least common multiple
};

// Per-phase list: either one entry (constant) or exactly `period` entries.
void check_phase_count(const Node& n, std::size_t got, std::size_t period) {
  if (got != 1 && got != period) {
    n.fail("expected 1 or " + std::to_string(period) + " entries, got " + std::to_string(got));
  }
}

PeriodicSequence<CMatrix> parse_covariance(const Node& n, std::size_t dim, std::size_t period) {
  const std::string kernel = n.at("kernel").str();
  if (kernel == "exp_phase") {
    n.allow({"kernel", "scale", "decay"});
    const double scale = n.at("scale").positive();
    const double decay = n.at("decay").non_negative();
    CMatrix c(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t l = 0; l < dim; ++l) {
        const double diff = static_cast<double>(k) - static_cast<double>(l);
        c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
            scale * std::exp(Complex(-decay * std::abs(diff), 2.0 * std::numbers::pi * diff / static_cast<double>(dim)));
      }
    }
    return PeriodicSequence<CMatrix>({c});
  }
  if (kernel == "identity") {
    n.allow({"kernel", "scale"});
    const double scale = n.at("scale").positive();
    return PeriodicSequence<CMatrix>(
        {CMatrix(scale * CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)))});
  }
  if (kernel == "explicit") {
    n.allow({"kernel", "matrices"});
    const Node list = n.at("matrices");
    check_phase_count(list, list.size(), period);
    std::vector<CMatrix> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
      CMatrix c = list[i].complex_matrix(dim);
      try {
        require_hermitian_psd(c, "covariance");
      } catch (const PreconditionError& e) {
        list[i].fail(e.what());
      }
      out.push_back(std::move(c));
    }
    return PeriodicSequence<CMatrix>(std::move(out));
  }
  n.at("kernel").fail("unknown covariance kernel '" + kernel + "'");
}

Texture parse_texture(const Node& n) {
  const std::string kind = n.at("kind").str();
  const auto build = [&](const char* field, Texture (*make)(double)) {
    n.allow({"kind", field});
    const Node v = n.at(field);
    try {
      return make(v.number());
    } catch (const PreconditionError& e) {
      v.fail(e.what());
    }
  };
  if (kind == "student_t") return build("nu", &Texture::student_t);
  if (kind == "constant") return build("value", &Texture::constant);
  n.at("kind").fail("unknown texture kind '" + kind + "'");
}

std::optional<PeriodicSequence<double>> parse_envelope(const Node& n, std::size_t period) {
  const std::string kind = n.at("kind").str();
  std::vector<double> v;
  if (kind == "cosine") {
    n.allow({"kind", "offset", "amplitude"});
    const double off = n.at("offset").number();
    const double amp = n.at("amplitude").number();
    for (std::size_t k = 0; k < period; ++k) {
      v.push_back(off + amp * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(period)));
    }
  } else if (kind == "ramp") {
    n.allow({"kind", "offset", "slope"});
    const double off = n.at("offset").number();
    const double slope = n.at("slope").number();
    for (std::size_t k = 0; k < period; ++k) {
      v.push_back(off + slope * static_cast<double>(k) / static_cast<double>(period));
    }
  } else if (kind == "constant") {
    n.allow({"kind", "value"});
    v.push_back(n.at("value").number());
  } else if (kind == "explicit") {
    n.allow({"kind", "values"});
    const Node vals = n.at("values");
    v = vals.numbers();
    check_phase_count(vals, v.size(), period);
  } else {
    n.at("kind").fail("unknown envelope kind '" + kind + "'");
  }
  return PeriodicSequence<double>(std::move(v));
}

PeriodicSequence<CVector> parse_h_m(const Node& n, std::size_t dim, std::size_t period) {
  n.allow({"time", "taps"});
  const Node time = n.at("time");
  const Node taps = n.at("taps");
  std::vector<double> factor;
  const std::string tkind = time.at("kind").str();
  if (tkind == "ramp") {
    time.allow({"kind", "offset", "slope"});
    const double off = time.has("offset") ? time.at("offset").number() : 1.0;
    const double slope = time.at("slope").number();
    for (std::size_t k = 0; k < period; ++k) {
      factor.push_back(off + slope * static_cast<double>(k) / static_cast<double>(period));
    }
  } else if (tkind == "constant") {
    time.allow({"kind", "value"});
    factor.push_back(time.has("value") ? time.at("value").number() : 1.0);
  } else if (tkind == "explicit") {
    time.allow({"kind", "values"});
    factor = time.at("values").numbers();
    check_phase_count(time.at("values"), factor.size(), period);
  } else {
    time.at("kind").fail("unknown time profile '" + tkind + "'");
  }

  CVector shape(static_cast<Eigen::Index>(dim));
  const std::string kkind = taps.at("kind").str();
  if (kkind == "exp") {
    taps.allow({"kind", "decay", "scale"});
    const double decay = taps.at("decay").number();
    const double scale = taps.has("scale") ? taps.at("scale").number() : 1.0;
    for (std::size_t k = 0; k < dim; ++k) shape(static_cast<Eigen::Index>(k)) = scale * std::exp(-decay * static_cast<double>(k));
  } else if (kkind == "linear") {
    taps.allow({"kind", "offset", "slope"});
    const double off = taps.has("offset") ? taps.at("offset").number() : 1.0;
    const double slope = taps.at("slope").number();
    for (std::size_t k = 0; k < dim; ++k) shape(static_cast<Eigen::Index>(k)) = off + slope * static_cast<double>(k);
  } else if (kkind == "explicit") {
    taps.allow({"kind", "values"});
    shape = taps.at("values").complex_vector();
    if (static_cast<std::size_t>(shape.size()) != dim) taps.at("values").fail("expected M entries");
  } else {
    taps.at("kind").fail("unknown tap profile '" + kkind + "'");
  }
  std::vector<CVector> out;
  for (double f : factor) out.push_back(f * shape);
  return PeriodicSequence<CVector>(std::move(out));
}

PeriodicSequence<double> parse_noise(const Node& n, std::size_t period) {
  const std::string kind = n.at("kind").str();
  std::vector<double> v;
  const auto two_pi = 2.0 * std::numbers::pi;
  if (kind == "inverse_phase") {
    n.allow({"kind", "scale", "amplitude"});
    const double scale = n.at("scale").non_negative();
    const double amp = n.at("amplitude").number();
    for (std::size_t k = 0; k < period; ++k) {
      const double f = 1.0 + amp / (static_cast<double>(k) + 1.0);
      v.push_back(scale * f * f);
    }
  } else if (kind == "sine") {
    n.allow({"kind", "scale", "amplitude"});
    const double scale = n.at("scale").non_negative();
    const double amp = n.at("amplitude").number();
    for (std::size_t k = 0; k < period; ++k) {
      const double f = 1.0 + amp * std::sin(two_pi * static_cast<double>(k) / static_cast<double>(period));
      v.push_back(scale * f * f);
    }
  } else if (kind == "constant") {
    n.allow({"kind", "value"});
    v.push_back(n.at("value").non_negative());
  } else if (kind == "explicit") {
    n.allow({"kind", "values"});
    const Node vals = n.at("values");
    for (std::size_t i = 0; i < vals.size(); ++i) v.push_back(vals[i].non_negative());
    check_phase_count(vals, v.size(), period);
  } else {
    n.at("kind").fail("unknown noise profile '" + kind + "'");
  }
  return PeriodicSequence<double>(std::move(v));
}

NbplcConfig parse_nbplc(const Node& n, std::size_t dim, std::uint64_t seed, const ScenarioOverrides& ov) {
  n.allow({"kind", "subcarriers", "cyclic_prefix", "channel", "noise", "moment_draws", "fourth_order_draws",
           "min_draws"});
  NbplcConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  if (n.has("subcarriers")) cfg.format.subcarriers = n.at("subcarriers").count();
  if (n.has("cyclic_prefix")) cfg.format.cyclic_prefix = n.at("cyclic_prefix").count(0);
  if (cfg.format.cyclic_prefix > cfg.format.subcarriers) n.at("cyclic_prefix").fail("exceeds the subcarrier count");
  const std::size_t block = cfg.format.block();

  const Node ch = n.at("channel");
  const std::string ckind = ch.at("kind").str();
  if (ckind == "synthetic") {
    ch.allow({"kind", "amplitudes", "angles", "depths", "offsets"});
    const auto amps = ch.at("amplitudes").numbers();
    const auto angles = ch.at("angles").numbers();
    const auto depths = ch.at("depths").numbers();
    const auto offsets = ch.at("offsets").numbers();
    if (amps.empty() || angles.size() != amps.size() || depths.size() != amps.size() ||
        offsets.size() != amps.size()) {
      ch.fail("amplitudes, angles, depths and offsets must be non-empty lists of one length");
    }
    cfg.taps = synthetic_taps(block, amps, angles, depths, offsets);
  } else if (ckind == "identity") {
    ch.allow({"kind"});
    cfg.taps = {{Complex(1.0, 0.0)}};
  } else if (ckind == "explicit") {
    ch.allow({"kind", "taps"});
    const Node taps = ch.at("taps");
    if (taps.size() == 0) taps.fail("expected at least one phase");
    for (std::size_t p = 0; p < taps.size(); ++p) {
      const CVector row = taps[p].complex_vector();
      if (row.size() == 0) taps[p].fail("expected at least one tap");
      cfg.taps.emplace_back(row.data(), row.data() + row.size());
    }
  } else {
    ch.at("kind").fail("unknown channel kind '" + ckind + "'");
  }

  const Node noise = n.at("noise");
  const std::string nkind = noise.at("kind").str();
  if (nkind == "sine") {
    noise.allow({"kind", "depth", "snr_db"});
    const double depth = noise.at("depth").number();
    if (!(std::abs(depth) < 1.0)) noise.at("depth").fail("must lie in (-1, 1)");
    std::vector<double> shape;
    for (std::size_t k = 0; k < block; ++k) {
      shape.push_back(1.0 + depth * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(block)));
    }
    cfg.noise_variance = scale_noise_to_snr(cfg.format, cfg.taps, shape, noise.at("snr_db").number());
  } else if (nkind == "none") {
    noise.allow({"kind"});
    cfg.noise_variance = {0.0};
  } else if (nkind == "explicit") {
    noise.allow({"kind", "values"});
    const Node vals = noise.at("values");
    for (std::size_t i = 0; i < vals.size(); ++i) cfg.noise_variance.push_back(vals[i].non_negative());
    if (cfg.noise_variance.empty()) vals.fail("expected at least one value");
  } else {
    noise.at("kind").fail("unknown noise kind '" + nkind + "'");
  }

  if (n.has("moment_draws")) cfg.moment_draws = n.at("moment_draws").count(2);
  if (n.has("fourth_order_draws")) cfg.fourth_order_draws = n.at("fourth_order_draws").count(2);
  if (n.has("min_draws")) cfg.min_draws = n.at("min_draws").count(0);
  if (ov.moment_draws) cfg.moment_draws = *ov.moment_draws;
  if (ov.fourth_order_draws) cfg.fourth_order_draws = *ov.fourth_order_draws;
  if (ov.min_draws) cfg.min_draws = *ov.min_draws;
  return cfg;
}

}  // namespace

std::shared_ptr<const MomentBasis> scenario_basis(const Scenario& s, FourthMomentPath path) {
  return build_basis(*s.input, s.period, path);
}

Scenario from_json(const json& doc, const ScenarioOverrides& overrides) {
  const Node root(doc, "");
  root.allow({"schema_version", "name", "M", "periods", "model", "envelope", "ground_truth", "noise", "h0",
              "default_mus", "seeds", "description"});
  const Node version = root.at("schema_version");
  if (version.count() != static_cast<std::size_t>(kScenarioSchemaVersion)) {
    version.fail("unsupported schema version (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  }
  Scenario s;
  s.config = doc;
  s.name = root.at("name").str();
  s.dim = root.at("M").count();

  Periods periods;
  if (root.has("periods")) {
    const Node p = root.at("periods");
    p.allow({"N_x", "N_h", "N_v", "N0"});
    if (p.has("N_x")) periods.nx = p.at("N_x").count();
    if (p.has("N_h")) periods.nh = p.at("N_h").count();
    if (p.has("N_v")) periods.nv = p.at("N_v").count();
    if (p.has("N0")) periods.n0 = p.at("N0").count();
  }
  std::uint64_t moment_seed = 7;
  if (root.has("seeds")) {
    const Node seeds = root.at("seeds");
    seeds.allow({"simulation", "moments"});
    if (seeds.has("simulation")) s.simulation_seed = seeds.at("simulation").seed();
    if (seeds.has("moments")) moment_seed = seeds.at("moments").seed();
  }
  if (root.has("default_mus")) {
    const Node mus = root.at("default_mus");
    for (std::size_t i = 0; i < mus.size(); ++i) s.default_mus.push_back(mus[i].positive());
  }

  const Node model = root.at("model");
  const std::string kind = model.at("kind").str();
  if (kind == "nbplc") {
    for (const char* k : {"envelope", "ground_truth", "noise"}) {
      if (root.has(k)) throw ConfigError(k, "not used by the nbplc model (the channel block defines it)");
    }
    const NbplcConfig cfg = parse_nbplc(model, s.dim, moment_seed, overrides);
    NbplcModel built = build_nbplc(cfg);
    s.input = built.input;
    s.gt = built.gt;
    s.source = built.source;
    s.period = lcm(built.source->period(), built.gt->period());
    s.assumptions = {false, false, true};
    s.notes = {
        "SOI noise independence does not hold: v[n] is the LMMSE residual of a filtered OFDM stream",
        "temporal independence does not hold: x[n] is a tapped delay line of a correlated process",
        "fourth moments are finite and periodic (QPSK symbols and Gaussian noise)",
        "moments are estimated; h_M[n] and sigma_v^2[n] follow from the orthogonality principle",
    };
  } else {
    std::optional<PeriodicSequence<double>> envelope;
    if (root.has("envelope")) envelope = parse_envelope(root.at("envelope"), periods.nx);
    InputModel::Base base;
    if (kind == "compound_gaussian") {
      model.allow({"kind", "covariance", "texture"});
      base = CompoundGaussianModel{parse_covariance(model.at("covariance"), s.dim, periods.nx),
                                   PeriodicSequence<Texture>({parse_texture(model.at("texture"))})};
    } else if (kind == "gaussian_mixture") {
      model.allow({"kind", "weights", "components"});
      const Node comps = model.at("components");
      if (comps.size() == 0) comps.fail("expected at least one component");
      GaussianMixtureModel gm;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        gm.component_covs.push_back(parse_covariance(comps[i], s.dim, periods.nx));
      }
      const Node w = model.at("weights");
      std::vector<RVector> weights;
      const bool per_phase = w.size() > 0 && w[0].raw().is_array();
      const auto parse_row = [&](const Node& row) {
        const std::vector<double> v = row.numbers();
        if (v.size() != comps.size()) row.fail("expected one weight per component");
        for (double x : v) {
          if (x < 0.0) row.fail("weights must be non-negative");
        }
        double sum = 0.0;
        for (double x : v) sum += x;
        if (std::abs(sum - 1.0) > 1e-12) row.fail("weights must sum to one");
        return RVector(Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size())));
      };
      if (per_phase) {
        check_phase_count(w, w.size(), periods.nx);
        for (std::size_t i = 0; i < w.size(); ++i) weights.push_back(parse_row(w[i]));
      } else {
        weights.push_back(parse_row(w));
      }
      gm.weights = PeriodicSequence<RVector>(std::move(weights));
      base = std::move(gm);
    } else {
      model.at("kind").fail("unknown model kind '" + kind + "'");
    }
    auto input = std::make_shared<const InputModel>(std::move(base), envelope);
    const Node gtn = root.at("ground_truth");
    gtn.allow({"h_M"});
    auto h = parse_h_m(gtn.at("h_M"), s.dim, periods.nh);
    auto noise = parse_noise(root.at("noise"), periods.nv);
    GroundTruth gt;
    try {
      gt = make_ground_truth(std::move(h), std::move(noise), *input);
    } catch (const SingularMatrixError& e) {
      throw ConfigError("model", std::string("time-averaged covariance is singular: ") + e.what());
    }
    auto gtp = std::make_shared<const GroundTruth>(std::move(gt));
    s.input = input;
    s.gt = gtp;
    s.source = std::make_shared<const IidSource>(input, gtp);
    s.period = lcm(lcm(lcm(gtp->period(), periods.nx), periods.nh), periods.nv);
    s.assumptions = {true, true, true};
    s.notes = {
        "SOI noise is Gaussian and independent of the input",
        "input is temporally independent",
        std::string("fourth moments are finite and periodic (") + std::string(to_string(input->kind())) + ")",
    };
  }

  if (periods.n0 != 0) {
    if (periods.n0 % s.period != 0) {
      throw ConfigError("periods.N0", "must be a multiple of the constituent periods (" + std::to_string(s.period) + ")");
    }
    s.period = periods.n0;
  }

  s.h0 = CVector::Zero(static_cast<Eigen::Index>(s.dim));
  if (root.has("h0")) {
    s.h0 = root.at("h0").complex_vector();
    if (static_cast<std::size_t>(s.h0.size()) != s.dim) root.at("h0").fail("expected M entries");
  }
  return s;
}

Scenario from_config(const std::string& path, const ScenarioOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc, overrides);
}

}  // namespace cyclolms
