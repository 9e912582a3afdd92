#include "cyclolms/scenarios.hpp"

#include <numbers>

namespace cyclolms {

namespace {

using nlohmann::json;

json example1_config() {
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"name", "example1"},
      {"description", "multivariate t input (nu = 5), cosine envelope"},
      {"M", 8},
      {"periods", {{"N_x", 40}, {"N_h", 10}, {"N_v", 5}}},
      {"model",
       {{"kind", "compound_gaussian"},
        {"covariance", {{"kernel", "exp_phase"}, {"scale", 1.0}, {"decay", 1.0}}},
        {"texture", {{"kind", "student_t"}, {"nu", 5.0}}}}},
      {"envelope", {{"kind", "cosine"}, {"offset", 1.0}, {"amplitude", 0.5}}},
      {"ground_truth",
       {{"h_M",
         {{"time", {{"kind", "ramp"}, {"offset", 1.0}, {"slope", 0.2}}},
          {"taps", {{"kind", "exp"}, {"decay", 0.5}}}}}}},
      {"noise", {{"kind", "inverse_phase"}, {"scale", 1e-6}, {"amplitude", 0.1}}},
      {"default_mus", {0.01, 0.04}},
      {"seeds", {{"simulation", 1001}, {"moments", 11}}},
  };
}

json example2_config() {
  json comps = json::array();
  for (double m : {1.0, 2.0, 3.0}) comps.push_back({{"kernel", "exp_phase"}, {"scale", 6.0}, {"decay", m}});
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"name", "example2"},
      {"description", "three-component Gaussian mixture input, ramp envelope"},
      {"M", 8},
      {"periods", {{"N_x", 40}, {"N_h", 10}, {"N_v", 5}}},
      {"model", {{"kind", "gaussian_mixture"}, {"weights", {0.1, 0.2, 0.7}}, {"components", comps}}},
      {"envelope", {{"kind", "ramp"}, {"offset", 1.0}, {"slope", 1.0}}},
      {"ground_truth",
       {{"h_M",
         {{"time", {{"kind", "ramp"}, {"offset", 1.0}, {"slope", 0.01}}},
          {"taps", {{"kind", "linear"}, {"offset", 1.0}, {"slope", 0.1}}}}}}},
      {"noise", {{"kind", "sine"}, {"scale", 1e-6}, {"amplitude", 0.1}}},
      {"default_mus", {0.005, 0.01}},
      {"seeds", {{"simulation", 2002}, {"moments", 22}}},
  };
}

json scalar_toy_config(double sigma2) {
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"name", "scalar-toy"},
      {"description", "scalar proper Gaussian input, constant filter"},
      {"M", 1},
      {"periods", {{"N_x", 1}, {"N_h", 1}, {"N_v", 1}}},
      {"model",
       {{"kind", "compound_gaussian"},
        {"covariance", {{"kernel", "identity"}, {"scale", sigma2}}},
        {"texture", {{"kind", "constant"}, {"value", 1.0}}}}},
      {"ground_truth",
       {{"h_M", {{"time", {{"kind", "constant"}, {"value", 1.0}}}, {"taps", {{"kind", "explicit"}, {"values", {1.0}}}}}}}},
      {"noise", {{"kind", "constant"}, {"value", 1e-3}}},
      {"default_mus", {0.1 / sigma2, 0.5 / sigma2}},
      {"seeds", {{"simulation", 3003}, {"moments", 33}}},
  };
}

json nbplc_config() {
  const double pi = std::numbers::pi;
  return {
      {"schema_version", kScenarioSchemaVersion},
      {"name", "nbplc-lite"},
      {"description", "OFDM signal recovery through a synthetic LPTV channel with periodic noise"},
      {"M", 8},
      {"model",
       {{"kind", "nbplc"},
        {"subcarriers", 36},
        {"cyclic_prefix", 12},
        {"channel",
         {{"kind", "synthetic"},
          {"amplitudes", {1.0, 0.5, 0.3, 0.2}},
          {"angles", {0.0, 0.7, -1.2, 2.0}},
          {"depths", {0.04, 0.03, 0.05, 0.02}},
          {"offsets", {0.0, pi / 2, pi, 3 * pi / 2}}}},
        {"noise", {{"kind", "sine"}, {"depth", 0.8}, {"snr_db", 12.0}}},
        {"moment_draws", 1000000},
        {"fourth_order_draws", 100000},
        {"min_draws", 100000}}},
      {"default_mus", {0.01, 0.05}},
      {"seeds", {{"simulation", 4004}, {"moments", 48}}},
  };
}

}  // namespace

std::vector<std::string> builtin_names() { return {"example1", "example2", "scalar-toy", "nbplc-lite"}; }

nlohmann::json builtin_config(const std::string& name) {
  if (name == "example1") return example1_config();
  if (name == "example2") return example2_config();
  if (name == "scalar-toy") return scalar_toy_config(1.0);
  if (name == "nbplc-lite") return nbplc_config();
  throw ConfigError("", "unknown built-in scenario '" + name + "'");
}

Scenario example1() { return from_json(example1_config()); }
Scenario example2() { return from_json(example2_config()); }
Scenario scalar_toy(double sigma2) {
  if (!(sigma2 > 0.0)) throw PreconditionError("scalar_toy: sigma2 must be positive");
  return from_json(scalar_toy_config(sigma2));
}
Scenario nbplc_lite(const ScenarioOverrides& overrides) { return from_json(nbplc_config(), overrides); }

Scenario load_scenario(const std::string& name_or_path, const ScenarioOverrides& overrides) {
  for (const auto& n : builtin_names()) {
    if (n == name_or_path) return from_json(builtin_config(n), overrides);
  }
  return from_config(name_or_path, overrides);
}

}  // namespace cyclolms
