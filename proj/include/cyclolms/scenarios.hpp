#pragma once

// Ready-made experimental setups and the JSON scenario loader.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclolms/moment_matrices.hpp"
#include "cyclolms/nbplc.hpp"
#include "cyclolms/signal_models.hpp"

namespace cyclolms {

inline constexpr int kScenarioSchemaVersion = 1;

/// Which of the analysis assumptions the setup satisfies: SOI noise
/// independent of the input (noise_independent), temporally independent
/// input (input_independent), bounded periodic fourth moments
/// (bounded_fourth_moments).
struct AssumptionFlags {
  bool noise_independent = true;
  bool input_independent = true;
  bool bounded_fourth_moments = true;
  bool all() const { return noise_independent && input_independent && bounded_fourth_moments; }
};

struct Scenario {
  std::string name;
  std::size_t dim = 0;
  std::size_t period = 1;
  std::shared_ptr<const InputModel> input;
  std::shared_ptr<const GroundTruth> gt;
  std::shared_ptr<const SignalSource> source;
  std::vector<double> default_mus;
  CVector h0;  // initial filter
  AssumptionFlags assumptions;
  std::vector<std::string> notes;
  std::uint64_t simulation_seed = 1;
  nlohmann::json config;  // the document the scenario was built from
};

/// Moment matrices of the scenario over its common period.
std::shared_ptr<const MomentBasis> scenario_basis(const Scenario& s,
                                                  FourthMomentPath path = FourthMomentPath::kClosedForm);

/// Overrides applied on top of a configuration (useful for cheaper tests).
struct ScenarioOverrides {
  std::optional<std::size_t> moment_draws;
  std::optional<std::size_t> fourth_order_draws;
  std::optional<std::size_t> min_draws;
};

Scenario example1();
Scenario example2();
/// Scalar proper Gaussian input of variance sigma2, constant filter, N0 = 1.
Scenario scalar_toy(double sigma2 = 1.0);
Scenario nbplc_lite(const ScenarioOverrides& overrides = {});

std::vector<std::string> builtin_names();
/// Configuration document of a built-in scenario; throws ConfigError for an
/// unknown name.
nlohmann::json builtin_config(const std::string& name);

/// Validates and builds. Unknown fields are rejected; errors carry the dotted
/// path of the offending field.
Scenario from_json(const nlohmann::json& doc, const ScenarioOverrides& overrides = {});
Scenario from_config(const std::string& path, const ScenarioOverrides& overrides = {});
/// A built-in name or a path to a JSON file.
Scenario load_scenario(const std::string& name_or_path, const ScenarioOverrides& overrides = {});

}  // namespace cyclolms
