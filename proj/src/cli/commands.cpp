#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "cyclolms/cli.hpp"
#include "cyclolms/errors.hpp"
#include "cyclolms/lms_sim.hpp"
#include "cyclolms/lms_theory.hpp"
#include "cyclolms/scenarios.hpp"
#include "output.hpp"

namespace cyclolms::cli {

using nlohmann::json;

json RunManifest::to_json(bool with_timestamp) const {
  json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["scenario"] = scenario;
  j["mu"] = mus;
  j["horizon"] = horizon;
  j["trials"] = trials;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["grid"] = {{"start", grid.start}, {"stop", grid.stop}, {"step", grid.step}};
  j["format"] = format;
  j["moment_draws"] = moment_draws ? json(*moment_draws) : json(nullptr);
  j["fourth_order_draws"] = fourth_order_draws ? json(*fourth_order_draws) : json(nullptr);
  if (with_timestamp) j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.scenario = j.at("scenario").get<std::string>();
    m.mus = j.at("mu").get<std::vector<double>>();
    m.horizon = j.at("horizon").get<std::size_t>();
    m.trials = j.at("trials").get<std::size_t>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    const auto& g = j.at("grid");
    m.grid = {g.at("start").get<double>(), g.at("stop").get<double>(), g.at("step").get<double>()};
    m.format = j.at("format").get<std::string>();
    if (j.contains("moment_draws") && !j.at("moment_draws").is_null()) {
      m.moment_draws = j.at("moment_draws").get<std::size_t>();
    }
    if (j.contains("fourth_order_draws") && !j.at("fourth_order_draws").is_null()) {
      m.fourth_order_draws = j.at("fourth_order_draws").get<std::size_t>();
    }
    if (j.contains("timestamp")) m.timestamp = j.at("timestamp").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError("manifest", e.what());
  }
  return m;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  std::stringstream ss(text);
  std::string part;
  std::vector<double> v;
  while (std::getline(ss, part, ':')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("--grid", "'" + text + "' is not start:stop:step");
    }
  }
  if (v.size() != 3) throw ConfigError("--grid", "'" + text + "' is not start:stop:step");
  g = {v[0], v[1], v[2]};
  return g;
}

void validate(const RunManifest& m) {
  static const std::vector<std::string> commands = {"analyze", "simulate", "stability", "compare"};
  if (std::find(commands.begin(), commands.end(), m.command) == commands.end()) {
    throw ConfigError("command", "unknown command '" + m.command + "'");
  }
  for (double mu : m.mus) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("--mu", "step sizes must be positive");
  }
  if (m.format != "csv" && m.format != "json") throw ConfigError("--format", "expected csv or json");
  if ((m.command == "analyze" || m.command == "simulate" || m.command == "compare") && m.horizon < 1) {
    throw ConfigError("--horizon", "must be at least 1");
  }
  if ((m.command == "simulate" || m.command == "compare") && m.trials < 1) {
    throw ConfigError("--trials", "must be at least 1");
  }
  const auto& g = m.grid;
  if (!(g.step > 0.0) || !(g.start >= 0.0) || !(g.stop > g.start) || !std::isfinite(g.stop)) {
    throw ConfigError("--grid", "need 0 <= start < stop and step > 0");
  }
}

ThresholdGrid to_grid(const GridSpec& g) {
  ThresholdGrid t;
  t.start = g.start;
  t.stop = g.stop;
  t.step = g.step;
  return t;
}

std::vector<double> requested_mus(const RunManifest& m, const Scenario& s) {
  if (!m.mus.empty()) return m.mus;
  if (s.default_mus.empty()) throw ConfigError("--mu", "scenario has no default step sizes; pass --mu");
  return s.default_mus;
}

json stability_json(const StabilityReport& r) {
  return {{"mu", r.mu},
          {"rho_mean", r.rho_mean},
          {"rho_ms", r.rho_ms},
          {"mean_convergent", r.mean_convergent},
          {"ms_stable", r.ms_stable},
          {"inconclusive", r.inconclusive},
          {"precondition_flags", r.precondition_flags}};
}

std::string unstable_reason(const StabilityReport& r) {
  if (r.inconclusive) return "inconclusive";
  if (!r.mean_convergent) return "mean_divergent";
  return "ms_unstable";
}

struct Run {
  const RunManifest& m;
  const Scenario& s;
  std::string dir;
  json embedded;
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> files;
};

int cmd_analyze(Run& r) {
  const auto mus = requested_mus(r.m, r.s);
  const auto basis = scenario_basis(r.s);
  Table curve{{"n", "mu", "theory_mse"}, {}};
  Table steady{{"k", "mu", "xi_k", "ta_mse", "status", "reason"}, {}};
  for (double mu : mus) {
    const MomentMatrixSet mm(basis, mu);
    const TheoryTrace tr = run_theory(mm, *r.s.gt, r.m.horizon, r.s.h0, false);
    for (std::size_t n = 0; n < tr.mse.size(); ++n) {
      curve.rows.push_back({static_cast<long long>(n), mu, tr.mse[n]});
    }
    const auto ss = steady_state(mm, *r.s.gt);
    if (const auto* st = std::get_if<SteadyState>(&ss)) {
      for (std::size_t k = 0; k < st->xi.size(); ++k) {
        steady.rows.push_back({static_cast<long long>(k), mu, st->xi[k], st->ta_mse, std::string("stable"), {}});
      }
      r.out << "mu=" << format_double(mu) << " ta_mse=" << format_double(st->ta_mse) << '\n';
    } else {
      const auto& rep = std::get<StabilityReport>(ss);
      steady.rows.push_back({{}, mu, {}, {}, std::string("unstable"), unstable_reason(rep)});
      r.out << "mu=" << format_double(mu) << " unstable (" << unstable_reason(rep) << ")\n";
    }
  }
  r.files.push_back(write_table(r.dir, "theory_mse", curve, r.embedded, r.m.format));
  r.files.push_back(write_table(r.dir, "steady_state", steady, r.embedded, r.m.format));
  return kExitOk;
}

int cmd_simulate(Run& r) {
  const auto mus = requested_mus(r.m, r.s);
  const std::uint64_t seed = r.m.seed.value_or(r.s.simulation_seed);
  Table t{{"n", "mu", "emp_mse", "stderr", "n_diverged"}, {}};
  int code = kExitOk;
  for (double mu : mus) {
    try {
      const EmpiricalCurve c = monte_carlo_mse(*r.s.source, mu, r.m.horizon, r.m.trials, seed, r.s.h0);
      for (std::size_t n = 0; n < c.mse.size(); ++n) {
        t.rows.push_back({static_cast<long long>(n), mu, c.mse[n], c.std_error[n],
                          static_cast<long long>(c.n_diverged)});
      }
      r.out << "mu=" << format_double(mu) << " trials=" << c.n_trials << " diverged=" << c.n_diverged << '\n';
    } catch (const DivergenceError& e) {
      r.err << "mu=" << format_double(mu) << ": " << e.what() << '\n';
      code = kExitDiverged;
    }
  }
  r.files.push_back(write_table(r.dir, "empirical_mse", t, r.embedded, r.m.format));
  return code;
}

int cmd_stability(Run& r) {
  const auto basis = scenario_basis(r.s);
  const Thresholds th = compute_thresholds(basis, to_grid(r.m.grid));
  json doc;
  doc["schema_version"] = kOutputSchemaVersion;
  doc["manifest"] = r.embedded;
  doc["scenario"] = r.s.name;
  doc["period"] = r.s.period;
  doc["thresholds"] = {{"mu_mean_product_bound", th.mu_mean_product_bound},
                       {"mu_mean_eig_bound", th.mu_mean_eig_bound},
                       {"mu_mean_exact", th.mu_mean_exact},
                       {"mu_ms_sufficient", th.mu_ms_sufficient},
                       {"mu_ms_exact", th.mu_ms_exact},
                       {"capped", th.capped}};
  // Grid thresholds are the last passing point of a bracket this wide, so a
  // closed-form threshold equal to the true boundary may exceed them by up to
  // one resolution (plus rounding in the closed form).
  const double resolution = r.m.grid.step / std::ldexp(1.0, ThresholdGrid{}.refinements);
  const double slack = resolution * (1.0 + 1e-9);
  doc["grid_resolution"] = resolution;
  doc["ordering"] = {{"mean_eig_le_mean_product", th.mu_mean_eig_bound <= th.mu_mean_product_bound + slack},
                     {"mean_product_le_mean_exact", th.mu_mean_product_bound <= th.mu_mean_exact + slack},
                     {"ms_sufficient_le_ms_exact", th.mu_ms_sufficient <= th.mu_ms_exact + slack}};
  doc["relative_gap_ms"] = th.mu_ms_exact > 0.0 ? (th.mu_ms_exact - th.mu_ms_sufficient) / th.mu_ms_exact : 0.0;
  doc["precondition_flags"] = th.precondition_flags;
  doc["reports"] = json::array();
  std::vector<double> mus = r.m.mus.empty() ? r.s.default_mus : r.m.mus;
  for (double mu : mus) doc["reports"].push_back(stability_json(check_ms_stability(MomentMatrixSet(basis, mu))));
  const std::string path = (std::filesystem::path(r.dir) / "stability.json").string();
  std::filesystem::create_directories(r.dir);
  write_json(path, doc);
  r.files.push_back(path);
  r.out << "mu_mean_eig_bound=" << format_double(th.mu_mean_eig_bound)
        << " mu_mean_product_bound=" << format_double(th.mu_mean_product_bound)
        << " mu_mean_exact=" << format_double(th.mu_mean_exact)
        << " mu_ms_sufficient=" << format_double(th.mu_ms_sufficient) << " mu_ms_exact=" << format_double(th.mu_ms_exact) << (th.capped ? " (capped)" : "") << '\n';
  return kExitOk;
}

int cmd_compare(Run& r) {
  const auto mus = requested_mus(r.m, r.s);
  const auto basis = scenario_basis(r.s);
  const std::uint64_t seed = r.m.seed.value_or(r.s.simulation_seed);
  for (double mu : mus) {
    const StabilityReport rep = check_ms_stability(MomentMatrixSet(basis, mu));
    if (!rep.ms_stable) {
      r.err << "compare needs mean-square stable step sizes; report:\n" << stability_json(rep).dump(2) << '\n';
      return kExitNumerical;
    }
  }
  Table t{{"n", "mu", "theory_mse", "emp_mse", "stderr", "within_4se"}, {}};
  json summary;
  summary["schema_version"] = kOutputSchemaVersion;
  summary["manifest"] = r.embedded;
  summary["scenario"] = r.s.name;
  summary["per_mu"] = json::array();
  std::size_t total = 0, total_within = 0;
  double overall_max = 0.0;
  for (double mu : mus) {
    const MomentMatrixSet mm(basis, mu);
    const TheoryTrace tr = run_theory(mm, *r.s.gt, r.m.horizon, r.s.h0, false);
    EmpiricalCurve c;
    try {
      c = monte_carlo_mse(*r.s.source, mu, r.m.horizon, r.m.trials, seed, r.s.h0);
    } catch (const DivergenceError& e) {
      r.err << "mu=" << format_double(mu) << ": " << e.what() << '\n';
      return kExitDiverged;
    }
    std::size_t within = 0;
    double max_rel = 0.0;
    for (std::size_t n = 0; n < tr.mse.size(); ++n) {
      const double diff = std::abs(c.mse[n] - tr.mse[n]);
      const bool ok = diff <= 4.0 * c.std_error[n];
      within += ok;
      const double rel = tr.mse[n] != 0.0 ? diff / std::abs(tr.mse[n]) : (diff == 0.0 ? 0.0 : INFINITY);
      max_rel = std::max(max_rel, rel);
      t.rows.push_back({static_cast<long long>(n), mu, tr.mse[n], c.mse[n], c.std_error[n], static_cast<long long>(ok)});
    }
    const double pct = 100.0 * static_cast<double>(within) / static_cast<double>(tr.mse.size());
    summary["per_mu"].push_back({{"mu", mu},
                                 {"max_rel_err", std::isfinite(max_rel) ? json(max_rel) : json(nullptr)},
                                 {"pct_within_4stderr", pct},
                                 {"n_trials", c.n_trials},
                                 {"n_diverged", c.n_diverged}});
    total += tr.mse.size();
    total_within += within;
    overall_max = std::max(overall_max, max_rel);
    r.out << "mu=" << format_double(mu) << " pct_within_4stderr=" << format_double(pct)
          << " max_rel_err=" << format_double(max_rel) << '\n';
  }
  summary["max_rel_err"] = std::isfinite(overall_max) ? json(overall_max) : json(nullptr);
  summary["pct_within_4stderr"] = 100.0 * static_cast<double>(total_within) / static_cast<double>(total);
  r.files.push_back(write_table(r.dir, "compare", t, r.embedded, r.m.format));
  const std::string path = (std::filesystem::path(r.dir) / "compare_summary.json").string();
  write_json(path, summary);
  r.files.push_back(path);
  return kExitOk;
}

}  // namespace

int run_manifest(const RunManifest& manifest, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    validate(manifest);
    ScenarioOverrides ov;
    ov.moment_draws = manifest.moment_draws;
    ov.fourth_order_draws = manifest.fourth_order_draws;
    // An explicit draw count is taken as the floor too.
    if (ov.moment_draws) ov.min_draws = *ov.moment_draws;
    const Scenario s = load_scenario(manifest.scenario, ov);
    Run r{manifest, s, out_dir, manifest.to_json(false), out, err, {}};
    int code = kExitOk;
    if (manifest.command == "analyze") code = cmd_analyze(r);
    else if (manifest.command == "simulate") code = cmd_simulate(r);
    else if (manifest.command == "stability") code = cmd_stability(r);
    else code = cmd_compare(r);

    json side = manifest.to_json(true);
    side["schema_version"] = kOutputSchemaVersion;
    side["outputs"] = json::array();
    for (const auto& f : r.files) side["outputs"].push_back(std::filesystem::path(f).filename().string());
    side["scenario_config"] = s.config;
    side["exit_code"] = code;
    std::filesystem::create_directories(out_dir);
    write_json((std::filesystem::path(out_dir) / ("manifest_" + manifest.command + ".json")).string(), side);
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LMS analysis for cyclostationary, non-Gaussian signals", kToolName};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunManifest m;
  std::string grid_text = "0:100:0.001";
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t moment_draws = 0, fourth_draws = 0;

  const auto common = [&](CLI::App* sub, bool sim, bool grid) {
    sub->add_option("--scenario", m.scenario, "built-in name or path to a JSON config")->required();
    sub->add_option("--mu", m.mus, "step sizes (comma separated)")->delimiter(',');
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--format", m.format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--moment-draws", moment_draws, "override estimated-moment draws per phase");
    sub->add_option("--fourth-order-draws", fourth_draws, "override fourth-order draws per phase");
    if (sim) {
      sub->add_option("--trials", m.trials, "Monte Carlo trials")->capture_default_str();
      sub->add_option("--seed", seed, "base seed (default: the scenario's)");
    }
    if (grid) sub->add_option("--grid", grid_text, "threshold grid start:stop:step")->capture_default_str();
  };

  m.horizon = 2000;
  m.trials = 1000;
  auto* analyze = app.add_subcommand("analyze", "theoretical transient and steady-state MSE");
  common(analyze, false, false);
  analyze->add_option("--horizon", m.horizon, "iterations")->capture_default_str();
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo learning curves");
  common(simulate, true, false);
  simulate->add_option("--horizon", m.horizon, "iterations")->capture_default_str();
  auto* stability = app.add_subcommand("stability", "step-size thresholds and per-phase spectral radii");
  common(stability, false, true);
  auto* compare = app.add_subcommand("compare", "theory against simulation");
  common(compare, true, false);
  compare->add_option("--horizon", m.horizon, "iterations")->capture_default_str();

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "re-run a manifest_<command>.json");
  replay->add_option("manifest", replay_path, "manifest file")->required();
  replay->add_option("--out", out_dir, "output directory")->capture_default_str();

  std::string show_name;
  auto* list = app.add_subcommand("scenarios", "list built-in scenarios");
  list->add_option("--show", show_name, "print the configuration of a built-in scenario");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (list->parsed()) {
    if (show_name.empty()) {
      for (const auto& n : builtin_names()) out << n << '\n';
      return kExitOk;
    }
    try {
      out << builtin_config(show_name).dump(2) << '\n';
      return kExitOk;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  if (replay->parsed()) {
    std::ifstream in(replay_path);
    if (!in) {
      err << "error: cannot open '" << replay_path << "'\n";
      return kExitUsage;
    }
    try {
      return run_manifest(RunManifest::from_json(json::parse(in)), out_dir, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  for (auto* sub : {analyze, simulate, stability, compare}) {
    if (sub->parsed()) m.command = sub->get_name();
  }
  if (m.command == "stability") {
    try {
      m.grid = parse_grid(grid_text);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  if (m.command != "simulate" && m.command != "compare") m.trials = 0;
  if (m.command == "stability") m.horizon = 0;
  if (simulate->count("--seed") || compare->count("--seed")) m.seed = seed;
  if (moment_draws) m.moment_draws = moment_draws;
  if (fourth_draws) m.fourth_order_draws = fourth_draws;
  m.timestamp = utc_now();
  return run_manifest(m, out_dir, out, err);
}

}  // namespace cyclolms::cli
