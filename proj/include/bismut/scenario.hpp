#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bismut/inequalities.hpp"

namespace bismut {

/// Segment description from a scenario config; expanded onto a grid.
struct SegmentSpecCfg {
  enum class Kind { constant, sampled_smooth, table };
  Kind kind = Kind::constant;
  Vector value;              // constant
  Vector base, amplitude;    // sampled_smooth: base + amp * cos(pi f theta / tau)
  double frequency = 1.0;
  Matrix table;              // d x (m+1)

  SegmentPath build(const GridSpec& grid, int dim) const;
};

struct SweepCfg {
  std::string check;  // gradient-additive | entropy | harnack | gradient-multiplicative
  std::vector<double> horizons, deltas, alphas, eta_scales, ps;
  std::optional<double> c_max;
  double c_cfg = 1.0;
};

/// A fully parsed scenario (the reproducibility contract of a run).
struct Scenario {
  std::string id;
  std::string experiment;  // gradient | oracle-compare | ibp | inequality-sweep | convergence
  ModelSpec model;
  int grid_m = 1;
  double horizon = 0.0;
  ControlFunction::Kind control_kind = ControlFunction::Kind::additive_normalized;
  double control_p = 2.0;
  Vector table_u, table_udot;  // table controls only
  MCConfig mc;
  TestFunctional functional;
  SegmentSpecCfg initial_segment, direction;
  std::string oracle_kind = "all";  // all | fd | pathwise | analytic
  double oracle_epsilon = 0.0;      // <= 0: default rule
  std::optional<SweepCfg> sweep;
  int refinements = 1;              // convergence experiment levels beyond the base grid

  GridSpec make_grid_spec() const;
  GridSpec make_grid_spec(int refine_factor) const;
  ControlFunction make_control(const GridSpec& grid) const;
};

/// Parses a scenario from JSON text with a strict schema: unknown keys are
/// rejected with their full path. Throws ConfigError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::filesystem::path& path);

struct ResultRow {
  std::string method;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double delta_t = 0.0;
  std::map<std::string, double> diagnostics;
};

struct CheckOutcome {
  bool performed = false;
  bool passed = true;
  std::vector<std::string> messages;
};

struct ScenarioRun {
  Scenario scenario;
  std::vector<ResultRow> rows;
  std::vector<ImpliedConstantReport> reports;
  CheckOutcome check;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out_dir;
  bool check = false;
};

/// Runs the scenario's experiment and (when requested) its validation
/// checks. Overrides from RunOptions never enter results.csv.
ScenarioRun execute_scenario(Scenario scenario, const RunOptions& opts);

/// Writes results.csv, report.json and plotdata/*.csv under out_dir.
void write_artifacts(const ScenarioRun& run, const std::filesystem::path& out_dir);

/// Full CLI-facing path: load + execute + write. Returns 0 on success,
/// 2 on validation/config failure, 3 when --check is set and a check fails.
/// `config` may be a file path or "golden:<id>".
int run_scenario(const std::string& config, const RunOptions& opts);

struct GoldenScenario {
  std::string id;
  std::string description;
  std::string config_json;
};

const std::vector<GoldenScenario>& list_golden();
std::optional<std::string> golden_config(const std::string& id);

}  // namespace bismut
