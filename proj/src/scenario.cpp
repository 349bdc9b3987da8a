#include "bismut/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace bismut {

using json = nlohmann::ordered_json;

namespace {

// --- strict-schema helpers -------------------------------------------------

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed,
                const std::vector<std::string>& required) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      throw ConfigError(path + ": unknown key '" + it.key() + "'");
    }
  }
  for (const auto& k : required) {
    if (!obj.contains(k)) throw ConfigError(path + ": missing required key '" + k + "'");
  }
}

double get_number(const json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<long long>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  return v.get<bool>();
}

Vector as_vector(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vector out(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(path + ": expected numbers");
    out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return out;
}

Matrix as_matrix(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(path + ": expected an array of rows");
  const std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
  if (cols == 0) throw ConfigError(path + ": expected non-empty rows");
  Matrix out(arr.size(), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array() || arr[i].size() != cols) {
      throw ConfigError(path + ": rows must have equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!arr[i][j].is_number()) throw ConfigError(path + ": expected numbers");
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = arr[i][j].get<double>();
    }
  }
  return out;
}

std::vector<double> as_double_list(const json& arr, const std::string& path) {
  const Vector v = as_vector(arr, path);
  return std::vector<double>(v.data(), v.data() + v.size());
}

// --- section parsers --------------------------------------------------------

DriftSpec parse_drift(const json& obj, const std::string& path) {
  check_keys(obj, path, {"kind", "B0", "B1", "G0", "G1", "distributed_weights"}, {"kind"});
  const std::string kind = get_string(obj, path, "kind");
  if (kind == "linear_delay") {
    check_keys(obj, path, {"kind", "B0", "B1"}, {"kind", "B0", "B1"});
    return make_linear_delay_drift(as_matrix(obj.at("B0"), path + ".B0"),
                                   as_matrix(obj.at("B1"), path + ".B1"));
  }
  if (kind == "bounded_nonlinear") {
    check_keys(obj, path, {"kind", "G0", "G1", "distributed_weights"}, {"kind", "G0", "G1"});
    Vector w;
    if (obj.contains("distributed_weights")) {
      w = as_vector(obj.at("distributed_weights"), path + ".distributed_weights");
    }
    return make_bounded_nonlinear_drift(as_matrix(obj.at("G0"), path + ".G0"),
                                        as_matrix(obj.at("G1"), path + ".G1"), w);
  }
  throw ConfigError(path + ".kind: expected 'linear_delay' or 'bounded_nonlinear'");
}

DiffusionSpec parse_diffusion(const json& obj, const std::string& path) {
  check_keys(obj, path, {"kind", "S", "s0", "s1"}, {"kind"});
  const std::string kind = get_string(obj, path, "kind");
  if (kind == "constant") {
    check_keys(obj, path, {"kind", "S"}, {"kind", "S"});
    return make_constant_diffusion(as_matrix(obj.at("S"), path + ".S"));
  }
  if (kind == "diagonal_saturating") {
    check_keys(obj, path, {"kind", "s0", "s1"}, {"kind", "s0", "s1"});
    return make_diagonal_saturating_diffusion(as_vector(obj.at("s0"), path + ".s0"),
                                              as_vector(obj.at("s1"), path + ".s1"));
  }
  throw ConfigError(path + ".kind: expected 'constant' or 'diagonal_saturating'");
}

ModelSpec parse_model(const json& obj, const std::string& path) {
  check_keys(obj, path, {"dim", "lambda", "tau", "a4_alpha", "noise_kind", "drift", "diffusion"},
             {"dim", "lambda", "tau", "a4_alpha", "noise_kind", "drift", "diffusion"});
  const long long dim = get_integer(obj, path, "dim");
  const Vector lambda = as_vector(obj.at("lambda"), path + ".lambda");
  if (lambda.size() != dim) throw ConfigError(path + ".lambda: size must equal dim");
  const std::string nk = get_string(obj, path, "noise_kind");
  if (nk != "additive" && nk != "multiplicative") {
    throw ConfigError(path + ".noise_kind: expected 'additive' or 'multiplicative'");
  }
  return make_model(lambda, get_number(obj, path, "tau"), parse_drift(obj.at("drift"), path + ".drift"),
                    parse_diffusion(obj.at("diffusion"), path + ".diffusion"),
                    get_number(obj, path, "a4_alpha"),
                    nk == "additive" ? NoiseKind::additive : NoiseKind::multiplicative);
}

TestFunctional parse_functional(const json& obj, const std::string& path, int dim) {
  check_keys(obj, path, {"kind", "v", "v_mid", "lo", "hi", "threshold"}, {"kind", "v"});
  const std::string kind = get_string(obj, path, "kind");
  const Vector v = as_vector(obj.at("v"), path + ".v");
  if (v.size() != dim) throw ConfigError(path + ".v: size must equal model dim");
  Vector v_mid;
  if (obj.contains("v_mid")) {
    v_mid = as_vector(obj.at("v_mid"), path + ".v_mid");
    if (v_mid.size() != dim) throw ConfigError(path + ".v_mid: size must equal model dim");
  }
  if (kind == "linear_endpoint") return linear_endpoint_functional(v);
  if (kind == "bounded_smooth") return bounded_smooth_functional(v, v_mid);
  if (kind == "positive_bounded") {
    const double lo = obj.contains("lo") ? get_number(obj, path, "lo") : 0.5;
    const double hi = obj.contains("hi") ? get_number(obj, path, "hi") : 1.5;
    return positive_bounded_functional(v, lo, hi, v_mid);
  }
  if (kind == "indicator") {
    const double thr = obj.contains("threshold") ? get_number(obj, path, "threshold") : 0.0;
    return indicator_functional(v, thr);
  }
  throw ConfigError(path + ".kind: unknown functional kind '" + kind + "'");
}

SegmentSpecCfg parse_segment(const json& obj, const std::string& path, int dim) {
  check_keys(obj, path, {"kind", "value", "base", "amplitude", "frequency", "values"}, {"kind"});
  SegmentSpecCfg cfg;
  const std::string kind = get_string(obj, path, "kind");
  if (kind == "constant") {
    check_keys(obj, path, {"kind", "value"}, {"kind", "value"});
    cfg.kind = SegmentSpecCfg::Kind::constant;
    cfg.value = as_vector(obj.at("value"), path + ".value");
    if (cfg.value.size() != dim) throw ConfigError(path + ".value: size must equal model dim");
    return cfg;
  }
  if (kind == "sampled_smooth") {
    check_keys(obj, path, {"kind", "base", "amplitude", "frequency"},
               {"kind", "base", "amplitude"});
    cfg.kind = SegmentSpecCfg::Kind::sampled_smooth;
    cfg.base = as_vector(obj.at("base"), path + ".base");
    cfg.amplitude = as_vector(obj.at("amplitude"), path + ".amplitude");
    if (cfg.base.size() != dim || cfg.amplitude.size() != dim) {
      throw ConfigError(path + ": base/amplitude size must equal model dim");
    }
    cfg.frequency = obj.contains("frequency") ? get_number(obj, path, "frequency") : 1.0;
    return cfg;
  }
  if (kind == "table") {
    check_keys(obj, path, {"kind", "values"}, {"kind", "values"});
    cfg.kind = SegmentSpecCfg::Kind::table;
    cfg.table = as_matrix(obj.at("values"), path + ".values");
    if (cfg.table.rows() != dim) throw ConfigError(path + ".values: need dim rows");
    return cfg;
  }
  throw ConfigError(path + ".kind: unknown segment kind '" + kind + "'");
}

SweepCfg parse_sweep(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"check", "horizons", "deltas", "alphas", "eta_scales", "ps", "c_max", "c_cfg"},
             {"check"});
  SweepCfg cfg;
  cfg.check = get_string(obj, path, "check");
  if (obj.contains("horizons")) cfg.horizons = as_double_list(obj.at("horizons"), path + ".horizons");
  if (obj.contains("deltas")) cfg.deltas = as_double_list(obj.at("deltas"), path + ".deltas");
  if (obj.contains("alphas")) cfg.alphas = as_double_list(obj.at("alphas"), path + ".alphas");
  if (obj.contains("eta_scales")) {
    cfg.eta_scales = as_double_list(obj.at("eta_scales"), path + ".eta_scales");
  }
  if (obj.contains("ps")) cfg.ps = as_double_list(obj.at("ps"), path + ".ps");
  if (obj.contains("c_max")) cfg.c_max = get_number(obj, path, "c_max");
  if (obj.contains("c_cfg")) cfg.c_cfg = get_number(obj, path, "c_cfg");

  if (cfg.check == "gradient-additive" || cfg.check == "gradient-multiplicative") {
    if (cfg.horizons.empty()) throw ConfigError(path + ": 'horizons' required for this check");
  } else if (cfg.check == "entropy") {
    if (cfg.deltas.empty()) throw ConfigError(path + ": 'deltas' required for entropy check");
  } else if (cfg.check == "harnack") {
    if (cfg.alphas.empty() || cfg.eta_scales.empty()) {
      throw ConfigError(path + ": 'alphas' and 'eta_scales' required for harnack check");
    }
  } else {
    throw ConfigError(path + ".check: unknown check '" + cfg.check + "'");
  }
  if (cfg.check == "gradient-multiplicative" && cfg.ps.empty()) cfg.ps = {2.0, 4.0};
  return cfg;
}

}  // namespace

SegmentPath SegmentSpecCfg::build(const GridSpec& grid, int dim) const {
  switch (kind) {
    case Kind::constant:
      return constant_segment(dim, grid.m, grid.dt, value);
    case Kind::sampled_smooth: {
      SegmentPath seg;
      seg.dt = grid.dt;
      seg.values.resize(dim, grid.m + 1);
      for (int j = 0; j <= grid.m; ++j) {
        const double theta = -grid.tau + j * grid.dt;
        const double c = std::cos(M_PI * frequency * theta / grid.tau);
        seg.values.col(j) = base + c * amplitude;
      }
      return seg;
    }
    case Kind::table: {
      if (table.cols() != grid.m + 1) {
        throw ConfigError("segment table does not match the grid (need m+1 columns)");
      }
      SegmentPath seg;
      seg.dt = grid.dt;
      seg.values = table;
      return seg;
    }
  }
  throw std::logic_error("unreachable segment kind");
}

GridSpec Scenario::make_grid_spec() const { return make_grid_spec(1); }

GridSpec Scenario::make_grid_spec(int refine_factor) const {
  return make_grid(model.delay, horizon, grid_m * refine_factor);
}

ControlFunction Scenario::make_control(const GridSpec& grid) const {
  if (control_kind == ControlFunction::Kind::table) {
    return control_function_from_table(grid, table_u, table_udot, control_p);
  }
  return control_function(control_kind, grid, control_p);
}

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  check_keys(root, "config",
             {"scenario_id", "experiment", "model", "grid", "control", "mc", "functional",
              "initial_segment", "direction", "oracle", "sweep", "refinements"},
             {"scenario_id", "experiment", "model", "grid", "mc", "functional", "initial_segment",
              "direction"});

  Scenario sc;
  sc.id = get_string(root, "config", "scenario_id");
  sc.experiment = get_string(root, "config", "experiment");
  const std::set<std::string> experiments = {"gradient", "oracle-compare", "ibp",
                                             "inequality-sweep", "convergence"};
  if (experiments.find(sc.experiment) == experiments.end()) {
    throw ConfigError("config.experiment: unknown experiment '" + sc.experiment + "'");
  }

  sc.model = parse_model(root.at("model"), "config.model");

  const json& grid = root.at("grid");
  check_keys(grid, "config.grid", {"m", "T"}, {"m", "T"});
  sc.grid_m = static_cast<int>(get_integer(grid, "config.grid", "m"));
  sc.horizon = get_number(grid, "config.grid", "T");

  if (root.contains("control")) {
    const json& ctl = root.at("control");
    check_keys(ctl, "config.control", {"kind", "p", "u", "udot"}, {"kind"});
    const std::string kind = get_string(ctl, "config.control", "kind");
    if (kind == "additive_normalized") {
      sc.control_kind = ControlFunction::Kind::additive_normalized;
    } else if (kind == "multiplicative_linear") {
      sc.control_kind = ControlFunction::Kind::multiplicative_linear;
    } else if (kind == "table") {
      sc.control_kind = ControlFunction::Kind::table;
      if (!ctl.contains("u") || !ctl.contains("udot")) {
        throw ConfigError("config.control: table controls need 'u' and 'udot'");
      }
      sc.table_u = as_vector(ctl.at("u"), "config.control.u");
      sc.table_udot = as_vector(ctl.at("udot"), "config.control.udot");
    } else {
      throw ConfigError("config.control.kind: unknown control kind '" + kind + "'");
    }
    if (ctl.contains("p")) sc.control_p = get_number(ctl, "config.control", "p");
  } else {
    sc.control_kind = sc.model.noise_kind == NoiseKind::additive
                          ? ControlFunction::Kind::additive_normalized
                          : ControlFunction::Kind::multiplicative_linear;
  }
  if (sc.model.noise_kind == NoiseKind::additive &&
      sc.control_kind == ControlFunction::Kind::multiplicative_linear) {
    throw ConfigError("config.control: additive model takes additive_normalized or table controls");
  }
  if (sc.model.noise_kind == NoiseKind::multiplicative &&
      sc.control_kind == ControlFunction::Kind::additive_normalized) {
    throw ConfigError("config.control: multiplicative model takes multiplicative_linear or table");
  }

  const json& mc = root.at("mc");
  check_keys(mc, "config.mc", {"n_paths", "seed", "antithetic"}, {"n_paths", "seed"});
  const long long n_paths = get_integer(mc, "config.mc", "n_paths");
  if (n_paths < 2) throw ConfigError("config.mc.n_paths: must be >= 2");
  sc.mc.n_paths = static_cast<std::size_t>(n_paths);
  sc.mc.seed = static_cast<std::uint64_t>(get_integer(mc, "config.mc", "seed"));
  sc.mc.antithetic = get_bool(mc, "config.mc", "antithetic", false);

  sc.functional = parse_functional(root.at("functional"), "config.functional", sc.model.dim);
  sc.initial_segment = parse_segment(root.at("initial_segment"), "config.initial_segment",
                                     sc.model.dim);
  sc.direction = parse_segment(root.at("direction"), "config.direction", sc.model.dim);

  if (root.contains("oracle")) {
    const json& orc = root.at("oracle");
    check_keys(orc, "config.oracle", {"kind", "epsilon"}, {});
    if (orc.contains("kind")) {
      sc.oracle_kind = get_string(orc, "config.oracle", "kind");
      const std::set<std::string> kinds = {"all", "fd", "pathwise", "analytic"};
      if (kinds.find(sc.oracle_kind) == kinds.end()) {
        throw ConfigError("config.oracle.kind: unknown oracle '" + sc.oracle_kind + "'");
      }
    }
    if (orc.contains("epsilon")) sc.oracle_epsilon = get_number(orc, "config.oracle", "epsilon");
  }

  if (root.contains("sweep")) sc.sweep = parse_sweep(root.at("sweep"), "config.sweep");
  if (sc.experiment == "inequality-sweep" && !sc.sweep) {
    throw ConfigError("config: inequality-sweep experiments need a 'sweep' section");
  }
  if (sc.sweep) {
    const bool mult_check = sc.sweep->check == "gradient-multiplicative";
    const bool is_mult = sc.model.noise_kind == NoiseKind::multiplicative;
    if (mult_check != is_mult) {
      throw ConfigError("config.sweep.check: noise kind of the model does not match the check");
    }
    if ((sc.sweep->check == "entropy" || sc.sweep->check == "harnack") &&
        !sc.functional.positive()) {
      throw ConfigError("config.sweep: entropy/harnack checks need a positive_bounded functional");
    }
  }

  if (root.contains("refinements")) {
    sc.refinements = static_cast<int>(get_integer(root, "config", "refinements"));
    if (sc.refinements < 1 || sc.refinements > 6) {
      throw ConfigError("config.refinements: expected 1..6");
    }
  }
  if (sc.experiment == "convergence" && sc.control_kind == ControlFunction::Kind::table) {
    throw ConfigError("config: convergence experiments need grid-independent controls");
  }

  // Structural validation of the grid happens here so malformed configs are
  // rejected before any work starts.
  sc.make_grid_spec();
  return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// --- experiment execution ---------------------------------------------------

namespace {

ResultRow row_from_estimate(const GradientEstimate& est, double dt) {
  ResultRow row;
  row.method = est.method;
  row.value = est.value;
  row.std_error = est.std_error;
  row.n_paths = est.n_paths;
  row.delta_t = dt;
  row.diagnostics = est.diagnostics;
  return row;
}

GradientEstimate run_bismut(const Scenario& sc, const SegmentPath& xi, const SegmentPath& eta,
                            const ControlFunction& u, const GridSpec& grid) {
  if (sc.model.noise_kind == NoiseKind::additive) {
    return estimate_gradient_additive(sc.model, xi, eta, sc.functional, u, grid, sc.mc);
  }
  return estimate_gradient_multiplicative(sc.model, xi, eta, sc.functional, u, grid, sc.mc);
}

bool analytic_applicable(const Scenario& sc) {
  return sc.model.drift.kind == DriftSpec::Kind::linear_delay &&
         sc.model.diffusion.kind == DiffusionSpec::Kind::constant &&
         sc.functional.kind == TestFunctional::Kind::linear_endpoint &&
         (sc.functional.v_mid.size() == 0 || sc.functional.v_mid.isZero());
}

void check_pairwise(CheckOutcome& check, const std::vector<ResultRow>& rows, double fd_allowance) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double diff = std::abs(rows[i].value - rows[j].value);
      const double combined = 3.0 * std::sqrt(rows[i].std_error * rows[i].std_error +
                                              rows[j].std_error * rows[j].std_error);
      const bool fd_pair = rows[i].method == "fd" || rows[j].method == "fd";
      const double allowed = combined + (fd_pair ? fd_allowance : 0.0);
      std::ostringstream os;
      os << rows[i].method << " vs " << rows[j].method << ": |" << rows[i].value << " - "
         << rows[j].value << "| = " << diff << (diff <= allowed ? " <= " : " > ") << allowed;
      check.messages.push_back(os.str());
      if (diff > allowed) check.passed = false;
    }
  }
}

void append_sweep_rows(ScenarioRun& run, const ImpliedConstantReport& report, double dt) {
  for (const auto& point : report.points) {
    ResultRow row;
    row.method = "chat-" + report.check;
    row.value = point.c_hat;
    row.std_error = point.c_se;
    row.n_paths = run.scenario.mc.n_paths;
    row.delta_t = dt;
    row.diagnostics = point.params;
    for (const auto& [k, v] : point.extras) row.diagnostics[k] = v;
    run.rows.push_back(std::move(row));
  }
}

}  // namespace

ScenarioRun execute_scenario(Scenario scenario, const RunOptions& opts) {
  if (opts.seed) scenario.mc.seed = *opts.seed;
  if (opts.threads) scenario.mc.threads = *opts.threads;
  if (scenario.mc.threads < 1) scenario.mc.threads = 1;

  ScenarioRun run;
  run.scenario = scenario;
  const Scenario& sc = run.scenario;
  const GridSpec grid = sc.make_grid_spec();
  const SegmentPath xi = sc.initial_segment.build(grid, sc.model.dim);
  const SegmentPath eta = sc.direction.build(grid, sc.model.dim);
  run.check.performed = opts.check;

  if (sc.experiment == "gradient") {
    const ControlFunction u = sc.make_control(grid);
    const GradientEstimate sem = estimate_semigroup(sc.model, xi, sc.functional, grid, sc.mc);
    const GradientEstimate grad = run_bismut(sc, xi, eta, u, grid);
    const GradientEstimate wm = estimate_weight_mean(sc.model, xi, eta, u, grid, sc.mc);
    run.rows.push_back(row_from_estimate(sem, grid.dt));
    run.rows.push_back(row_from_estimate(grad, grid.dt));
    run.rows.push_back(row_from_estimate(wm, grid.dt));
    if (opts.check) {
      const bool weight_ok = std::abs(wm.value) <= 3.0 * wm.std_error;
      std::ostringstream os;
      os << "weight mean " << wm.value << " within 3 SE (" << 3.0 * wm.std_error << "): "
         << (weight_ok ? "yes" : "NO");
      run.check.messages.push_back(os.str());
      run.check.passed = weight_ok && std::isfinite(grad.value);
    }
  } else if (sc.experiment == "oracle-compare") {
    const ControlFunction u = sc.make_control(grid);
    std::vector<ResultRow> compared;
    compared.push_back(row_from_estimate(run_bismut(sc, xi, eta, u, grid), grid.dt));
    const double eps =
        sc.oracle_epsilon > 0.0 ? sc.oracle_epsilon : default_fd_epsilon(xi, eta);
    if (sc.oracle_kind == "all" || sc.oracle_kind == "fd") {
      compared.push_back(
          row_from_estimate(fd_gradient(sc.model, xi, eta, sc.functional, eps, grid, sc.mc),
                            grid.dt));
    }
    if ((sc.oracle_kind == "all" && sc.functional.has_gradient()) ||
        sc.oracle_kind == "pathwise") {
      compared.push_back(row_from_estimate(
          pathwise_gradient(sc.model, xi, eta, sc.functional, grid, sc.mc), grid.dt));
    }
    if ((sc.oracle_kind == "all" && analytic_applicable(sc)) || sc.oracle_kind == "analytic") {
      ResultRow row;
      row.method = "analytic";
      row.value = analytic_linear_gradient(sc.model, eta, sc.functional, grid);
      row.std_error = 0.0;
      row.n_paths = 0;
      row.delta_t = grid.dt;
      row.diagnostics["refine"] = 10.0;
      compared.push_back(std::move(row));
    }
    for (const auto& r : compared) run.rows.push_back(r);
    if (opts.check) check_pairwise(run.check, compared, 2.0 * eps * eps);
  } else if (sc.experiment == "ibp") {
    const ControlFunction u = sc.make_control(grid);
    const double eps = sc.oracle_epsilon > 0.0 ? sc.oracle_epsilon : 1e-3;
    const IbpResult res = ibp_residual(sc.model, xi, eta, sc.functional, u, eps, grid, sc.mc);
    ResultRow dhf{"ibp-dhf", res.dhf_mean, res.dhf_se, res.n_paths, grid.dt, {}};
    ResultRow fw{"ibp-fweight", res.fw_mean, res.fw_se, res.n_paths, grid.dt, {}};
    ResultRow rr{"ibp-residual", res.residual, res.std_error, res.n_paths, grid.dt, {}};
    rr.diagnostics["epsilon"] = eps;
    run.rows.push_back(dhf);
    run.rows.push_back(fw);
    run.rows.push_back(rr);
    if (opts.check) {
      const double allowed = 3.0 * res.std_error + eps * eps + 0.1 * std::sqrt(grid.dt);
      std::ostringstream os;
      os << "ibp residual " << res.residual << (res.residual <= allowed ? " <= " : " > ")
         << allowed;
      run.check.messages.push_back(os.str());
      run.check.passed = res.residual <= allowed;
    }
  } else if (sc.experiment == "inequality-sweep") {
    const SweepCfg& sw = *sc.sweep;
    ImpliedConstantReport report;
    if (sw.check == "gradient-additive") {
      report = check_gradient_bound_additive(sc.model, xi, eta, sc.functional, sw.horizons,
                                             sc.grid_m, sc.mc, sw.c_max);
    } else if (sw.check == "entropy") {
      report = check_entropy_bound(sc.model, xi, eta, sc.functional, sw.deltas, grid, sc.mc,
                                   sw.c_cfg);
    } else if (sw.check == "harnack") {
      report = check_harnack(sc.model, xi, eta, sc.functional, sw.alphas, sw.eta_scales, grid,
                             sc.mc, sw.c_max);
    } else {
      report = check_gradient_bound_multiplicative(sc.model, xi, eta, sc.functional, sw.ps,
                                                   sw.horizons, sc.grid_m, sc.mc, sw.c_max);
    }
    report.scenario_id = sc.id;
    append_sweep_rows(run, report, grid.dt);
    if (opts.check) {
      bool finite = true;
      for (const auto& p : report.points) finite = finite && std::isfinite(p.c_hat);
      std::ostringstream os;
      os << report.check << ": max C = " << report.max_c << ", median C = " << report.median_c
         << (report.violation ? " [one-sided violation]" : "");
      run.check.messages.push_back(os.str());
      run.check.passed = finite && !report.violation;
    }
    run.reports.push_back(std::move(report));
  } else {  // convergence
    for (int level = 0; level <= sc.refinements; ++level) {
      const GridSpec grid_l = sc.make_grid_spec(1 << level);
      const ControlFunction u_l = sc.make_control(grid_l);
      const SegmentPath xi_l = sc.initial_segment.build(grid_l, sc.model.dim);
      const SegmentPath eta_l = sc.direction.build(grid_l, sc.model.dim);
      run.rows.push_back(row_from_estimate(run_bismut(sc, xi_l, eta_l, u_l, grid_l), grid_l.dt));
    }
    if (opts.check) {
      for (std::size_t i = 0; i + 1 < run.rows.size(); ++i) {
        const auto& coarse = run.rows[i];
        const auto& fine = run.rows[i + 1];
        const double diff = std::abs(coarse.value - fine.value);
        const double allowed = 3.0 * std::sqrt(coarse.std_error * coarse.std_error +
                                               fine.std_error * fine.std_error) +
                               0.5 * std::sqrt(coarse.delta_t);
        std::ostringstream os;
        os << "dt " << coarse.delta_t << " -> " << fine.delta_t << ": |diff| = " << diff
           << (diff <= allowed ? " <= " : " > ") << allowed;
        run.check.messages.push_back(os.str());
        if (diff > allowed) run.check.passed = false;
      }
    }
  }
  return run;
}

// --- artifact writers ---------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string diagnostics_field(const std::map<std::string, double>& diag) {
  std::string out;
  for (const auto& [k, v] : diag) {
    if (!out.empty()) out += ';';
    out += k + "=" + fmt(v);
  }
  return out;
}

json report_json(const ScenarioRun& run) {
  json root;
  root["scenario_id"] = run.scenario.id;
  root["experiment"] = run.scenario.experiment;
  json rows = json::array();
  for (const auto& r : run.rows) {
    json jr;
    jr["method"] = r.method;
    jr["value"] = r.value;
    jr["std_error"] = r.std_error;
    jr["n_paths"] = r.n_paths;
    jr["delta_t"] = r.delta_t;
    jr["diagnostics"] = r.diagnostics;
    rows.push_back(jr);
  }
  root["results"] = rows;
  if (!run.reports.empty()) {
    json reps = json::array();
    for (const auto& rep : run.reports) {
      json jr;
      jr["check"] = rep.check;
      jr["max_c"] = rep.max_c;
      jr["median_c"] = rep.median_c;
      if (rep.ceiling) jr["ceiling"] = *rep.ceiling;
      jr["violation"] = rep.violation;
      jr["notes"] = rep.notes;
      json points = json::array();
      for (const auto& p : rep.points) {
        json jp;
        jp["params"] = p.params;
        jp["c_hat"] = p.c_hat;
        jp["c_se"] = p.c_se;
        jp["lhs"] = p.lhs;
        jp["rhs"] = p.rhs;
        jp["extras"] = p.extras;
        points.push_back(jp);
      }
      jr["points"] = points;
      reps.push_back(jr);
    }
    root["implied_constants"] = reps;
  }
  json check;
  check["performed"] = run.check.performed;
  check["passed"] = run.check.passed;
  check["messages"] = run.check.messages;
  root["check"] = check;
  return root;
}

}  // namespace

void write_artifacts(const ScenarioRun& run, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream csv(out_dir / "results.csv", std::ios::binary);
    csv << "scenario_id,method,value,std_error,n_paths,delta_t,diagnostics\n";
    for (const auto& r : run.rows) {
      csv << run.scenario.id << ',' << r.method << ',' << fmt(r.value) << ',' << fmt(r.std_error)
          << ',' << r.n_paths << ',' << fmt(r.delta_t) << ',' << diagnostics_field(r.diagnostics)
          << '\n';
    }
  }

  {
    std::ofstream rep(out_dir / "report.json", std::ios::binary);
    rep << report_json(run).dump(2) << '\n';
  }

  if (run.scenario.experiment == "convergence") {
    std::filesystem::create_directories(out_dir / "plotdata");
    std::ofstream plot(out_dir / "plotdata" / "convergence.csv", std::ios::binary);
    plot << "delta_t,value,std_error\n";
    for (const auto& r : run.rows) {
      plot << fmt(r.delta_t) << ',' << fmt(r.value) << ',' << fmt(r.std_error) << '\n';
    }
  }
  if (!run.reports.empty()) {
    std::filesystem::create_directories(out_dir / "plotdata");
    std::ofstream plot(out_dir / "plotdata" / "sweep.csv", std::ios::binary);
    std::set<std::string> param_keys;
    for (const auto& rep : run.reports) {
      for (const auto& p : rep.points) {
        for (const auto& [k, v] : p.params) param_keys.insert(k);
      }
    }
    plot << "check";
    for (const auto& k : param_keys) plot << ',' << k;
    plot << ",c_hat,c_se\n";
    for (const auto& rep : run.reports) {
      for (const auto& p : rep.points) {
        plot << rep.check;
        for (const auto& k : param_keys) {
          plot << ',';
          const auto it = p.params.find(k);
          if (it != p.params.end()) plot << fmt(it->second);
        }
        plot << ',' << fmt(p.c_hat) << ',' << fmt(p.c_se) << '\n';
      }
    }
  }
}

int run_scenario(const std::string& config, const RunOptions& opts) {
  Scenario scenario;
  try {
    const std::string golden_prefix = "golden:";
    if (config.rfind(golden_prefix, 0) == 0) {
      const std::string id = config.substr(golden_prefix.size());
      const auto cfg = golden_config(id);
      if (!cfg) {
        std::fprintf(stderr, "unknown golden scenario '%s'\n", id.c_str());
        return 2;
      }
      scenario = parse_scenario(*cfg);
    } else {
      scenario = load_scenario_file(config);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  std::filesystem::path out_dir;
  if (opts.out_dir) {
    out_dir = *opts.out_dir;
  } else if (const char* env = std::getenv("BISMUT_OUT_DIR"); env != nullptr && *env != '\0') {
    out_dir = env;
  } else {
    out_dir = "out";
  }

  try {
    const ScenarioRun run = execute_scenario(scenario, opts);
    write_artifacts(run, out_dir);
    for (const auto& msg : run.check.messages) std::fprintf(stdout, "[check] %s\n", msg.c_str());
    if (opts.check && !run.check.passed) return 3;
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return 2;
  }
}

}  // namespace bismut
