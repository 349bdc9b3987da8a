#include "bismut/scenario.hpp"

namespace bismut {

namespace {

const char* kAddLinearScalar = R"json({
  "scenario_id": "add-linear-scalar",
  "experiment": "oracle-compare",
  "model": {
    "dim": 1,
    "lambda": [-1.0],
    "tau": 1.0,
    "a4_alpha": 0.25,
    "noise_kind": "additive",
    "drift": {"kind": "linear_delay", "B0": [[0.0]], "B1": [[0.5]]},
    "diffusion": {"kind": "constant", "S": [[0.3]]}
  },
  "grid": {"m": 1000, "T": 2.0},
  "control": {"kind": "additive_normalized"},
  "mc": {"n_paths": 100000, "seed": 12345},
  "functional": {"kind": "linear_endpoint", "v": [1.0]},
  "initial_segment": {"kind": "constant", "value": [1.0]},
  "direction": {"kind": "constant", "value": [1.0]},
  "oracle": {"kind": "analytic"}
})json";

const char* kAddNonlinearD4 = R"json({
  "scenario_id": "add-nonlinear-d4",
  "experiment": "oracle-compare",
  "model": {
    "dim": 4,
    "lambda": [-0.5, -1.0, -1.5, -2.0],
    "tau": 0.5,
    "a4_alpha": 0.25,
    "noise_kind": "additive",
    "drift": {
      "kind": "bounded_nonlinear",
      "G0": [[-0.30, 0.10, 0.00, 0.05],
             [ 0.00,-0.25, 0.10, 0.00],
             [ 0.05, 0.00,-0.20, 0.10],
             [ 0.00, 0.05, 0.00,-0.25]],
      "G1": [[ 0.15, 0.00, 0.05, 0.00],
             [ 0.05, 0.10, 0.00, 0.00],
             [ 0.00, 0.05, 0.15, 0.00],
             [ 0.05, 0.00, 0.00, 0.10]]
    },
    "diffusion": {"kind": "constant", "S": [[0.35,0,0,0],[0,0.35,0,0],[0,0,0.35,0],[0,0,0,0.35]]}
  },
  "grid": {"m": 100, "T": 1.0},
  "control": {"kind": "additive_normalized"},
  "mc": {"n_paths": 100000, "seed": 777},
  "functional": {"kind": "bounded_smooth", "v": [0.6, -0.4, 0.5, 0.3], "v_mid": [0.2, 0.1, -0.1, 0.2]},
  "initial_segment": {"kind": "sampled_smooth", "base": [0.4, 0.2, -0.3, 0.1],
                      "amplitude": [0.2, -0.1, 0.1, 0.2], "frequency": 1.0},
  "direction": {"kind": "sampled_smooth", "base": [1.0, 0.5, -0.5, 0.8],
                "amplitude": [0.3, 0.2, 0.1, -0.2], "frequency": 1.0},
  "oracle": {"kind": "all", "epsilon": 0.001}
})json";

const char* kMultDiagonalD1 = R"json({
  "scenario_id": "mult-diagonal-d1",
  "experiment": "oracle-compare",
  "model": {
    "dim": 1,
    "lambda": [-1.0],
    "tau": 0.5,
    "a4_alpha": 0.25,
    "noise_kind": "multiplicative",
    "drift": {"kind": "linear_delay", "B0": [[-0.2]], "B1": [[0.3]]},
    "diffusion": {"kind": "diagonal_saturating", "s0": [1.0], "s1": [0.5]}
  },
  "grid": {"m": 500, "T": 1.5},
  "control": {"kind": "multiplicative_linear", "p": 2.0},
  "mc": {"n_paths": 200000, "seed": 999},
  "functional": {"kind": "bounded_smooth", "v": [1.0]},
  "initial_segment": {"kind": "constant", "value": [0.5]},
  "direction": {"kind": "constant", "value": [1.0]},
  "oracle": {"kind": "fd", "epsilon": 0.001}
})json";

const char* kMultDiagonalD4 = R"json({
  "scenario_id": "mult-diagonal-d4",
  "experiment": "oracle-compare",
  "model": {
    "dim": 4,
    "lambda": [-0.5, -1.0, -1.5, -2.0],
    "tau": 0.5,
    "a4_alpha": 0.25,
    "noise_kind": "multiplicative",
    "drift": {
      "kind": "bounded_nonlinear",
      "G0": [[-0.30, 0.10, 0.00, 0.05],
             [ 0.00,-0.25, 0.10, 0.00],
             [ 0.05, 0.00,-0.20, 0.10],
             [ 0.00, 0.05, 0.00,-0.25]],
      "G1": [[ 0.15, 0.00, 0.05, 0.00],
             [ 0.05, 0.10, 0.00, 0.00],
             [ 0.00, 0.05, 0.15, 0.00],
             [ 0.05, 0.00, 0.00, 0.10]]
    },
    "diffusion": {"kind": "diagonal_saturating", "s0": [1.0, 1.0, 1.0, 1.0],
                  "s1": [0.5, 0.5, 0.5, 0.5]}
  },
  "grid": {"m": 500, "T": 1.5},
  "control": {"kind": "multiplicative_linear", "p": 2.0},
  "mc": {"n_paths": 200000, "seed": 1001},
  "functional": {"kind": "bounded_smooth", "v": [0.6, -0.4, 0.5, 0.3], "v_mid": [0.2, 0.1, -0.1, 0.2]},
  "initial_segment": {"kind": "sampled_smooth", "base": [0.4, 0.2, -0.3, 0.1],
                      "amplitude": [0.2, -0.1, 0.1, 0.2], "frequency": 1.0},
  "direction": {"kind": "sampled_smooth", "base": [1.0, 0.5, -0.5, 0.8],
                "amplitude": [0.3, 0.2, 0.1, -0.2], "frequency": 1.0},
  "oracle": {"kind": "fd", "epsilon": 0.001}
})json";

const char* kHarnackSweep = R"json({
  "scenario_id": "harnack-sweep",
  "experiment": "inequality-sweep",
  "model": {
    "dim": 1,
    "lambda": [-1.0],
    "tau": 1.0,
    "a4_alpha": 0.25,
    "noise_kind": "additive",
    "drift": {"kind": "linear_delay", "B0": [[0.0]], "B1": [[0.5]]},
    "diffusion": {"kind": "constant", "S": [[0.3]]}
  },
  "grid": {"m": 200, "T": 2.0},
  "control": {"kind": "additive_normalized"},
  "mc": {"n_paths": 40000, "seed": 4242},
  "functional": {"kind": "positive_bounded", "v": [1.0], "lo": 0.5, "hi": 1.5},
  "initial_segment": {"kind": "constant", "value": [1.0]},
  "direction": {"kind": "constant", "value": [1.0]},
  "sweep": {"check": "harnack", "alphas": [1.5, 2.0, 4.0], "eta_scales": [0.5, 1.0, 2.0]}
})json";

const char* kEntropySweep = R"json({
  "scenario_id": "entropy-sweep",
  "experiment": "inequality-sweep",
  "model": {
    "dim": 1,
    "lambda": [-1.0],
    "tau": 1.0,
    "a4_alpha": 0.25,
    "noise_kind": "additive",
    "drift": {"kind": "linear_delay", "B0": [[0.0]], "B1": [[0.5]]},
    "diffusion": {"kind": "constant", "S": [[0.3]]}
  },
  "grid": {"m": 200, "T": 2.0},
  "control": {"kind": "additive_normalized"},
  "mc": {"n_paths": 40000, "seed": 5252},
  "functional": {"kind": "positive_bounded", "v": [1.0], "lo": 0.5, "hi": 1.5},
  "initial_segment": {"kind": "constant", "value": [1.0]},
  "direction": {"kind": "constant", "value": [1.0]},
  "sweep": {"check": "entropy", "deltas": [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0], "c_cfg": 1.0}
})json";

const char* kConvergenceGrid = R"json({
  "scenario_id": "convergence-grid",
  "experiment": "convergence",
  "model": {
    "dim": 1,
    "lambda": [-1.0],
    "tau": 0.5,
    "a4_alpha": 0.25,
    "noise_kind": "multiplicative",
    "drift": {"kind": "linear_delay", "B0": [[-0.2]], "B1": [[0.3]]},
    "diffusion": {"kind": "diagonal_saturating", "s0": [1.0], "s1": [0.5]}
  },
  "grid": {"m": 250, "T": 1.5},
  "control": {"kind": "multiplicative_linear", "p": 2.0},
  "mc": {"n_paths": 50000, "seed": 31415},
  "functional": {"kind": "bounded_smooth", "v": [1.0]},
  "initial_segment": {"kind": "constant", "value": [0.5]},
  "direction": {"kind": "constant", "value": [1.0]},
  "refinements": 1
})json";

}  // namespace

const std::vector<GoldenScenario>& list_golden() {
  static const std::vector<GoldenScenario> catalog = {
      {"add-linear-scalar", "scalar linear delay model, additive noise, analytic oracle",
       kAddLinearScalar},
      {"add-nonlinear-d4", "4d saturating drift, additive noise, fd + pathwise oracles",
       kAddNonlinearD4},
      {"mult-diagonal-d1", "scalar diagonal saturating noise vs CRN finite differences",
       kMultDiagonalD1},
      {"mult-diagonal-d4", "4d saturating drift and diagonal noise vs CRN finite differences",
       kMultDiagonalD4},
      {"harnack-sweep", "Harnack constant extraction over alpha x eta-scale grid", kHarnackSweep},
      {"entropy-sweep", "entropy bound margins over a delta grid", kEntropySweep},
      {"convergence-grid", "multiplicative estimator at dt and dt/2", kConvergenceGrid},
  };
  return catalog;
}

std::optional<std::string> golden_config(const std::string& id) {
  for (const auto& g : list_golden()) {
    if (g.id == id) return g.config_json;
  }
  return std::nullopt;
}

}  // namespace bismut
