#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bismut/oracles.hpp"

namespace bismut {

struct SweepPointResult {
  std::map<std::string, double> params;
  double c_hat = 0.0;   // extracted implied constant at this sweep point
  double c_se = 0.0;    // delta-method standard error
  double lhs = 0.0;     // inequality left-hand side (for reference)
  double rhs = 0.0;     // right-hand side at c_hat (or at the ceiling)
  std::map<std::string, double> extras;
};

/// One sweep of an implied-constant check. `violation` flags an LHS > RHS
/// excess beyond 3 combined SE at the configured ceiling; checks are
/// one-sided and never assert the inequality false.
struct ImpliedConstantReport {
  std::string check;
  std::string scenario_id;
  std::vector<SweepPointResult> points;
  double max_c = 0.0;
  double median_c = 0.0;
  std::optional<double> ceiling;
  bool violation = false;
  std::vector<std::string> notes;
};

/// Thm 3.1(1) surrogate: C(T) = ((T-tau) ^ 1) |grad P_T f|^2 / (P_T f^2 ||eta||^2),
/// swept over horizons (additive noise, normalized linear control).
ImpliedConstantReport check_gradient_bound_additive(const ModelSpec& spec, const SegmentPath& xi,
                                                    const SegmentPath& eta, const TestFunctional& f,
                                                    const std::vector<double>& horizons, int m,
                                                    const MCConfig& mc,
                                                    std::optional<double> c_ceiling = std::nullopt);

/// Entropy bound (Eq. 14 surrogate) on a fixed grid: for each delta,
/// margin = delta*Ent + C ||eta||^2/(delta ((T-tau)^1)) P_T f - |grad P_T f|.
/// Reports per-delta minimal admissible constants and the single minimal
/// C making every margin >= -3 SE.
ImpliedConstantReport check_entropy_bound(const ModelSpec& spec, const SegmentPath& xi,
                                          const SegmentPath& eta, const TestFunctional& f,
                                          const std::vector<double>& deltas, const GridSpec& grid,
                                          const MCConfig& mc, double c_cfg = 1.0);

/// Harnack inequality (Eq. 13 surrogate):
/// C(alpha, s) = ((alpha-1)((T-tau)^1)/(alpha ||s eta||^2))
///               * log[ (P_T f(xi))^alpha / P_T f^alpha(xi + s eta) ], clamped at 0.
ImpliedConstantReport check_harnack(const ModelSpec& spec, const SegmentPath& xi,
                                    const SegmentPath& eta, const TestFunctional& f,
                                    const std::vector<double>& alphas,
                                    const std::vector<double>& eta_scales, const GridSpec& grid,
                                    const MCConfig& mc,
                                    std::optional<double> c_ceiling = std::nullopt);

/// Thm 3.3 surrogate: C(T,p) = (1 ^ sqrt(T-tau)) |grad P_T f| /
/// ((P_T |f|^p)^{1/p} ||eta||), swept over horizons x p. Includes the
/// strong-Feller smoke test on a discontinuous indicator functional.
ImpliedConstantReport check_gradient_bound_multiplicative(
    const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta, const TestFunctional& f,
    const std::vector<double>& ps, const std::vector<double>& horizons, int m, const MCConfig& mc,
    std::optional<double> c_ceiling = std::nullopt);

struct StrongFellerSmoke {
  std::vector<double> eps;
  std::vector<double> diff;     // P_T f(xi + eps eta) - P_T f(xi), CRN per path
  std::vector<double> se;
  bool decreasing_ok = false;   // smallest-eps |diff| within 3 SE of the trend down
};

StrongFellerSmoke strong_feller_smoke(const ModelSpec& spec, const SegmentPath& xi,
                                      const SegmentPath& eta, const TestFunctional& indicator,
                                      const std::vector<double>& eps_list, const GridSpec& grid,
                                      const MCConfig& mc);

}  // namespace bismut
