#pragma once

#include "bismut/model.hpp"
#include "bismut/pathsim.hpp"
#include "bismut/types.hpp"

namespace bismut {

/// Scalar control schedule u on [0, T] with left-interval derivative values;
/// u vanishes on [T-tau, T]. theta_p = inf_t { p + (p-1) u'(t) } over
/// [0, T-tau], evaluated on grid intervals.
struct ControlFunction {
  enum class Kind { additive_normalized, multiplicative_linear, table };
  Kind kind = Kind::additive_normalized;
  Vector u;      // K+1 node values
  Vector udot;   // K+1 values; udot[k] applies on [t_k, t_{k+1}); zero from the kink on
  double p = 2.0;
  double theta_p = 0.0;
  long long cutoff_step = 0;  // k* with t_{k*} = T - tau

  bool usable_additive() const { return u(0) == 1.0; }
};

/// additive_normalized: u = (T-tau-t)^+/(T-tau); multiplicative_linear:
/// u = (T-tau-t)^+ (theta_p = 1 for all p > 1).
ControlFunction control_function(ControlFunction::Kind kind, const GridSpec& grid, double p);

/// Table control from node values. Enforces u > 0 before the kink, u = 0
/// after, and theta_p > 0 for the supplied p; derivative values after the
/// kink are zeroed (left-value convention).
ControlFunction control_function_from_table(const GridSpec& grid, Vector u, Vector udot, double p);

struct SensitivityWorkspace {
  Vector deriv, tmp, tmp2, scratch;
  void ensure(int dim);
};

/// Upsilon(t) = u(t) e^{tA} eta(0) for t > 0, eta on [-tau, 0]. Deterministic.
AuxPath upsilon_path(const ModelSpec& spec, const SegmentPath& eta, const ControlFunction& u,
                     const GridSpec& grid);

/// Tangent process: d beta = {A beta + grad_{beta_t} F(X_t)} dt
///                          + (grad_{beta(t)} sigma(X(t))) dW,  beta_0 = eta.
void tangent_path_into(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
                       AuxPath& out, SensitivityWorkspace& ws);
AuxPath tangent_path(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta);

/// Malliavin derivative path: d alpha = {A alpha + grad_{alpha_t} F(X_t)
///   + sigma(X(t)) hdot(t)} dt + (grad_{alpha(t)} sigma(X(t))) dW, alpha_0 = 0.
void malliavin_path_into(const ModelSpec& spec, const Trajectory& traj, const IntegrandPath& hdot,
                         AuxPath& out, SensitivityWorkspace& ws);
AuxPath malliavin_path(const ModelSpec& spec, const Trajectory& traj, const IntegrandPath& hdot);

/// Z process of the multiplicative formula. The stiff -Z/u damping is
/// integrated by the exact per-step factor u(t_{k+1})/u(t_k) applied to the
/// whole step, which forces Z(T-tau) = 0 exactly; nodes past the kink are
/// exactly zero while earlier segment values are retained.
void z_path_into(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
                 const ControlFunction& u, AuxPath& out, SensitivityWorkspace& ws);
AuxPath z_path(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
               const ControlFunction& u);

/// hdot(t) = sigma^{-1} { grad_{Upsilon_t} F(X_t) - udot(t) e^{tA} eta(0) },
/// the udot term active on [0, T-tau) only.
void additive_hdot_into(const ModelSpec& spec, const Trajectory& traj, const AuxPath& upsilon,
                        const ControlFunction& u, const SegmentPath& eta, IntegrandPath& out,
                        SensitivityWorkspace& ws);
IntegrandPath additive_hdot(const ModelSpec& spec, const Trajectory& traj, const AuxPath& upsilon,
                            const ControlFunction& u, const SegmentPath& eta);

/// hdot(t) = sigma^{-1}(X(t)) { Z(t)/u(t) on [0,T-tau) ;
///                              grad_{Z_t} F(X_t) on [T-tau, T] }.
/// Returns the largest ||Z||/u seen before the kink through *max_z_over_u
/// when non-null.
void multiplicative_hdot_into(const ModelSpec& spec, const Trajectory& traj, const AuxPath& z,
                              const ControlFunction& u, IntegrandPath& out,
                              SensitivityWorkspace& ws, double* max_z_over_u = nullptr);
IntegrandPath multiplicative_hdot(const ModelSpec& spec, const Trajectory& traj, const AuxPath& z,
                                  const ControlFunction& u, double* max_z_over_u = nullptr);

}  // namespace bismut
