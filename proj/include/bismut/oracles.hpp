#pragma once

#include "bismut/estimators.hpp"

namespace bismut {

/// Default central-difference step: 1e-3 * max(1, ||xi||_inf) / ||eta||_inf.
double default_fd_epsilon(const SegmentPath& xi, const SegmentPath& eta);

/// Central finite difference [P_T f(xi+eps eta) - P_T f(xi-eps eta)]/(2 eps)
/// with common random numbers; the standard error is computed on the
/// per-path differenced statistic. eps <= 0 selects the default rule.
GradientEstimate fd_gradient(const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta,
                             const TestFunctional& f, double eps, const GridSpec& grid,
                             const MCConfig& mc);

/// Pathwise estimator E <grad f(X_T-segment), tangent segment at T>.
/// Requires a functional with a gradient rule.
GradientEstimate pathwise_gradient(const ModelSpec& spec, const SegmentPath& xi,
                                   const SegmentPath& eta, const TestFunctional& f,
                                   const GridSpec& grid, const MCConfig& mc);

/// Deterministic gradient for linear_delay drift, constant sigma and
/// f = v.xi(0): solves the delay ODE v' = (A+B0)v(t) + B1 v(t-tau), v_0 = eta
/// by the method of steps (RK4 with Hermite dense output) on a grid 10x finer
/// than the MC grid. Zero MC error.
double analytic_linear_gradient(const ModelSpec& spec, const SegmentPath& eta,
                                const TestFunctional& f, const GridSpec& grid);

struct IbpResult {
  double residual = 0.0;   // | E[D_h f] - E[f * weight] | via paired samples
  double std_error = 0.0;  // SE of the per-path paired difference
  double dhf_mean = 0.0;
  double dhf_se = 0.0;
  double fw_mean = 0.0;
  double fw_se = 0.0;
  std::size_t n_paths = 0;
};

/// Integration-by-parts residual: D_h f estimated by a CRN central
/// difference along the eps-shifted flow with the same constructed h, versus
/// f times the Ito weight. The noise regime follows spec.noise_kind.
IbpResult ibp_residual(const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta,
                       const TestFunctional& f, const ControlFunction& u, double eps,
                       const GridSpec& grid, const MCConfig& mc);

}  // namespace bismut
