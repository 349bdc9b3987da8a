#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bismut/types.hpp"

namespace bismut {

// Componentwise saturating map with derivative bound 1.
inline double sat(double x) { return std::tanh(x); }
inline double sat_prime(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

enum class NoiseKind { additive, multiplicative };

/// Drift functional F : C([-tau,0] -> H) -> H.
///
/// linear_delay:       F(xi) = B0 xi(0) + B1 xi(-tau)
/// bounded_nonlinear:  F(xi) = G0 sat(xi(0)) + G1 sat(xi(-tau))
///                             + sum_j w_j sat(xi(theta_j))
/// Both kinds carry an optional +shift*xi(0) term (pseudo-contractive
/// normalization); for linear_delay the normalizer folds it into B0 instead.
struct DriftSpec {
  enum class Kind { linear_delay, bounded_nonlinear };
  Kind kind = Kind::linear_delay;
  Matrix B0, B1;              // linear_delay
  Matrix G0, G1;              // bounded_nonlinear gains
  Vector distributed_weights; // optional, one scalar per segment node; empty = off
  double linear_shift = 0.0;

  int dim() const { return static_cast<int>(kind == Kind::linear_delay ? B0.rows() : G0.rows()); }
  /// Declared derivative bound L_F.
  double lipschitz() const;
};

DriftSpec make_linear_delay_drift(const Matrix& B0, const Matrix& B1);
DriftSpec make_bounded_nonlinear_drift(const Matrix& G0, const Matrix& G1,
                                       const Vector& distributed_weights = Vector());

/// Diffusion sigma : H -> L(H).
///
/// constant:            sigma(x) = S, S invertible (checked at build)
/// diagonal_saturating: sigma(x)_ii = s0_i + s1_i sat(x_i), |s1_i| < s0_i
struct DiffusionSpec {
  enum class Kind { constant, diagonal_saturating };
  Kind kind = Kind::constant;
  Matrix S, S_inv;  // constant
  Vector s0, s1;    // diagonal_saturating

  int dim() const { return static_cast<int>(kind == Kind::constant ? S.rows() : s0.size()); }
  bool state_independent() const { return kind == Kind::constant; }
  /// Derivative bound L_sigma (Frobenius norm of grad sigma per unit direction).
  double lipschitz() const;
  /// sup_x ||sigma^{-1}(x)|| (operator norm bound).
  double inverse_bound() const;
};

DiffusionSpec make_constant_diffusion(const Matrix& S);
DiffusionSpec make_diagonal_saturating_diffusion(const Vector& s0, const Vector& s1);

/// Truncated model on H = R^d with diagonal generator A = diag(lambda).
struct ModelSpec {
  int dim = 0;
  Vector eigenvalues;  // lambda_1..lambda_d
  double delay = 0.0;  // tau
  DriftSpec drift;
  DiffusionSpec diffusion;
  double a4_alpha = 0.25;
  NoiseKind noise_kind = NoiseKind::additive;
};

/// Builds a ModelSpec, throwing ConfigError on structural problems
/// (dimension mismatches, tau <= 0, alpha outside (0,1/2), additive noise
/// with state-dependent diffusion).
ModelSpec make_model(Vector eigenvalues, double delay, DriftSpec drift, DiffusionSpec diffusion,
                     double a4_alpha, NoiseKind noise_kind);

// --- assumption checks -------------------------------------------------

struct AssumptionReport {
  bool a1_contractive = false;     // all lambda_i <= 0
  bool a2_drift_bounded = false;   // L_F finite
  bool a3_sigma_ok = false;        // invertible sigma, bounded grad sigma
  bool a4_alpha_ok = false;        // alpha in (0, 1/2)
  double drift_lipschitz = 0.0;
  double sigma_lipschitz = 0.0;
  double sigma_inverse_bound = 0.0;
  double a4_integral = 0.0;  // int_0^1 s^{-2a} ||e^{sA} sigma(0)||_HS^2 ds
  std::vector<std::string> failures;

  bool all_passed() const { return a1_contractive && a2_drift_bounded && a3_sigma_ok && a4_alpha_ok; }
};

AssumptionReport validate_assumptions(const ModelSpec& spec);

/// Shifts the spectrum by -max(lambda)^+ and compensates the drift with
/// +max(lambda)^+ * xi(0). Identity on already-contractive specs; idempotent.
ModelSpec normalize_pseudocontractive(const ModelSpec& spec);

// --- coefficient evaluation --------------------------------------------

// Allocation-free variants used by the integrators; `scratch` must have
// size d. The value-returning wrappers below are for tests and callers
// outside hot loops.
void eval_drift_into(const DriftSpec& drift, const SegmentView& seg, Vector& out, Vector& scratch);
void eval_drift_derivative_into(const DriftSpec& drift, const SegmentView& base,
                                const SegmentView& dir, Vector& out, Vector& scratch);

Vector eval_drift(const DriftSpec& drift, const SegmentPath& seg);
Vector eval_drift_derivative(const DriftSpec& drift, const SegmentPath& seg, const SegmentPath& dir);

Matrix eval_sigma(const DiffusionSpec& diff, const Vector& x);
Matrix eval_sigma_inverse(const DiffusionSpec& diff, const Vector& x);
Matrix eval_sigma_derivative(const DiffusionSpec& diff, const Vector& x, const Vector& dir);

// sigma(x) * w, sigma^{-1}(x) * w, (grad_dir sigma)(x) * w
void apply_sigma_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& w, Vector& out);
void apply_sigma_inverse_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& w, Vector& out);
void apply_sigma_derivative_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& dir,
                                 const Eigen::Ref<const Vector>& w, Vector& out);

/// e^{tA} v, componentwise exp(lambda_i t) v_i. Throws on t < 0.
Vector semigroup_apply(const ModelSpec& spec, double t, const Vector& v);

// --- test functionals ---------------------------------------------------

/// f : C([-tau,0] -> H) -> R evaluated on segment grids. Reads xi(0) and,
/// when the mid-weight is nonzero, xi(-tau/2) (requires even m).
struct TestFunctional {
  enum class Kind { linear_endpoint, bounded_smooth, positive_bounded, indicator };
  Kind kind = Kind::linear_endpoint;
  Vector v;        // weight on xi(0)
  Vector v_mid;    // weight on xi(-tau/2); empty or zero = unused
  double lo = 0.0, hi = 1.0;  // positive_bounded range (lo > 0)
  double threshold = 0.0;     // indicator: 1_{v.xi(0) > threshold}

  bool has_gradient() const { return kind != Kind::indicator; }
  bool positive() const { return kind == Kind::positive_bounded; }
  double eval(const SegmentView& seg) const;
  /// Directional derivative <grad f(seg), dir>.
  double gradient_pairing(const SegmentView& seg, const SegmentView& dir) const;
};

TestFunctional linear_endpoint_functional(const Vector& v);
TestFunctional bounded_smooth_functional(const Vector& v, const Vector& v_mid = Vector());
TestFunctional positive_bounded_functional(const Vector& v, double lo, double hi,
                                           const Vector& v_mid = Vector());
TestFunctional indicator_functional(const Vector& v, double threshold);

}  // namespace bismut
