#pragma once

#include <vector>

#include "bismut/model.hpp"
#include "bismut/rng.hpp"
#include "bismut/types.hpp"

namespace bismut {

/// Grid with dt = tau/m; throws ConfigError unless T is an exact multiple
/// of dt and T > tau > 0.
GridSpec make_grid(double tau, double horizon, int m);

/// Column index of a grid-aligned time t in [0, T]; throws on off-grid t.
long long grid_step_of(const GridSpec& grid, double t);

/// Reusable per-thread buffers for the integrators. All integrate_* calls
/// accept one; sizes are fixed on first use.
struct IntegratorWorkspace {
  Vector drift, noise_term, acc, scratch, shifted_dw;
  void ensure(int dim);
};

/// Exponential-Euler mild integrator:
///   X(t_{k+1}) = e^{dt A} [ X(t_k) + F(X_{t_k}) dt + sigma(X(t_k)) dW_k ].
/// Throws IntegrationFailure (with the step index) if a state goes
/// non-finite.
void integrate_mild_into(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                         const GridSpec& grid, Trajectory& out, IntegratorWorkspace& ws);
Trajectory integrate_mild(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                          const GridSpec& grid);

/// Same recursion with dW_k replaced by dW_k + eps * hdot(t_k) dt.
/// eps = 0 reproduces integrate_mild bitwise.
void integrate_shifted_into(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                            const IntegrandPath& hdot, double eps, const GridSpec& grid,
                            Trajectory& out, IntegratorWorkspace& ws);
Trajectory integrate_shifted(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                             const IntegrandPath& hdot, double eps, const GridSpec& grid);

/// Window of m+1 values ending at grid-aligned t in [0, T].
SegmentPath segment_at(const Trajectory& traj, double t);

struct PicardResult {
  Trajectory trajectory;           // the n-th iterate
  std::vector<double> distances;   // sup-distance between successive iterates
  bool diverged = false;           // distance grew over 3 consecutive iterates
};

/// Iterates the discrete mild-form fixed-point map on the supplied noise.
/// The drift convolution uses a midpoint semigroup weight, so the fixed
/// point is an independent discretization of the same equation rather than
/// the integrate_mild recursion itself.
PicardResult picard_reference(const ModelSpec& spec, const SegmentPath& xi,
                              const NoiseBundle& noise, const GridSpec& grid, int n_iter);

/// sup over shared nodes of the per-node H-distance.
double trajectory_sup_distance(const Trajectory& a, const Trajectory& b);

}  // namespace bismut
