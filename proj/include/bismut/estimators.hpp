#pragma once

#include <map>
#include <string>

#include "bismut/sensitivity.hpp"
#include "bismut/stats.hpp"

namespace bismut {

struct MCConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  int threads = 1;
  double max_failure_fraction = 0.001;
};

/// Monte Carlo estimate with standard error and method-specific diagnostics.
struct GradientEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string method;
  std::map<std::string, double> diagnostics;
};

class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

/// Left-point Ito sum  sum_k < g(t_k), dW_k >.
double ito_weight(const IntegrandPath& g, const NoiseBundle& noise);

/// P_T f estimate: MC mean of f applied to the terminal segment.
GradientEstimate estimate_semigroup(const ModelSpec& spec, const SegmentPath& xi,
                                    const TestFunctional& f, const GridSpec& grid,
                                    const MCConfig& mc);

/// Additive-noise Bismut estimator of grad_eta P_T f:
///   E[ f(X_T-segment) * int <sigma^{-1}{grad_{Ups_t}F - udot e^{tA}eta(0)}, dW> ].
GradientEstimate estimate_gradient_additive(const ModelSpec& spec, const SegmentPath& xi,
                                            const SegmentPath& eta, const TestFunctional& f,
                                            const ControlFunction& u, const GridSpec& grid,
                                            const MCConfig& mc);

/// Multiplicative-noise Bismut estimator of grad_eta P_T f built on the Z
/// process and its weight integrand.
GradientEstimate estimate_gradient_multiplicative(const ModelSpec& spec, const SegmentPath& xi,
                                                  const SegmentPath& eta, const TestFunctional& f,
                                                  const ControlFunction& u, const GridSpec& grid,
                                                  const MCConfig& mc);

/// Mean of the plain Ito weight alone (diagnostic; exactly mean-zero in law).
GradientEstimate estimate_weight_mean(const ModelSpec& spec, const SegmentPath& xi,
                                      const SegmentPath& eta, const ControlFunction& u,
                                      const GridSpec& grid, const MCConfig& mc);

}  // namespace bismut
