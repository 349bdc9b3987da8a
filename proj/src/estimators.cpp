#include "bismut/estimators.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace bismut {

double ito_weight(const IntegrandPath& g, const NoiseBundle& noise) {
  if (g.values.rows() != noise.increments.rows() || g.values.cols() != noise.increments.cols()) {
    throw ConfigError("ito_weight: integrand and noise have different shapes");
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < g.values.cols(); ++k) {
    acc += g.values.col(k).dot(noise.increments.col(k));
  }
  return acc;
}

namespace {

struct PathBuffers {
  NoiseBundle noise;
  NoiseBundle arm_noise;
  Trajectory traj;
  AuxPath aux;
  IntegrandPath hdot;
  IntegratorWorkspace iws;
  SensitivityWorkspace sws;
};

std::size_t sample_count(const MCConfig& mc) {
  if (mc.n_paths < 2) throw ConfigError("mc.n_paths must be >= 2");
  if (!mc.antithetic) return mc.n_paths;
  if (mc.n_paths % 2 != 0) throw ConfigError("antithetic runs require an even n_paths");
  return mc.n_paths / 2;
}

void check_failures(const McSummary& s, const MCConfig& mc, std::size_t paths_per_sample) {
  const std::size_t total = (s.n_ok + s.n_failed) * paths_per_sample;
  const std::size_t failed = s.n_failed * paths_per_sample;
  if (static_cast<double>(failed) > mc.max_failure_fraction * static_cast<double>(total)) {
    std::ostringstream os;
    os << "estimation aborted: " << failed << " of " << total << " paths failed integration";
    throw EstimationError(os.str());
  }
}

// Runs `arm` once (plain) or twice (antithetic, with negated increments) per
// sample and averages the returned statistics.
template <typename ArmFn>
bool antithetic_wrap(PathBuffers& bufs, const GridSpec& grid, int dim, const MCConfig& mc,
                     std::size_t sample, Vector& stats, Vector& diag, ArmFn&& arm) {
  sample_noise_into(grid, dim, mc.seed, sample, bufs.noise.increments);
  bufs.noise.seed = mc.seed;
  bufs.noise.path_index = sample;
  try {
    if (!mc.antithetic) {
      arm(bufs.noise, stats, diag);
    } else {
      Vector second = Vector::Zero(stats.size());
      Vector diag2 = diag;
      arm(bufs.noise, stats, diag);
      bufs.arm_noise.seed = mc.seed;
      bufs.arm_noise.path_index = sample;
      bufs.arm_noise.increments = -bufs.noise.increments;
      arm(bufs.arm_noise, second, diag2);
      stats = 0.5 * (stats + second);
      diag = diag.cwiseMax(diag2);
    }
  } catch (const IntegrationFailure&) {
    return false;
  }
  return true;
}

GradientEstimate finish_estimate(const McSummary& s, const MCConfig& mc, const std::string& method,
                                 std::size_t paths_per_sample) {
  GradientEstimate est;
  est.value = s.mean(0);
  est.std_error = s.std_error(0);
  est.n_paths = s.n_ok * paths_per_sample;
  est.method = method;
  est.diagnostics["failed_paths"] = static_cast<double>(s.n_failed * paths_per_sample);
  return est;
}

}  // namespace

GradientEstimate estimate_semigroup(const ModelSpec& spec, const SegmentPath& xi,
                                    const TestFunctional& f, const GridSpec& grid,
                                    const MCConfig& mc) {
  const std::size_t n = sample_count(mc);
  const std::size_t per_sample = mc.antithetic ? 2 : 1;
  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<PathBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector& diag) -> bool {
      return antithetic_wrap(*bufs, grid, spec.dim, mc, sample, stats, diag,
                             [&](const NoiseBundle& noise, Vector& out, Vector&) {
                               integrate_mild_into(spec, xi, noise, grid, bufs->traj, bufs->iws);
                               out(0) += f.eval(bufs->traj.segment_view(grid.steps));
                             });
    };
  };
  const McSummary s = run_paths(n, mc.threads, 1, 0, factory);
  check_failures(s, mc, per_sample);
  return finish_estimate(s, mc, "semigroup", per_sample);
}

GradientEstimate estimate_gradient_additive(const ModelSpec& spec, const SegmentPath& xi,
                                            const SegmentPath& eta, const TestFunctional& f,
                                            const ControlFunction& u, const GridSpec& grid,
                                            const MCConfig& mc) {
  if (spec.noise_kind != NoiseKind::additive) {
    throw ConfigError("estimate_gradient_additive: additive-noise model required");
  }
  if (!u.usable_additive()) {
    throw ConfigError("estimate_gradient_additive: control must satisfy u(0) = 1");
  }
  const std::size_t n = sample_count(mc);
  const std::size_t per_sample = mc.antithetic ? 2 : 1;
  // Upsilon is deterministic: one evaluation serves every path.
  const AuxPath upsilon = upsilon_path(spec, eta, u, grid);

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<PathBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector& diag) -> bool {
      return antithetic_wrap(
          *bufs, grid, spec.dim, mc, sample, stats, diag,
          [&](const NoiseBundle& noise, Vector& out, Vector& dg) {
            integrate_mild_into(spec, xi, noise, grid, bufs->traj, bufs->iws);
            additive_hdot_into(spec, bufs->traj, upsilon, u, eta, bufs->hdot, bufs->sws);
            const double w = ito_weight(bufs->hdot, noise);
            const double fval = f.eval(bufs->traj.segment_view(grid.steps));
            out(0) += fval * w;
            out(1) += w;
            out(2) += w * w;
            double gmax = 0.0;
            for (Eigen::Index k = 0; k < bufs->hdot.values.cols(); ++k) {
              gmax = std::max(gmax, bufs->hdot.values.col(k).norm());
            }
            dg(0) = std::max(dg(0), gmax);
          });
    };
  };
  const McSummary s = run_paths(n, mc.threads, 3, 1, factory);
  check_failures(s, mc, per_sample);
  GradientEstimate est = finish_estimate(s, mc, "bismut-additive", per_sample);
  est.diagnostics["weight_mean"] = s.mean(1);
  est.diagnostics["weight_mean_se"] = s.std_error(1);
  est.diagnostics["weight_second_moment"] = s.mean(2);
  est.diagnostics["max_integrand_norm"] = s.diag_max(0);
  return est;
}

GradientEstimate estimate_gradient_multiplicative(const ModelSpec& spec, const SegmentPath& xi,
                                                  const SegmentPath& eta, const TestFunctional& f,
                                                  const ControlFunction& u, const GridSpec& grid,
                                                  const MCConfig& mc) {
  if (spec.noise_kind != NoiseKind::multiplicative) {
    throw ConfigError("estimate_gradient_multiplicative: multiplicative-noise model required");
  }
  const std::size_t n = sample_count(mc);
  const std::size_t per_sample = mc.antithetic ? 2 : 1;
  const long long cutoff = u.cutoff_step;

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<PathBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector& diag) -> bool {
      return antithetic_wrap(
          *bufs, grid, spec.dim, mc, sample, stats, diag,
          [&](const NoiseBundle& noise, Vector& out, Vector& dg) {
            integrate_mild_into(spec, xi, noise, grid, bufs->traj, bufs->iws);
            z_path_into(spec, bufs->traj, eta, u, bufs->aux, bufs->sws);
            double max_ratio = 0.0;
            multiplicative_hdot_into(spec, bufs->traj, bufs->aux, u, bufs->hdot, bufs->sws,
                                     &max_ratio);
            const double w = ito_weight(bufs->hdot, noise);
            double w_tail = 0.0;
            for (Eigen::Index k = static_cast<Eigen::Index>(cutoff);
                 k < bufs->hdot.values.cols(); ++k) {
              w_tail += bufs->hdot.values.col(k).dot(noise.increments.col(k));
            }
            const double fval = f.eval(bufs->traj.segment_view(grid.steps));
            out(0) += fval * w;
            out(1) += w;
            out(2) += w * w;
            out(3) += w_tail * w_tail;
            double gmax = 0.0;
            for (Eigen::Index k = 0; k < bufs->hdot.values.cols(); ++k) {
              gmax = std::max(gmax, bufs->hdot.values.col(k).norm());
            }
            dg(0) = std::max(dg(0), gmax);
            dg(1) = std::max(dg(1), max_ratio);
          });
    };
  };
  const McSummary s = run_paths(n, mc.threads, 4, 2, factory);
  check_failures(s, mc, per_sample);
  GradientEstimate est = finish_estimate(s, mc, "bismut-multiplicative", per_sample);
  est.diagnostics["weight_mean"] = s.mean(1);
  est.diagnostics["weight_mean_se"] = s.std_error(1);
  est.diagnostics["weight_second_moment"] = s.mean(2);
  est.diagnostics["max_integrand_norm"] = s.diag_max(0);
  est.diagnostics["max_z_over_u"] = s.diag_max(1);
  est.diagnostics["tail_weight_share"] =
      s.mean(2) > 0.0 ? s.mean(3) / s.mean(2) : 0.0;
  return est;
}

GradientEstimate estimate_weight_mean(const ModelSpec& spec, const SegmentPath& xi,
                                      const SegmentPath& eta, const ControlFunction& u,
                                      const GridSpec& grid, const MCConfig& mc) {
  const bool additive = (spec.noise_kind == NoiseKind::additive);
  const std::size_t n = sample_count(mc);
  const std::size_t per_sample = mc.antithetic ? 2 : 1;
  std::shared_ptr<const AuxPath> upsilon;
  if (additive) upsilon = std::make_shared<AuxPath>(upsilon_path(spec, eta, u, grid));

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<PathBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector& diag) -> bool {
      return antithetic_wrap(*bufs, grid, spec.dim, mc, sample, stats, diag,
                             [&](const NoiseBundle& noise, Vector& out, Vector&) {
                               integrate_mild_into(spec, xi, noise, grid, bufs->traj, bufs->iws);
                               if (additive) {
                                 additive_hdot_into(spec, bufs->traj, *upsilon, u, eta, bufs->hdot,
                                                    bufs->sws);
                               } else {
                                 z_path_into(spec, bufs->traj, eta, u, bufs->aux, bufs->sws);
                                 multiplicative_hdot_into(spec, bufs->traj, bufs->aux, u,
                                                          bufs->hdot, bufs->sws);
                               }
                               out(0) += ito_weight(bufs->hdot, noise);
                             });
    };
  };
  const McSummary s = run_paths(n, mc.threads, 1, 0, factory);
  check_failures(s, mc, per_sample);
  return finish_estimate(s, mc, additive ? "weight-additive" : "weight-multiplicative", per_sample);
}

}  // namespace bismut
