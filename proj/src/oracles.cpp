#include "bismut/oracles.hpp"

#include <cmath>
#include <memory>

namespace bismut {

double default_fd_epsilon(const SegmentPath& xi, const SegmentPath& eta) {
  const double eta_norm = eta.sup_norm();
  if (eta_norm == 0.0) return 1e-3;
  return 1e-3 * std::max(1.0, xi.sup_norm()) / eta_norm;
}

namespace {

struct FdBuffers {
  NoiseBundle noise;
  Trajectory traj_plus, traj_minus;
  IntegratorWorkspace iws;
};

SegmentPath shifted_segment(const SegmentPath& xi, const SegmentPath& eta, double scale) {
  SegmentPath out = xi;
  out.values += scale * eta.values;
  return out;
}

}  // namespace

GradientEstimate fd_gradient(const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta,
                             const TestFunctional& f, double eps, const GridSpec& grid,
                             const MCConfig& mc) {
  if (eps <= 0.0) eps = default_fd_epsilon(xi, eta);
  if (mc.n_paths < 2) throw ConfigError("fd_gradient: n_paths must be >= 2");
  const SegmentPath xi_plus = shifted_segment(xi, eta, eps);
  const SegmentPath xi_minus = shifted_segment(xi, eta, -eps);

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<FdBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
      sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
      try {
        integrate_mild_into(spec, xi_plus, bufs->noise, grid, bufs->traj_plus, bufs->iws);
        integrate_mild_into(spec, xi_minus, bufs->noise, grid, bufs->traj_minus, bufs->iws);
      } catch (const IntegrationFailure&) {
        return false;
      }
      const double fp = f.eval(bufs->traj_plus.segment_view(grid.steps));
      const double fm = f.eval(bufs->traj_minus.segment_view(grid.steps));
      stats(0) = (fp - fm) / (2.0 * eps);
      return true;
    };
  };
  const McSummary s = run_paths(mc.n_paths, mc.threads, 1, 0, factory);
  GradientEstimate est;
  est.value = s.mean(0);
  est.std_error = s.std_error(0);
  est.n_paths = s.n_ok;
  est.method = "fd";
  est.diagnostics["epsilon"] = eps;
  est.diagnostics["failed_paths"] = static_cast<double>(s.n_failed);
  return est;
}

namespace {

struct PathwiseBuffers {
  NoiseBundle noise;
  Trajectory traj;
  AuxPath tangent;
  IntegratorWorkspace iws;
  SensitivityWorkspace sws;
};

}  // namespace

GradientEstimate pathwise_gradient(const ModelSpec& spec, const SegmentPath& xi,
                                   const SegmentPath& eta, const TestFunctional& f,
                                   const GridSpec& grid, const MCConfig& mc) {
  if (!f.has_gradient()) throw ConfigError("pathwise_gradient: functional lacks a gradient rule");
  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<PathwiseBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
      sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
      try {
        integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
      } catch (const IntegrationFailure&) {
        return false;
      }
      tangent_path_into(spec, bufs->traj, eta, bufs->tangent, bufs->sws);
      stats(0) = f.gradient_pairing(bufs->traj.segment_view(grid.steps),
                                    bufs->tangent.segment_view(grid.steps));
      return true;
    };
  };
  const McSummary s = run_paths(mc.n_paths, mc.threads, 1, 0, factory);
  GradientEstimate est;
  est.value = s.mean(0);
  est.std_error = s.std_error(0);
  est.n_paths = s.n_ok;
  est.method = "pathwise";
  est.diagnostics["failed_paths"] = static_cast<double>(s.n_failed);
  return est;
}

double analytic_linear_gradient(const ModelSpec& spec, const SegmentPath& eta,
                                const TestFunctional& f, const GridSpec& grid) {
  if (spec.drift.kind != DriftSpec::Kind::linear_delay) {
    throw ConfigError("analytic_linear_gradient: linear_delay drift required");
  }
  if (spec.diffusion.kind != DiffusionSpec::Kind::constant) {
    throw ConfigError("analytic_linear_gradient: constant diffusion required");
  }
  if (f.kind != TestFunctional::Kind::linear_endpoint ||
      (f.v_mid.size() > 0 && !f.v_mid.isZero())) {
    throw ConfigError("analytic_linear_gradient: functional must be v.xi(0)");
  }
  if (eta.values.rows() != spec.dim || eta.values.cols() != grid.m + 1) {
    throw ConfigError("analytic_linear_gradient: direction segment does not match grid");
  }

  // Reference grid 10x finer than the MC grid; breakpoints at multiples of
  // tau stay grid-aligned, so RK4 keeps its order on each interval.
  const int refine = 10;
  const long long mf = static_cast<long long>(grid.m) * refine;
  const long long kf = grid.steps * refine;
  const double h = grid.dt / refine;
  const int d = spec.dim;

  Matrix aeff = spec.eigenvalues.asDiagonal();
  aeff += spec.drift.B0;
  if (spec.drift.linear_shift != 0.0) {
    aeff += spec.drift.linear_shift * Matrix::Identity(d, d);
  }
  const Matrix& b1 = spec.drift.B1;

  Matrix vals(d, mf + kf + 1);
  Matrix dervs(d, mf + kf + 1);
  // History: linear interpolation of the supplied direction segment.
  for (long long j = 0; j <= mf; ++j) {
    const long long i0 = j / refine;
    const long long r = j % refine;
    if (r == 0) {
      vals.col(j) = eta.values.col(static_cast<Eigen::Index>(i0));
    } else {
      const double frac = static_cast<double>(r) / refine;
      vals.col(j) = (1.0 - frac) * eta.values.col(static_cast<Eigen::Index>(i0)) +
                    frac * eta.values.col(static_cast<Eigen::Index>(i0 + 1));
    }
  }
  dervs.setZero();

  const auto hist_mid = [&](long long j) -> Vector {
    // value at fine position j + 1/2
    if (j < mf) return 0.5 * (vals.col(j) + vals.col(j + 1));  // history is piecewise linear
    const auto v0 = vals.col(j);
    const auto v1 = vals.col(j + 1);
    const auto d0 = dervs.col(j);
    const auto d1 = dervs.col(j + 1);
    // cubic Hermite at the midpoint
    return 0.5 * (v0 + v1) + 0.125 * h * (d0 - d1);
  };

  Vector k1(d), k2(d), k3(d), k4(d), y(d);
  const auto rhs = [&](const Vector& state, const Vector& delayed) -> Vector {
    return aeff * state + b1 * delayed;
  };

  for (long long i = mf; i < mf + kf; ++i) {
    const long long jd = i - mf;  // fine index of t - tau
    y = vals.col(i);
    k1 = rhs(y, vals.col(jd));
    dervs.col(i) = k1;
    const Vector mid = hist_mid(jd);
    k2 = rhs(y + 0.5 * h * k1, mid);
    k3 = rhs(y + 0.5 * h * k2, mid);
    k4 = rhs(y + h * k3, vals.col(jd + 1));
    vals.col(i + 1) = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  dervs.col(mf + kf) = rhs(vals.col(mf + kf), vals.col(kf));

  return f.v.dot(vals.col(mf + kf));
}

namespace {

struct IbpBuffers {
  NoiseBundle noise;
  Trajectory traj, traj_plus, traj_minus;
  AuxPath aux;
  IntegrandPath hdot;
  IntegratorWorkspace iws;
  SensitivityWorkspace sws;
};

}  // namespace

IbpResult ibp_residual(const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta,
                       const TestFunctional& f, const ControlFunction& u, double eps,
                       const GridSpec& grid, const MCConfig& mc) {
  if (!(eps > 0.0)) throw ConfigError("ibp_residual: eps must be positive");
  const bool additive = (spec.noise_kind == NoiseKind::additive);
  std::shared_ptr<const AuxPath> upsilon;
  if (additive) upsilon = std::make_shared<AuxPath>(upsilon_path(spec, eta, u, grid));

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<IbpBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
      sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
      try {
        integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
        if (additive) {
          additive_hdot_into(spec, bufs->traj, *upsilon, u, eta, bufs->hdot, bufs->sws);
        } else {
          z_path_into(spec, bufs->traj, eta, u, bufs->aux, bufs->sws);
          multiplicative_hdot_into(spec, bufs->traj, bufs->aux, u, bufs->hdot, bufs->sws);
        }
        const double w = ito_weight(bufs->hdot, bufs->noise);
        const double f0 = f.eval(bufs->traj.segment_view(grid.steps));
        integrate_shifted_into(spec, xi, bufs->noise, bufs->hdot, eps, grid, bufs->traj_plus,
                               bufs->iws);
        integrate_shifted_into(spec, xi, bufs->noise, bufs->hdot, -eps, grid, bufs->traj_minus,
                               bufs->iws);
        const double fp = f.eval(bufs->traj_plus.segment_view(grid.steps));
        const double fm = f.eval(bufs->traj_minus.segment_view(grid.steps));
        const double dhf = (fp - fm) / (2.0 * eps);
        stats(0) = dhf - f0 * w;
        stats(1) = dhf;
        stats(2) = f0 * w;
      } catch (const IntegrationFailure&) {
        return false;
      }
      return true;
    };
  };
  const McSummary s = run_paths(mc.n_paths, mc.threads, 3, 0, factory);
  IbpResult r;
  r.residual = std::abs(s.mean(0));
  r.std_error = s.std_error(0);
  r.dhf_mean = s.mean(1);
  r.dhf_se = s.std_error(1);
  r.fw_mean = s.mean(2);
  r.fw_se = s.std_error(2);
  r.n_paths = s.n_ok;
  return r;
}

}  // namespace bismut
