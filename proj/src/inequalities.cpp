#include "bismut/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace bismut {

namespace {

struct SweepBuffers {
  NoiseBundle noise;
  Trajectory traj, traj_shifted;
  AuxPath aux;
  IntegrandPath hdot;
  IntegratorWorkspace iws;
  SensitivityWorkspace sws;
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void finalize(ImpliedConstantReport& report) {
  std::vector<double> cs;
  cs.reserve(report.points.size());
  for (const auto& p : report.points) cs.push_back(p.c_hat);
  report.max_c = cs.empty() ? 0.0 : *std::max_element(cs.begin(), cs.end());
  report.median_c = median_of(cs);
}

double clamp0(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

ImpliedConstantReport check_gradient_bound_additive(const ModelSpec& spec, const SegmentPath& xi,
                                                    const SegmentPath& eta, const TestFunctional& f,
                                                    const std::vector<double>& horizons, int m,
                                                    const MCConfig& mc,
                                                    std::optional<double> c_ceiling) {
  ImpliedConstantReport report;
  report.check = "gradient-additive";
  report.ceiling = c_ceiling;
  const double eta_norm2 = eta.sup_norm() * eta.sup_norm();
  if (eta_norm2 == 0.0) throw ConfigError("gradient bound check: eta must be nonzero");

  for (const double T : horizons) {
    const GridSpec grid = make_grid(spec.delay, T, m);
    const ControlFunction u =
        control_function(ControlFunction::Kind::additive_normalized, grid, 2.0);
    const AuxPath upsilon = upsilon_path(spec, eta, u, grid);

    auto factory = [&]() -> PathKernel {
      auto bufs = std::make_shared<SweepBuffers>();
      return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
        sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
        try {
          integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
          additive_hdot_into(spec, bufs->traj, upsilon, u, eta, bufs->hdot, bufs->sws);
        } catch (const IntegrationFailure&) {
          return false;
        }
        const double w = ito_weight(bufs->hdot, bufs->noise);
        const double fv = f.eval(bufs->traj.segment_view(grid.steps));
        stats(0) = fv * w;
        stats(1) = fv * fv;
        return true;
      };
    };
    const McSummary s = run_paths(mc.n_paths, mc.threads, 2, 0, factory);

    const double kappa = std::min(T - spec.delay, 1.0);
    const double a = s.mean(0);
    const double b = s.mean(1);
    const double var_a = s.mean_cov(0, 0);
    const double var_b = s.mean_cov(1, 1);
    const double cov_ab = s.mean_cov(0, 1);
    if (!(b > 3.0 * std::sqrt(var_b))) {
      throw EstimationError("gradient bound check: P_T f^2 is below the MC noise floor");
    }

    SweepPointResult point;
    point.params["T"] = T;
    point.c_hat = kappa * a * a / (b * eta_norm2);
    const double ga = 2.0 * kappa * a / (b * eta_norm2);
    const double gb = -kappa * a * a / (b * b * eta_norm2);
    point.c_se = std::sqrt(
        std::max(0.0, ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov_ab));
    point.lhs = a * a;
    point.rhs = point.c_hat * b * eta_norm2 / kappa;
    point.extras["grad"] = a;
    point.extras["grad_se"] = std::sqrt(var_a);
    point.extras["ptf2"] = b;

    if (c_ceiling) {
      const double margin = *c_ceiling * b * eta_norm2 / kappa - a * a;
      const double da = -2.0 * a;
      const double db = *c_ceiling * eta_norm2 / kappa;
      const double se_margin = std::sqrt(
          std::max(0.0, da * da * var_a + db * db * var_b + 2.0 * da * db * cov_ab));
      if (margin < -3.0 * se_margin) report.violation = true;
      point.rhs = *c_ceiling * b * eta_norm2 / kappa;
    }
    report.points.push_back(std::move(point));
  }
  finalize(report);
  return report;
}

ImpliedConstantReport check_entropy_bound(const ModelSpec& spec, const SegmentPath& xi,
                                          const SegmentPath& eta, const TestFunctional& f,
                                          const std::vector<double>& deltas, const GridSpec& grid,
                                          const MCConfig& mc, double c_cfg) {
  if (!f.positive()) throw ConfigError("entropy bound check: positive functional required");
  ImpliedConstantReport report;
  report.check = "entropy";
  report.ceiling = c_cfg;
  const double eta_norm2 = eta.sup_norm() * eta.sup_norm();
  if (eta_norm2 == 0.0) throw ConfigError("entropy bound check: eta must be nonzero");
  const double kappa = std::min(grid.horizon - grid.tau, 1.0);

  const ControlFunction u =
      control_function(ControlFunction::Kind::additive_normalized, grid, 2.0);
  const AuxPath upsilon = upsilon_path(spec, eta, u, grid);

  auto factory = [&]() -> PathKernel {
    auto bufs = std::make_shared<SweepBuffers>();
    return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
      sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
      try {
        integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
        additive_hdot_into(spec, bufs->traj, upsilon, u, eta, bufs->hdot, bufs->sws);
      } catch (const IntegrationFailure&) {
        return false;
      }
      const double w = ito_weight(bufs->hdot, bufs->noise);
      const double fv = f.eval(bufs->traj.segment_view(grid.steps));
      stats(0) = fv * w;
      stats(1) = fv;
      stats(2) = fv * std::log(fv);
      return true;
    };
  };
  const McSummary s = run_paths(mc.n_paths, mc.threads, 3, 0, factory);

  const double a = s.mean(0);   // gradient estimate
  const double b = s.mean(1);   // P_T f
  const double c = s.mean(2);   // P_T (f log f)
  const double entropy = c - b * std::log(b);

  for (const double delta : deltas) {
    if (!(delta > 0.0)) throw ConfigError("entropy bound check: delta must be positive");
    const double cterm = c_cfg * eta_norm2 / (delta * kappa);
    const double margin = delta * entropy + cterm * b - std::abs(a);

    const double da = a >= 0.0 ? -1.0 : 1.0;
    const double db = -delta * (std::log(b) + 1.0) + cterm;
    const double dc = delta;
    double var = da * da * s.mean_cov(0, 0) + db * db * s.mean_cov(1, 1) +
                 dc * dc * s.mean_cov(2, 2) + 2.0 * da * db * s.mean_cov(0, 1) +
                 2.0 * da * dc * s.mean_cov(0, 2) + 2.0 * db * dc * s.mean_cov(1, 2);
    const double margin_se = std::sqrt(std::max(0.0, var));

    SweepPointResult point;
    point.params["delta"] = delta;
    // Minimal constant putting this delta's margin at the -3 SE boundary.
    point.c_hat =
        clamp0((std::abs(a) - delta * entropy - 3.0 * margin_se) * delta * kappa / (eta_norm2 * b));
    point.c_se = 0.0;
    point.lhs = std::abs(a);
    point.rhs = delta * entropy + cterm * b;
    point.extras["margin"] = margin;
    point.extras["margin_se"] = margin_se;
    point.extras["entropy_term"] = entropy;
    if (margin < -3.0 * margin_se) report.violation = true;
    report.points.push_back(std::move(point));
  }
  finalize(report);
  std::ostringstream os;
  os << "minimal admissible constant over delta grid: " << report.max_c
     << " (margins evaluated at configured constant " << c_cfg << ")";
  report.notes.push_back(os.str());
  return report;
}

ImpliedConstantReport check_harnack(const ModelSpec& spec, const SegmentPath& xi,
                                    const SegmentPath& eta, const TestFunctional& f,
                                    const std::vector<double>& alphas,
                                    const std::vector<double>& eta_scales, const GridSpec& grid,
                                    const MCConfig& mc, std::optional<double> c_ceiling) {
  if (!f.positive()) throw ConfigError("harnack check: positive functional required");
  ImpliedConstantReport report;
  report.check = "harnack";
  report.ceiling = c_ceiling;
  const double eta_norm = eta.sup_norm();
  if (eta_norm == 0.0) throw ConfigError("harnack check: eta must be nonzero");
  const double kappa = std::min(grid.horizon - grid.tau, 1.0);
  const int na = static_cast<int>(alphas.size());

  for (const double scale : eta_scales) {
    SegmentPath xi_shift = xi;
    xi_shift.values += scale * eta.values;

    auto factory = [&]() -> PathKernel {
      auto bufs = std::make_shared<SweepBuffers>();
      return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
        sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
        try {
          integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
          integrate_mild_into(spec, xi_shift, bufs->noise, grid, bufs->traj_shifted, bufs->iws);
        } catch (const IntegrationFailure&) {
          return false;
        }
        stats(0) = f.eval(bufs->traj.segment_view(grid.steps));
        const double fv = f.eval(bufs->traj_shifted.segment_view(grid.steps));
        for (int i = 0; i < na; ++i) stats(1 + i) = std::pow(fv, alphas[i]);
        return true;
      };
    };
    const McSummary s = run_paths(mc.n_paths, mc.threads, 1 + na, 0, factory);

    const double b0 = s.mean(0);
    for (int i = 0; i < na; ++i) {
      const double alpha = alphas[i];
      const double bi = s.mean(1 + i);
      const double norm2 = (scale * eta_norm) * (scale * eta_norm);
      const double factor = (alpha - 1.0) * kappa / (alpha * norm2);
      const double lratio = alpha * std::log(b0) - std::log(bi);
      const double var_l = (alpha / b0) * (alpha / b0) * s.mean_cov(0, 0) +
                           (1.0 / bi) * (1.0 / bi) * s.mean_cov(1 + i, 1 + i) -
                           2.0 * alpha / (b0 * bi) * s.mean_cov(0, 1 + i);

      SweepPointResult point;
      point.params["alpha"] = alpha;
      point.params["eta_scale"] = scale;
      point.c_hat = clamp0(factor * lratio);
      point.c_se = factor * std::sqrt(std::max(0.0, var_l));
      point.lhs = std::pow(b0, alpha);
      point.rhs = bi * std::exp(alpha * point.c_hat * norm2 / ((alpha - 1.0) * kappa));
      point.extras["log_ratio"] = lratio;
      point.extras["ptf_base"] = b0;
      point.extras["ptf_alpha_shifted"] = bi;
      if (c_ceiling && point.c_hat > *c_ceiling + 3.0 * point.c_se) report.violation = true;
      report.points.push_back(std::move(point));
    }
  }
  finalize(report);
  return report;
}

ImpliedConstantReport check_gradient_bound_multiplicative(
    const ModelSpec& spec, const SegmentPath& xi, const SegmentPath& eta, const TestFunctional& f,
    const std::vector<double>& ps, const std::vector<double>& horizons, int m, const MCConfig& mc,
    std::optional<double> c_ceiling) {
  if (spec.noise_kind != NoiseKind::multiplicative) {
    throw ConfigError("multiplicative gradient check: multiplicative-noise model required");
  }
  ImpliedConstantReport report;
  report.check = "gradient-multiplicative";
  report.ceiling = c_ceiling;
  const double eta_norm = eta.sup_norm();
  if (eta_norm == 0.0) throw ConfigError("multiplicative gradient check: eta must be nonzero");
  const int np = static_cast<int>(ps.size());

  for (const double T : horizons) {
    const GridSpec grid = make_grid(spec.delay, T, m);
    const ControlFunction u =
        control_function(ControlFunction::Kind::multiplicative_linear, grid, 2.0);

    auto factory = [&]() -> PathKernel {
      auto bufs = std::make_shared<SweepBuffers>();
      return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
        sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
        try {
          integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
          z_path_into(spec, bufs->traj, eta, u, bufs->aux, bufs->sws);
          multiplicative_hdot_into(spec, bufs->traj, bufs->aux, u, bufs->hdot, bufs->sws);
        } catch (const IntegrationFailure&) {
          return false;
        }
        const double w = ito_weight(bufs->hdot, bufs->noise);
        const double fv = f.eval(bufs->traj.segment_view(grid.steps));
        stats(0) = fv * w;
        for (int i = 0; i < np; ++i) stats(1 + i) = std::pow(std::abs(fv), ps[i]);
        return true;
      };
    };
    const McSummary s = run_paths(mc.n_paths, mc.threads, 1 + np, 0, factory);

    const double kappa = std::min(1.0, std::sqrt(T - spec.delay));
    const double a = s.mean(0);
    for (int i = 0; i < np; ++i) {
      const double p = ps[i];
      const double b = s.mean(1 + i);
      if (!(b > 0.0)) throw EstimationError("multiplicative gradient check: P_T |f|^p vanished");
      const double broot = std::pow(b, 1.0 / p);

      SweepPointResult point;
      point.params["T"] = T;
      point.params["p"] = p;
      point.c_hat = kappa * std::abs(a) / (broot * eta_norm);
      const double da = kappa * (a >= 0.0 ? 1.0 : -1.0) / (broot * eta_norm);
      const double db = -kappa * std::abs(a) / (p * std::pow(b, 1.0 / p + 1.0) * eta_norm);
      point.c_se = std::sqrt(std::max(0.0, da * da * s.mean_cov(0, 0) +
                                               db * db * s.mean_cov(1 + i, 1 + i) +
                                               2.0 * da * db * s.mean_cov(0, 1 + i)));
      point.lhs = std::abs(a);
      point.rhs = point.c_hat * broot * eta_norm / kappa;
      point.extras["grad"] = a;
      point.extras["grad_se"] = std::sqrt(s.mean_cov(0, 0));
      point.extras["ptf_p"] = b;
      if (c_ceiling && point.c_hat > *c_ceiling + 3.0 * point.c_se) report.violation = true;
      report.points.push_back(std::move(point));
    }
  }
  finalize(report);

  // Strong-Feller smoke test on a discontinuous functional.
  const TestFunctional ind = indicator_functional(
      f.v.size() == spec.dim ? f.v : Vector::Ones(spec.dim), 0.0);
  MCConfig smoke_mc = mc;
  smoke_mc.n_paths = std::min<std::size_t>(mc.n_paths, 20000);
  const GridSpec smoke_grid = make_grid(spec.delay, horizons.front(), m);
  const StrongFellerSmoke smoke =
      strong_feller_smoke(spec, xi, eta, ind, {1.0, 0.5, 0.25}, smoke_grid, smoke_mc);
  std::ostringstream os;
  os << "strong-Feller smoke |P_T 1(xi+eps eta) - P_T 1(xi)|:";
  for (std::size_t i = 0; i < smoke.eps.size(); ++i) {
    os << " eps=" << smoke.eps[i] << " -> " << smoke.diff[i] << " (se " << smoke.se[i] << ")";
  }
  os << (smoke.decreasing_ok ? " [shrinks]" : " [no shrink]");
  report.notes.push_back(os.str());
  if (!smoke.decreasing_ok) report.violation = true;
  return report;
}

StrongFellerSmoke strong_feller_smoke(const ModelSpec& spec, const SegmentPath& xi,
                                      const SegmentPath& eta, const TestFunctional& indicator,
                                      const std::vector<double>& eps_list, const GridSpec& grid,
                                      const MCConfig& mc) {
  StrongFellerSmoke out;
  for (const double eps : eps_list) {
    SegmentPath xi_shift = xi;
    xi_shift.values += eps * eta.values;
    auto factory = [&]() -> PathKernel {
      auto bufs = std::make_shared<SweepBuffers>();
      return [&, bufs](std::size_t sample, Vector& stats, Vector&) -> bool {
        sample_noise_into(grid, spec.dim, mc.seed, sample, bufs->noise.increments);
        try {
          integrate_mild_into(spec, xi, bufs->noise, grid, bufs->traj, bufs->iws);
          integrate_mild_into(spec, xi_shift, bufs->noise, grid, bufs->traj_shifted, bufs->iws);
        } catch (const IntegrationFailure&) {
          return false;
        }
        stats(0) = indicator.eval(bufs->traj_shifted.segment_view(grid.steps)) -
                   indicator.eval(bufs->traj.segment_view(grid.steps));
        return true;
      };
    };
    const McSummary s = run_paths(mc.n_paths, mc.threads, 1, 0, factory);
    out.eps.push_back(eps);
    out.diff.push_back(s.mean(0));
    out.se.push_back(s.std_error(0));
  }
  if (out.diff.size() >= 2) {
    const double first = std::abs(out.diff.front());
    const double last = std::abs(out.diff.back());
    const double combined =
        std::sqrt(out.se.front() * out.se.front() + out.se.back() * out.se.back());
    out.decreasing_ok = (last <= first + 3.0 * combined);
  }
  return out;
}

}  // namespace bismut
