#include "bismut/sensitivity.hpp"

#include <cmath>
#include <sstream>

namespace bismut {

namespace {

long long kink_step(const GridSpec& grid) {
  // t = T - tau is a grid node because both T and tau are multiples of dt.
  return grid.steps - grid.m;
}

double grid_theta_p(const Vector& udot, long long cutoff, double p) {
  double best = p + (p - 1.0) * udot(0);
  for (long long k = 1; k < cutoff; ++k) {
    best = std::min(best, p + (p - 1.0) * udot(static_cast<Eigen::Index>(k)));
  }
  return best;
}

void check_traj(const ModelSpec& spec, const Trajectory& traj) {
  if (traj.values.rows() != spec.dim) throw ConfigError("trajectory dimension mismatch");
}

}  // namespace

ControlFunction control_function(ControlFunction::Kind kind, const GridSpec& grid, double p) {
  if (kind == ControlFunction::Kind::table) {
    throw ConfigError("table controls are built with control_function_from_table");
  }
  const long long K = grid.steps;
  const long long cutoff = kink_step(grid);
  const double span = grid.horizon - grid.tau;  // T - tau > 0 by grid invariant

  ControlFunction c;
  c.kind = kind;
  c.p = p;
  c.cutoff_step = cutoff;
  c.u.setZero(static_cast<Eigen::Index>(K + 1));
  c.udot.setZero(static_cast<Eigen::Index>(K + 1));
  for (long long k = 0; k < cutoff; ++k) {
    const double rem = span - grid.time_at(k);
    if (kind == ControlFunction::Kind::additive_normalized) {
      c.u(static_cast<Eigen::Index>(k)) = rem / span;
      c.udot(static_cast<Eigen::Index>(k)) = -1.0 / span;
    } else {
      c.u(static_cast<Eigen::Index>(k)) = rem;
      c.udot(static_cast<Eigen::Index>(k)) = -1.0;
    }
  }
  c.theta_p = grid_theta_p(c.udot, cutoff, p);
  if (kind == ControlFunction::Kind::multiplicative_linear) {
    if (!(p > 1.0)) throw ConfigError("multiplicative control requires p > 1");
    if (!(c.theta_p > 0.0)) throw ConfigError("multiplicative control has theta_p <= 0");
  }
  return c;
}

ControlFunction control_function_from_table(const GridSpec& grid, Vector u, Vector udot, double p) {
  const long long K = grid.steps;
  if (u.size() != K + 1 || udot.size() != K + 1) {
    throw ConfigError("table control: need K+1 node values for u and udot");
  }
  const long long cutoff = kink_step(grid);
  for (long long k = 0; k < cutoff; ++k) {
    if (!(u(static_cast<Eigen::Index>(k)) > 0.0)) {
      throw ConfigError("table control: u must be positive on [0, T-tau)");
    }
  }
  for (long long k = cutoff; k <= K; ++k) {
    if (u(static_cast<Eigen::Index>(k)) != 0.0) {
      throw ConfigError("table control: u must vanish on [T-tau, T]");
    }
    udot(static_cast<Eigen::Index>(k)) = 0.0;
  }
  ControlFunction c;
  c.kind = ControlFunction::Kind::table;
  c.p = p;
  c.cutoff_step = cutoff;
  c.u = std::move(u);
  c.udot = std::move(udot);
  c.theta_p = grid_theta_p(c.udot, cutoff, p);
  if (!(c.theta_p > 0.0)) {
    std::ostringstream os;
    os << "table control rejected: theta_p = " << c.theta_p << " <= 0 for p = " << p;
    throw ConfigError(os.str());
  }
  return c;
}

void SensitivityWorkspace::ensure(int dim) {
  if (deriv.size() != dim) {
    deriv.resize(dim);
    tmp.resize(dim);
    tmp2.resize(dim);
    scratch.resize(dim);
  }
}

AuxPath upsilon_path(const ModelSpec& spec, const SegmentPath& eta, const ControlFunction& u,
                     const GridSpec& grid) {
  if (spec.noise_kind != NoiseKind::additive) {
    throw ConfigError("upsilon_path: additive-noise model required");
  }
  if (!u.usable_additive()) throw ConfigError("upsilon_path: control must satisfy u(0) = 1");
  if (eta.values.rows() != spec.dim || eta.values.cols() != grid.m + 1) {
    throw ConfigError("upsilon_path: direction segment does not match model/grid");
  }
  AuxPath out;
  out.role = AuxRole::upsilon;
  out.grid = grid;
  out.values.resize(spec.dim, static_cast<Eigen::Index>(grid.node_count()));
  out.values.leftCols(grid.m + 1) = eta.values;
  const Vector eta0 = eta.values.col(grid.m);
  for (long long k = 1; k <= grid.steps; ++k) {
    const double uk = u.u(static_cast<Eigen::Index>(k));
    const Eigen::Index col = grid.m + static_cast<Eigen::Index>(k);
    if (uk == 0.0) {
      out.values.col(col).setZero();
    } else {
      out.values.col(col) =
          uk * ((spec.eigenvalues.array() * grid.time_at(k)).exp() * eta0.array()).matrix();
    }
  }
  return out;
}

namespace {

// Shared linear-SDE stepper for tangent / malliavin paths:
//   y_{k+1} = e^{dt A}[ y_k + (grad_{y_t}F(X_t) + forcing_k) dt
//                       + (grad_{y_k} sigma(X_k)) dW_k ]
// with forcing_k = sigma(X_k) hdot_k for the malliavin path, 0 otherwise.
void linearized_sweep(const ModelSpec& spec, const Trajectory& traj, const IntegrandPath* hdot,
                      AuxPath& out, SensitivityWorkspace& ws) {
  const GridSpec& grid = traj.grid;
  const int d = spec.dim;
  ws.ensure(d);
  const Eigen::ArrayXd decay = (spec.eigenvalues.array() * grid.dt).exp();
  const Eigen::Index m = grid.m;
  for (long long k = 0; k < grid.steps; ++k) {
    const Eigen::Index col = m + static_cast<Eigen::Index>(k);
    const auto base_seg = traj.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    const auto dir_seg = out.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    eval_drift_derivative_into(spec.drift, base_seg, dir_seg, ws.deriv, ws.scratch);
    if (hdot != nullptr) {
      apply_sigma_into(spec.diffusion, traj.values.col(col),
                       hdot->values.col(static_cast<Eigen::Index>(k)), ws.tmp);
      ws.deriv += ws.tmp;
    }
    apply_sigma_derivative_into(spec.diffusion, traj.values.col(col), out.values.col(col),
                                traj.noise_increment(k), ws.tmp2);
    ws.tmp = out.values.col(col) + grid.dt * ws.deriv + ws.tmp2;
    out.values.col(col + 1) = (decay * ws.tmp.array()).matrix();
  }
}

}  // namespace

void tangent_path_into(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
                       AuxPath& out, SensitivityWorkspace& ws) {
  check_traj(spec, traj);
  if (eta.values.rows() != spec.dim || eta.values.cols() != traj.grid.m + 1) {
    throw ConfigError("tangent_path: direction segment does not match model/grid");
  }
  out.role = AuxRole::tangent;
  out.grid = traj.grid;
  out.values.resize(spec.dim, static_cast<Eigen::Index>(traj.grid.node_count()));
  out.values.leftCols(traj.grid.m + 1) = eta.values;
  linearized_sweep(spec, traj, nullptr, out, ws);
}

AuxPath tangent_path(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta) {
  AuxPath out;
  SensitivityWorkspace ws;
  tangent_path_into(spec, traj, eta, out, ws);
  return out;
}

void malliavin_path_into(const ModelSpec& spec, const Trajectory& traj, const IntegrandPath& hdot,
                         AuxPath& out, SensitivityWorkspace& ws) {
  check_traj(spec, traj);
  if (hdot.values.rows() != spec.dim || hdot.values.cols() != traj.grid.steps) {
    throw ConfigError("malliavin_path: hdot does not match model/grid");
  }
  out.role = AuxRole::malliavin;
  out.grid = traj.grid;
  out.values.resize(spec.dim, static_cast<Eigen::Index>(traj.grid.node_count()));
  out.values.leftCols(traj.grid.m + 1).setZero();
  linearized_sweep(spec, traj, &hdot, out, ws);
}

AuxPath malliavin_path(const ModelSpec& spec, const Trajectory& traj, const IntegrandPath& hdot) {
  AuxPath out;
  SensitivityWorkspace ws;
  malliavin_path_into(spec, traj, hdot, out, ws);
  return out;
}

void z_path_into(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
                 const ControlFunction& u, AuxPath& out, SensitivityWorkspace& ws) {
  check_traj(spec, traj);
  if (spec.noise_kind != NoiseKind::multiplicative) {
    throw ConfigError("z_path: multiplicative-noise model required");
  }
  if (u.kind == ControlFunction::Kind::additive_normalized) {
    throw ConfigError("z_path: control must be of multiplicative kind");
  }
  if (!(u.theta_p > 0.0)) throw ConfigError("z_path: control has theta_p <= 0");
  if (eta.values.rows() != spec.dim || eta.values.cols() != traj.grid.m + 1) {
    throw ConfigError("z_path: direction segment does not match model/grid");
  }
  const GridSpec& grid = traj.grid;
  const int d = spec.dim;
  ws.ensure(d);
  out.role = AuxRole::z;
  out.grid = grid;
  out.values.resize(d, static_cast<Eigen::Index>(grid.node_count()));
  out.values.leftCols(grid.m + 1) = eta.values;

  const Eigen::ArrayXd decay = (spec.eigenvalues.array() * grid.dt).exp();
  const Eigen::Index m = grid.m;
  const long long cutoff = u.cutoff_step;

  for (long long k = 0; k < cutoff; ++k) {
    const Eigen::Index col = m + static_cast<Eigen::Index>(k);
    const auto base_seg = traj.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    const auto dir_seg = out.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    eval_drift_derivative_into(spec.drift, base_seg, dir_seg, ws.deriv, ws.scratch);
    apply_sigma_derivative_into(spec.diffusion, traj.values.col(col), out.values.col(col),
                                traj.noise_increment(k), ws.tmp2);
    const double ratio =
        u.u(static_cast<Eigen::Index>(k + 1)) / u.u(static_cast<Eigen::Index>(k));
    ws.tmp = out.values.col(col) + grid.dt * ws.deriv + ws.tmp2;
    out.values.col(col + 1) = ratio * (decay * ws.tmp.array()).matrix();
  }
  for (long long k = cutoff; k < grid.steps; ++k) {
    out.values.col(m + static_cast<Eigen::Index>(k) + 1).setZero();
  }
}

AuxPath z_path(const ModelSpec& spec, const Trajectory& traj, const SegmentPath& eta,
               const ControlFunction& u) {
  AuxPath out;
  SensitivityWorkspace ws;
  z_path_into(spec, traj, eta, u, out, ws);
  return out;
}

void additive_hdot_into(const ModelSpec& spec, const Trajectory& traj, const AuxPath& upsilon,
                        const ControlFunction& u, const SegmentPath& eta, IntegrandPath& out,
                        SensitivityWorkspace& ws) {
  check_traj(spec, traj);
  if (spec.noise_kind != NoiseKind::additive) {
    throw ConfigError("additive_hdot: additive-noise model required");
  }
  const GridSpec& grid = traj.grid;
  const int d = spec.dim;
  ws.ensure(d);
  out.dt = grid.dt;
  out.values.resize(d, static_cast<Eigen::Index>(grid.steps));
  const Vector eta0 = eta.values.col(grid.m);
  const Eigen::Index m = grid.m;
  for (long long k = 0; k < grid.steps; ++k) {
    const auto base_seg = traj.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    const auto ups_seg = upsilon.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    eval_drift_derivative_into(spec.drift, base_seg, ups_seg, ws.deriv, ws.scratch);
    const double ud = u.udot(static_cast<Eigen::Index>(k));
    if (ud != 0.0 && k < u.cutoff_step) {
      ws.deriv -=
          ud * ((spec.eigenvalues.array() * grid.time_at(k)).exp() * eta0.array()).matrix();
    }
    auto col = out.values.col(static_cast<Eigen::Index>(k));
    apply_sigma_inverse_into(spec.diffusion, traj.values.col(m + static_cast<Eigen::Index>(k)),
                             ws.deriv, ws.tmp);
    col = ws.tmp;
  }
}

IntegrandPath additive_hdot(const ModelSpec& spec, const Trajectory& traj, const AuxPath& upsilon,
                            const ControlFunction& u, const SegmentPath& eta) {
  IntegrandPath out;
  SensitivityWorkspace ws;
  additive_hdot_into(spec, traj, upsilon, u, eta, out, ws);
  return out;
}

void multiplicative_hdot_into(const ModelSpec& spec, const Trajectory& traj, const AuxPath& z,
                              const ControlFunction& u, IntegrandPath& out,
                              SensitivityWorkspace& ws, double* max_z_over_u) {
  check_traj(spec, traj);
  if (spec.noise_kind != NoiseKind::multiplicative) {
    throw ConfigError("multiplicative_hdot: multiplicative-noise model required");
  }
  const GridSpec& grid = traj.grid;
  const int d = spec.dim;
  ws.ensure(d);
  out.dt = grid.dt;
  out.values.resize(d, static_cast<Eigen::Index>(grid.steps));
  const Eigen::Index m = grid.m;
  double max_ratio = 0.0;
  for (long long k = 0; k < grid.steps; ++k) {
    const Eigen::Index col = m + static_cast<Eigen::Index>(k);
    if (k < u.cutoff_step) {
      const double uk = u.u(static_cast<Eigen::Index>(k));
      if (uk == 0.0) throw ConfigError("multiplicative_hdot: u vanishes inside [0, T-tau)");
      ws.deriv = z.values.col(col) / uk;
      max_ratio = std::max(max_ratio, z.values.col(col).norm() / uk);
    } else {
      const auto base_seg = traj.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
      const auto z_seg = z.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
      eval_drift_derivative_into(spec.drift, base_seg, z_seg, ws.deriv, ws.scratch);
    }
    apply_sigma_inverse_into(spec.diffusion, traj.values.col(col), ws.deriv, ws.tmp);
    out.values.col(static_cast<Eigen::Index>(k)) = ws.tmp;
  }
  if (max_z_over_u != nullptr) *max_z_over_u = max_ratio;
}

IntegrandPath multiplicative_hdot(const ModelSpec& spec, const Trajectory& traj, const AuxPath& z,
                                  const ControlFunction& u, double* max_z_over_u) {
  IntegrandPath out;
  SensitivityWorkspace ws;
  multiplicative_hdot_into(spec, traj, z, u, out, ws, max_z_over_u);
  return out;
}

}  // namespace bismut
