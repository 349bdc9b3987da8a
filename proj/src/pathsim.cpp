#include "bismut/pathsim.hpp"

#include <cmath>
#include <sstream>

namespace bismut {

GridSpec make_grid(double tau, double horizon, int m) {
  if (!(tau > 0.0)) throw ConfigError("make_grid: tau must be positive");
  if (!(horizon > tau)) throw ConfigError("make_grid: horizon T must exceed tau");
  if (m < 1) throw ConfigError("make_grid: m must be >= 1");
  GridSpec g;
  g.tau = tau;
  g.horizon = horizon;
  g.m = m;
  g.dt = tau / m;
  const double steps_real = horizon / g.dt;
  g.steps = std::llround(steps_real);
  if (std::abs(static_cast<double>(g.steps) * g.dt - horizon) > 1e-9 * std::max(1.0, horizon)) {
    std::ostringstream os;
    os << "make_grid: T = " << horizon << " is not an integer multiple of dt = " << g.dt;
    throw ConfigError(os.str());
  }
  return g;
}

long long grid_step_of(const GridSpec& grid, double t) {
  const long long k = std::llround(t / grid.dt);
  if (k < 0 || k > grid.steps ||
      std::abs(static_cast<double>(k) * grid.dt - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    std::ostringstream os;
    os << "time " << t << " is not a grid node in [0, " << grid.horizon << "]";
    throw std::invalid_argument(os.str());
  }
  return k;
}

void IntegratorWorkspace::ensure(int dim) {
  if (drift.size() != dim) {
    drift.resize(dim);
    noise_term.resize(dim);
    acc.resize(dim);
    scratch.resize(dim);
    shifted_dw.resize(dim);
  }
}

namespace {

void integrate_core(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                    const IntegrandPath* hdot, double eps, const GridSpec& grid, Trajectory& out,
                    IntegratorWorkspace& ws) {
  const int d = spec.dim;
  if (xi.values.rows() != d || xi.values.cols() != grid.m + 1) {
    throw ConfigError("integrate: initial segment does not match model/grid");
  }
  if (noise.increments.rows() != d || noise.increments.cols() != grid.steps) {
    throw ConfigError("integrate: noise bundle does not match model/grid");
  }
  const bool shifted = (hdot != nullptr && eps != 0.0);
  if (shifted && (hdot->values.rows() != d || hdot->values.cols() != grid.steps)) {
    throw ConfigError("integrate: hdot does not match model/grid");
  }
  ws.ensure(d);
  out.grid = grid;
  out.noise = &noise;
  out.values.resize(d, static_cast<Eigen::Index>(grid.node_count()));
  out.values.leftCols(grid.m + 1) = xi.values;

  const Eigen::ArrayXd step_decay = (spec.eigenvalues.array() * grid.dt).exp();
  const Eigen::Index m = grid.m;

  for (long long k = 0; k < grid.steps; ++k) {
    const Eigen::Index col = m + static_cast<Eigen::Index>(k);
    const auto seg = out.values.block(0, static_cast<Eigen::Index>(k), d, m + 1);
    eval_drift_into(spec.drift, seg, ws.drift, ws.scratch);
    if (shifted) {
      ws.shifted_dw = noise.increments.col(static_cast<Eigen::Index>(k)) +
                      (eps * grid.dt) * hdot->values.col(static_cast<Eigen::Index>(k));
      apply_sigma_into(spec.diffusion, out.values.col(col), ws.shifted_dw, ws.noise_term);
    } else {
      apply_sigma_into(spec.diffusion, out.values.col(col),
                       noise.increments.col(static_cast<Eigen::Index>(k)), ws.noise_term);
    }
    ws.acc = out.values.col(col) + grid.dt * ws.drift + ws.noise_term;
    out.values.col(col + 1) = (step_decay * ws.acc.array()).matrix();
    if (!out.values.col(col + 1).allFinite()) {
      std::ostringstream os;
      os << "integration produced a non-finite state at step " << k;
      throw IntegrationFailure(k, os.str());
    }
  }
}

}  // namespace

void integrate_mild_into(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                         const GridSpec& grid, Trajectory& out, IntegratorWorkspace& ws) {
  integrate_core(spec, xi, noise, nullptr, 0.0, grid, out, ws);
}

Trajectory integrate_mild(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                          const GridSpec& grid) {
  Trajectory out;
  IntegratorWorkspace ws;
  integrate_mild_into(spec, xi, noise, grid, out, ws);
  return out;
}

void integrate_shifted_into(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                            const IntegrandPath& hdot, double eps, const GridSpec& grid,
                            Trajectory& out, IntegratorWorkspace& ws) {
  integrate_core(spec, xi, noise, &hdot, eps, grid, out, ws);
}

Trajectory integrate_shifted(const ModelSpec& spec, const SegmentPath& xi, const NoiseBundle& noise,
                             const IntegrandPath& hdot, double eps, const GridSpec& grid) {
  Trajectory out;
  IntegratorWorkspace ws;
  integrate_shifted_into(spec, xi, noise, hdot, eps, grid, out, ws);
  return out;
}

SegmentPath segment_at(const Trajectory& traj, double t) {
  const long long k = grid_step_of(traj.grid, t);
  SegmentPath seg;
  seg.dt = traj.grid.dt;
  seg.values = traj.values.block(0, static_cast<Eigen::Index>(k), traj.values.rows(),
                                 traj.grid.m + 1);
  return seg;
}

double trajectory_sup_distance(const Trajectory& a, const Trajectory& b) {
  const Eigen::Index n = std::min(a.values.cols(), b.values.cols());
  double best = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    best = std::max(best, (a.values.col(j) - b.values.col(j)).norm());
  }
  return best;
}

PicardResult picard_reference(const ModelSpec& spec, const SegmentPath& xi,
                              const NoiseBundle& noise, const GridSpec& grid, int n_iter) {
  if (n_iter < 1) throw ConfigError("picard_reference: n_iter must be >= 1");
  const int d = spec.dim;
  if (xi.values.rows() != d || xi.values.cols() != grid.m + 1) {
    throw ConfigError("picard_reference: initial segment does not match model/grid");
  }
  const Eigen::Index m = grid.m;
  const Eigen::Index nodes = static_cast<Eigen::Index>(grid.node_count());

  const Eigen::ArrayXd full_decay = (spec.eigenvalues.array() * grid.dt).exp();
  const Eigen::ArrayXd half_decay = (spec.eigenvalues.array() * (0.5 * grid.dt)).exp();

  Matrix current(d, nodes);
  current.leftCols(m + 1) = xi.values;
  for (Eigen::Index j = m + 1; j < nodes; ++j) current.col(j) = xi.values.col(m);

  PicardResult result;
  result.trajectory.grid = grid;
  result.trajectory.noise = &noise;

  Matrix next(d, nodes);
  Vector deterministic(d), drift_acc(d), noise_acc(d), drift_val(d), noise_val(d), scratch(d);

  for (int iter = 0; iter < n_iter; ++iter) {
    next.leftCols(m + 1) = xi.values;
    deterministic = xi.values.col(m);
    drift_acc.setZero();
    noise_acc.setZero();
    for (long long k = 0; k < grid.steps; ++k) {
      const auto seg = current.block(0, static_cast<Eigen::Index>(k), d, m + 1);
      eval_drift_into(spec.drift, seg, drift_val, scratch);
      apply_sigma_into(spec.diffusion, current.col(m + static_cast<Eigen::Index>(k)),
                       noise.increments.col(static_cast<Eigen::Index>(k)), noise_val);
      deterministic = (full_decay * deterministic.array()).matrix();
      drift_acc = (full_decay * drift_acc.array()).matrix() +
                  grid.dt * (half_decay * drift_val.array()).matrix();
      noise_acc = (full_decay * (noise_acc + noise_val).array()).matrix();
      next.col(m + static_cast<Eigen::Index>(k) + 1) = deterministic + drift_acc + noise_acc;
    }
    double dist = 0.0;
    for (Eigen::Index j = m + 1; j < nodes; ++j) {
      dist = std::max(dist, (next.col(j) - current.col(j)).norm());
    }
    result.distances.push_back(dist);
    current.swap(next);

    const std::size_t n = result.distances.size();
    if (n >= 3 && result.distances[n - 1] > result.distances[n - 2] &&
        result.distances[n - 2] > result.distances[n - 3]) {
      result.diverged = true;
      break;
    }
  }

  result.trajectory.values = current;
  return result;
}

}  // namespace bismut
