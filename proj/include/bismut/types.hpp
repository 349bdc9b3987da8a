#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bismut {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Read-only view of a segment window: column j holds the H-vector at
// theta = -tau + j*dt, j = 0..m. Binds to blocks of column-major paths
// without copying.
using SegmentView = Eigen::Ref<const Matrix>;

/// Uniform time grid with delay tau = m*dt and horizon T = steps*dt.
struct GridSpec {
  double dt = 0.0;
  int m = 0;            // segment nodes per delay window (m+1 values)
  long long steps = 0;  // K: steps on [0, T]
  double tau = 0.0;
  double horizon = 0.0;

  long long node_count() const { return m + steps + 1; }  // nodes on [-tau, T]
  double time_at(long long k) const { return static_cast<double>(k) * dt; }
};

/// Discretized element of C([-tau,0] -> H): d x (m+1) values, step dt.
struct SegmentPath {
  Matrix values;  // d x (m+1)
  double dt = 0.0;

  int dim() const { return static_cast<int>(values.rows()); }
  int nodes() const { return static_cast<int>(values.cols()); }
  // value at theta = 0
  Eigen::Ref<const Vector> endpoint() const { return values.col(values.cols() - 1); }
  double sup_norm() const;
};

SegmentPath constant_segment(int dim, int m, double dt, const Vector& value);

/// Brownian increments for one path: column k holds dW over [t_k, t_{k+1}),
/// each coordinate N(0, dt). Reproducible from (seed, path_index) alone.
struct NoiseBundle {
  Matrix increments;  // d x K
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

/// Solution path on [-tau, T]: column i holds X(-tau + i*dt). Keeps a
/// back-reference to the increments that produced it; the bundle must
/// outlive the trajectory.
struct Trajectory {
  Matrix values;  // d x (m+steps+1)
  GridSpec grid;
  const NoiseBundle* noise = nullptr;

  // column index of time t_k = k*dt, k in [-m, steps]
  Eigen::Index col_of(long long k) const { return static_cast<Eigen::Index>(grid.m + k); }
  Eigen::Ref<const Vector> state_at(long long k) const { return values.col(col_of(k)); }
  SegmentView segment_view(long long k) const {
    return values.block(0, static_cast<Eigen::Index>(k), values.rows(), grid.m + 1);
  }
  Eigen::Ref<const Vector> noise_increment(long long k) const {
    if (noise == nullptr) throw std::logic_error("trajectory has no noise back-reference");
    return noise->increments.col(static_cast<Eigen::Index>(k));
  }
};

/// Adapted integrand g(t_k), k = 0..K-1 (hdot or a weight integrand).
struct IntegrandPath {
  Matrix values;  // d x K
  double dt = 0.0;
};

enum class AuxRole { upsilon, z, tangent, malliavin };

/// Auxiliary path on [-tau, T] (same storage convention as Trajectory).
struct AuxPath {
  Matrix values;
  GridSpec grid;
  AuxRole role = AuxRole::tangent;

  Eigen::Index col_of(long long k) const { return static_cast<Eigen::Index>(grid.m + k); }
  Eigen::Ref<const Vector> state_at(long long k) const { return values.col(col_of(k)); }
  SegmentView segment_view(long long k) const {
    return values.block(0, static_cast<Eigen::Index>(k), values.rows(), grid.m + 1);
  }
};

/// Integration stopped on a non-finite state; step index is attached.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(long long step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bismut
