#include "bismut/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace bismut {

namespace {

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

void require_square(const Matrix& a, int d, const char* name) {
  if (a.rows() != d || a.cols() != d) {
    std::ostringstream os;
    os << name << " must be " << d << "x" << d << ", got " << a.rows() << "x" << a.cols();
    throw ConfigError(os.str());
  }
}

// HS norm squared of e^{sA} sigma(0) for diagonal A.
double hs_norm_sq_semigroup_sigma0(const ModelSpec& spec, double s) {
  double total = 0.0;
  if (spec.diffusion.kind == DiffusionSpec::Kind::constant) {
    for (int i = 0; i < spec.dim; ++i) {
      total += std::exp(2.0 * spec.eigenvalues(i) * s) * spec.diffusion.S.row(i).squaredNorm();
    }
  } else {
    // sat(0) = 0, so sigma(0) = diag(s0)
    for (int i = 0; i < spec.dim; ++i) {
      const double v = spec.diffusion.s0(i);
      total += std::exp(2.0 * spec.eigenvalues(i) * s) * v * v;
    }
  }
  return total;
}

}  // namespace

double SegmentPath::sup_norm() const {
  double best = 0.0;
  for (Eigen::Index j = 0; j < values.cols(); ++j) best = std::max(best, values.col(j).norm());
  return best;
}

SegmentPath constant_segment(int dim, int m, double dt, const Vector& value) {
  if (value.size() != dim) throw ConfigError("constant_segment: value dimension mismatch");
  SegmentPath seg;
  seg.dt = dt;
  seg.values = value.replicate(1, m + 1);
  return seg;
}

// --- DriftSpec -----------------------------------------------------------

double DriftSpec::lipschitz() const {
  double total = std::abs(linear_shift);
  if (kind == Kind::linear_delay) {
    total += operator_norm(B0) + operator_norm(B1);
  } else {
    total += operator_norm(G0) + operator_norm(G1);
    if (distributed_weights.size() > 0) total += distributed_weights.cwiseAbs().sum();
  }
  return total;
}

DriftSpec make_linear_delay_drift(const Matrix& B0, const Matrix& B1) {
  if (B0.rows() != B0.cols() || B1.rows() != B1.cols() || B0.rows() != B1.rows()) {
    throw ConfigError("linear_delay drift: B0, B1 must be square and same size");
  }
  DriftSpec d;
  d.kind = DriftSpec::Kind::linear_delay;
  d.B0 = B0;
  d.B1 = B1;
  return d;
}

DriftSpec make_bounded_nonlinear_drift(const Matrix& G0, const Matrix& G1,
                                       const Vector& distributed_weights) {
  if (G0.rows() != G0.cols() || G1.rows() != G1.cols() || G0.rows() != G1.rows()) {
    throw ConfigError("bounded_nonlinear drift: G0, G1 must be square and same size");
  }
  DriftSpec d;
  d.kind = DriftSpec::Kind::bounded_nonlinear;
  d.G0 = G0;
  d.G1 = G1;
  d.distributed_weights = distributed_weights;
  return d;
}

// --- DiffusionSpec -------------------------------------------------------

double DiffusionSpec::lipschitz() const {
  if (kind == Kind::constant) return 0.0;
  return s1.size() > 0 ? s1.cwiseAbs().maxCoeff() : 0.0;
}

double DiffusionSpec::inverse_bound() const {
  if (kind == Kind::constant) return operator_norm(S_inv);
  return 1.0 / (s0 - s1.cwiseAbs()).minCoeff();
}

DiffusionSpec make_constant_diffusion(const Matrix& S) {
  if (S.rows() != S.cols() || S.rows() == 0) throw ConfigError("constant diffusion: S must be square");
  Eigen::FullPivLU<Matrix> lu(S);
  if (!lu.isInvertible()) throw ConfigError("constant diffusion: S is singular");
  DiffusionSpec d;
  d.kind = DiffusionSpec::Kind::constant;
  d.S = S;
  d.S_inv = lu.inverse();
  if (!((d.S_inv * S - Matrix::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff() < 1e-10)) {
    throw ConfigError("constant diffusion: S is too ill-conditioned to invert");
  }
  return d;
}

DiffusionSpec make_diagonal_saturating_diffusion(const Vector& s0, const Vector& s1) {
  if (s0.size() != s1.size() || s0.size() == 0) {
    throw ConfigError("diagonal_saturating diffusion: s0, s1 size mismatch");
  }
  for (Eigen::Index i = 0; i < s0.size(); ++i) {
    if (!(std::abs(s1(i)) < s0(i))) {
      throw ConfigError("diagonal_saturating diffusion: requires |s1_i| < s0_i");
    }
  }
  DiffusionSpec d;
  d.kind = DiffusionSpec::Kind::diagonal_saturating;
  d.s0 = s0;
  d.s1 = s1;
  return d;
}

// --- ModelSpec -----------------------------------------------------------

ModelSpec make_model(Vector eigenvalues, double delay, DriftSpec drift, DiffusionSpec diffusion,
                     double a4_alpha, NoiseKind noise_kind) {
  const int d = static_cast<int>(eigenvalues.size());
  if (d == 0) throw ConfigError("model: empty spectrum");
  if (!(delay > 0.0)) throw ConfigError("model: delay must be positive");
  if (!(a4_alpha > 0.0 && a4_alpha < 0.5)) throw ConfigError("model: a4_alpha must lie in (0, 1/2)");
  if (drift.dim() != d) throw ConfigError("model: drift dimension mismatch");
  if (diffusion.dim() != d) throw ConfigError("model: diffusion dimension mismatch");
  if (noise_kind == NoiseKind::additive && !diffusion.state_independent()) {
    throw ConfigError("model: additive noise requires state-independent diffusion");
  }
  ModelSpec spec;
  spec.dim = d;
  spec.eigenvalues = std::move(eigenvalues);
  spec.delay = delay;
  spec.drift = std::move(drift);
  spec.diffusion = std::move(diffusion);
  spec.a4_alpha = a4_alpha;
  spec.noise_kind = noise_kind;
  return spec;
}

AssumptionReport validate_assumptions(const ModelSpec& spec) {
  AssumptionReport r;

  r.a1_contractive = (spec.eigenvalues.maxCoeff() <= 0.0);
  if (!r.a1_contractive) {
    std::ostringstream os;
    os << "A1: max eigenvalue " << spec.eigenvalues.maxCoeff() << " > 0 (semigroup not contractive)";
    r.failures.push_back(os.str());
  }

  r.drift_lipschitz = spec.drift.lipschitz();
  r.a2_drift_bounded = std::isfinite(r.drift_lipschitz);
  if (!r.a2_drift_bounded) r.failures.push_back("A2: drift derivative bound is not finite");

  r.sigma_lipschitz = spec.diffusion.lipschitz();
  r.sigma_inverse_bound = spec.diffusion.inverse_bound();
  r.a3_sigma_ok = std::isfinite(r.sigma_lipschitz) && std::isfinite(r.sigma_inverse_bound);
  if (spec.diffusion.kind == DiffusionSpec::Kind::diagonal_saturating) {
    for (Eigen::Index i = 0; i < spec.diffusion.s0.size(); ++i) {
      if (!(std::abs(spec.diffusion.s1(i)) < spec.diffusion.s0(i))) r.a3_sigma_ok = false;
    }
  }
  if (!r.a3_sigma_ok) r.failures.push_back("A3: sigma not invertible or grad sigma unbounded");

  r.a4_alpha_ok = (spec.a4_alpha > 0.0 && spec.a4_alpha < 0.5);
  if (!r.a4_alpha_ok) r.failures.push_back("A4: alpha outside (0, 1/2)");

  // int_0^1 s^{-2a} ||e^{sA} sigma(0)||_HS^2 ds. Substituting s = u^{1/(1-2a)}
  // removes the endpoint singularity; composite Simpson on the smooth
  // transformed integrand reaches well below 1e-10.
  {
    const double a = spec.a4_alpha;
    const double p = 1.0 / (1.0 - 2.0 * a);
    const auto g = [&](double u) { return hs_norm_sq_semigroup_sigma0(spec, std::pow(u, p)); };
    const int n = 4096;  // even
    const double h = 1.0 / n;
    double acc = g(0.0) + g(1.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
    r.a4_integral = p * acc * h / 3.0;
  }

  return r;
}

ModelSpec normalize_pseudocontractive(const ModelSpec& spec) {
  const double alpha0 = spec.eigenvalues.maxCoeff();
  if (alpha0 <= 0.0) return spec;
  ModelSpec out = spec;
  out.eigenvalues.array() -= alpha0;
  if (out.drift.kind == DriftSpec::Kind::linear_delay) {
    out.drift.B0 += alpha0 * Matrix::Identity(spec.dim, spec.dim);
  } else {
    out.drift.linear_shift += alpha0;
  }
  return out;
}

// --- coefficient evaluation ----------------------------------------------

void eval_drift_into(const DriftSpec& drift, const SegmentView& seg, Vector& out, Vector& scratch) {
  const Eigen::Index last = seg.cols() - 1;
  if (drift.kind == DriftSpec::Kind::linear_delay) {
    out.noalias() = drift.B0 * seg.col(last);
    out.noalias() += drift.B1 * seg.col(0);
  } else {
    scratch = seg.col(last).array().tanh();
    out.noalias() = drift.G0 * scratch;
    scratch = seg.col(0).array().tanh();
    out.noalias() += drift.G1 * scratch;
    if (drift.distributed_weights.size() > 0) {
      if (drift.distributed_weights.size() != seg.cols()) {
        throw ConfigError("drift: distributed weight vector does not match segment grid");
      }
      for (Eigen::Index j = 0; j < seg.cols(); ++j) {
        const double w = drift.distributed_weights(j);
        if (w != 0.0) out.array() += w * seg.col(j).array().tanh();
      }
    }
  }
  if (drift.linear_shift != 0.0) out += drift.linear_shift * seg.col(last);
}

void eval_drift_derivative_into(const DriftSpec& drift, const SegmentView& base,
                                const SegmentView& dir, Vector& out, Vector& scratch) {
  if (base.cols() != dir.cols() || base.rows() != dir.rows()) {
    throw ConfigError("drift derivative: base and direction segments on different grids");
  }
  const Eigen::Index last = base.cols() - 1;
  if (drift.kind == DriftSpec::Kind::linear_delay) {
    out.noalias() = drift.B0 * dir.col(last);
    out.noalias() += drift.B1 * dir.col(0);
  } else {
    scratch = (1.0 - base.col(last).array().tanh().square()) * dir.col(last).array();
    out.noalias() = drift.G0 * scratch;
    scratch = (1.0 - base.col(0).array().tanh().square()) * dir.col(0).array();
    out.noalias() += drift.G1 * scratch;
    if (drift.distributed_weights.size() > 0) {
      if (drift.distributed_weights.size() != base.cols()) {
        throw ConfigError("drift: distributed weight vector does not match segment grid");
      }
      for (Eigen::Index j = 0; j < base.cols(); ++j) {
        const double w = drift.distributed_weights(j);
        if (w != 0.0) {
          out.array() += w * (1.0 - base.col(j).array().tanh().square()) * dir.col(j).array();
        }
      }
    }
  }
  if (drift.linear_shift != 0.0) out += drift.linear_shift * dir.col(last);
}

Vector eval_drift(const DriftSpec& drift, const SegmentPath& seg) {
  Vector out(seg.dim()), scratch(seg.dim());
  eval_drift_into(drift, seg.values, out, scratch);
  return out;
}

Vector eval_drift_derivative(const DriftSpec& drift, const SegmentPath& seg, const SegmentPath& dir) {
  Vector out(seg.dim()), scratch(seg.dim());
  eval_drift_derivative_into(drift, seg.values, dir.values, out, scratch);
  return out;
}

Matrix eval_sigma(const DiffusionSpec& diff, const Vector& x) {
  if (diff.kind == DiffusionSpec::Kind::constant) return diff.S;
  return (diff.s0.array() + diff.s1.array() * x.array().tanh()).matrix().asDiagonal();
}

Matrix eval_sigma_inverse(const DiffusionSpec& diff, const Vector& x) {
  if (diff.kind == DiffusionSpec::Kind::constant) return diff.S_inv;
  return (diff.s0.array() + diff.s1.array() * x.array().tanh()).inverse().matrix().asDiagonal();
}

Matrix eval_sigma_derivative(const DiffusionSpec& diff, const Vector& x, const Vector& dir) {
  if (diff.kind == DiffusionSpec::Kind::constant) return Matrix::Zero(x.size(), x.size());
  return (diff.s1.array() * (1.0 - x.array().tanh().square()) * dir.array()).matrix().asDiagonal();
}

void apply_sigma_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& w, Vector& out) {
  if (diff.kind == DiffusionSpec::Kind::constant) {
    out.noalias() = diff.S * w;
  } else {
    out.array() = (diff.s0.array() + diff.s1.array() * x.array().tanh()) * w.array();
  }
}

void apply_sigma_inverse_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& w, Vector& out) {
  if (diff.kind == DiffusionSpec::Kind::constant) {
    out.noalias() = diff.S_inv * w;
  } else {
    out.array() = w.array() / (diff.s0.array() + diff.s1.array() * x.array().tanh());
  }
}

void apply_sigma_derivative_into(const DiffusionSpec& diff, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& dir,
                                 const Eigen::Ref<const Vector>& w, Vector& out) {
  if (diff.kind == DiffusionSpec::Kind::constant) {
    out.setZero();
  } else {
    out.array() = diff.s1.array() * (1.0 - x.array().tanh().square()) * dir.array() * w.array();
  }
}

Vector semigroup_apply(const ModelSpec& spec, double t, const Vector& v) {
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
  if (v.size() != spec.dim) throw ConfigError("semigroup_apply: dimension mismatch");
  return ((spec.eigenvalues.array() * t).exp() * v.array()).matrix();
}

// --- test functionals ------------------------------------------------------

namespace {

Eigen::Index mid_column(const SegmentView& seg) {
  const Eigen::Index m = seg.cols() - 1;
  if (m % 2 != 0) {
    throw std::invalid_argument("functional reads xi(-tau/2): segment grid must have even m");
  }
  return m / 2;
}

double linear_read(const TestFunctional& f, const SegmentView& seg) {
  double z = f.v.dot(seg.col(seg.cols() - 1));
  if (f.v_mid.size() > 0 && !f.v_mid.isZero()) z += f.v_mid.dot(seg.col(mid_column(seg)));
  return z;
}

double linear_read_dir(const TestFunctional& f, const SegmentView& dir) {
  double z = f.v.dot(dir.col(dir.cols() - 1));
  if (f.v_mid.size() > 0 && !f.v_mid.isZero()) z += f.v_mid.dot(dir.col(mid_column(dir)));
  return z;
}

}  // namespace

double TestFunctional::eval(const SegmentView& seg) const {
  switch (kind) {
    case Kind::linear_endpoint:
      return linear_read(*this, seg);
    case Kind::bounded_smooth:
      return std::tanh(linear_read(*this, seg));
    case Kind::positive_bounded:
      return lo + (hi - lo) * 0.5 * (1.0 + std::tanh(linear_read(*this, seg)));
    case Kind::indicator:
      return v.dot(seg.col(seg.cols() - 1)) > threshold ? 1.0 : 0.0;
  }
  throw std::logic_error("unreachable functional kind");
}

double TestFunctional::gradient_pairing(const SegmentView& seg, const SegmentView& dir) const {
  switch (kind) {
    case Kind::linear_endpoint:
      return linear_read_dir(*this, dir);
    case Kind::bounded_smooth: {
      const double t = std::tanh(linear_read(*this, seg));
      return (1.0 - t * t) * linear_read_dir(*this, dir);
    }
    case Kind::positive_bounded: {
      const double t = std::tanh(linear_read(*this, seg));
      return (hi - lo) * 0.5 * (1.0 - t * t) * linear_read_dir(*this, dir);
    }
    case Kind::indicator:
      throw std::invalid_argument("indicator functional has no gradient rule");
  }
  throw std::logic_error("unreachable functional kind");
}

TestFunctional linear_endpoint_functional(const Vector& v) {
  TestFunctional f;
  f.kind = TestFunctional::Kind::linear_endpoint;
  f.v = v;
  return f;
}

TestFunctional bounded_smooth_functional(const Vector& v, const Vector& v_mid) {
  TestFunctional f;
  f.kind = TestFunctional::Kind::bounded_smooth;
  f.v = v;
  f.v_mid = v_mid;
  return f;
}

TestFunctional positive_bounded_functional(const Vector& v, double lo, double hi,
                                           const Vector& v_mid) {
  if (!(lo > 0.0 && hi > lo)) {
    throw ConfigError("positive_bounded functional requires 0 < lo < hi");
  }
  TestFunctional f;
  f.kind = TestFunctional::Kind::positive_bounded;
  f.v = v;
  f.v_mid = v_mid;
  f.lo = lo;
  f.hi = hi;
  return f;
}

TestFunctional indicator_functional(const Vector& v, double threshold) {
  TestFunctional f;
  f.kind = TestFunctional::Kind::indicator;
  f.v = v;
  f.threshold = threshold;
  return f;
}

}  // namespace bismut
