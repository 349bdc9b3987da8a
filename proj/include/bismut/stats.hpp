#pragma once

#include <cstddef>
#include <functional>

#include "bismut/types.hpp"

namespace bismut {

/// Deterministic pairwise sum; the result does not depend on how callers
/// later parallelize path generation.
double pairwise_sum(const double* data, std::size_t n, std::size_t stride = 1);

/// Mean / sample covariance / max-diagnostic summary of a Monte Carlo run.
struct McSummary {
  Vector mean;      // per-statistic sample mean over successful paths
  Matrix cov;       // sample covariance (unbiased) of the per-path statistics
  Vector diag_max;  // columnwise max of the per-path diagnostics
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;

  double std_error(int i) const;
  /// Covariance of the sample means: cov(i,j)/n_ok.
  double mean_cov(int i, int j) const;
};

/// Per-path kernel: fills `stats` (and `diag` when diag_dim > 0) for one
/// sample index; returns false to mark the path failed. A factory is called
/// once per worker thread so kernels can own scratch buffers.
using PathKernel = std::function<bool(std::size_t, Vector&, Vector&)>;
using KernelFactory = std::function<PathKernel()>;

/// Runs n samples over `threads` workers. Results are bitwise independent
/// of the worker count: every path's statistics depend only on its index,
/// and the reduction is a fixed-order pairwise pass over the stored rows.
McSummary run_paths(std::size_t n, int threads, int stat_dim, int diag_dim,
                    const KernelFactory& make_kernel);

}  // namespace bismut

