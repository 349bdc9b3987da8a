#include "bismut/stats.hpp"

#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace bismut {

namespace {

double pairwise_sum_impl(const double* data, std::size_t n, std::size_t stride) {
  if (n <= 16) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += data[i * stride];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(data, half, stride) +
         pairwise_sum_impl(data + half * stride, n - half, stride);
}

}  // namespace

double pairwise_sum(const double* data, std::size_t n, std::size_t stride) {
  if (n == 0) return 0.0;
  return pairwise_sum_impl(data, n, stride);
}

double McSummary::std_error(int i) const {
  if (n_ok < 2) return std::numeric_limits<double>::infinity();
  return std::sqrt(cov(i, i) / static_cast<double>(n_ok));
}

double McSummary::mean_cov(int i, int j) const {
  if (n_ok < 2) return std::numeric_limits<double>::infinity();
  return cov(i, j) / static_cast<double>(n_ok);
}

McSummary run_paths(std::size_t n, int threads, int stat_dim, int diag_dim,
                    const KernelFactory& make_kernel) {
  if (n == 0) throw ConfigError("run_paths: need at least one sample");
  if (threads < 1) threads = 1;

  Matrix rows(stat_dim, static_cast<Eigen::Index>(n));
  Matrix diag_rows(diag_dim, diag_dim > 0 ? static_cast<Eigen::Index>(n) : 0);
  std::vector<unsigned char> ok(n, 0);

  auto worker = [&](std::size_t begin, std::size_t end) {
    PathKernel kernel = make_kernel();
    Vector stats(stat_dim);
    Vector diag(diag_dim);
    for (std::size_t i = begin; i < end; ++i) {
      stats.setZero();
      if (diag_dim > 0) diag.setZero();
      const bool good = kernel(i, stats, diag);
      ok[i] = good ? 1 : 0;
      rows.col(static_cast<Eigen::Index>(i)) = good ? stats : Vector::Zero(stat_dim);
      if (diag_dim > 0) {
        diag_rows.col(static_cast<Eigen::Index>(i)) = good ? diag : Vector::Zero(diag_dim);
      }
    }
  };

  if (threads == 1 || n < 2) {
    worker(0, n);
  } else {
    const std::size_t nt = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          if (begin < end) worker(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  McSummary out;
  out.n_ok = 0;
  for (std::size_t i = 0; i < n; ++i) out.n_ok += ok[i];
  out.n_failed = n - out.n_ok;
  if (out.n_ok == 0) throw ConfigError("run_paths: every path failed");

  // Failed rows hold zeros; sums over all rows divided by n_ok give the
  // masked means without branching inside the pairwise pass.
  out.mean.resize(stat_dim);
  for (int i = 0; i < stat_dim; ++i) {
    out.mean(i) = pairwise_sum(rows.data() + i, n, static_cast<std::size_t>(stat_dim)) /
                  static_cast<double>(out.n_ok);
  }

  out.cov.setZero(stat_dim, stat_dim);
  if (out.n_ok >= 2) {
    Matrix centered(stat_dim, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      centered.col(static_cast<Eigen::Index>(i)) =
          ok[i] ? (rows.col(static_cast<Eigen::Index>(i)) - out.mean).eval()
                : Vector::Zero(stat_dim);
    }
    for (int i = 0; i < stat_dim; ++i) {
      for (int j = i; j < stat_dim; ++j) {
        Eigen::ArrayXd prod = (centered.row(i).array() * centered.row(j).array()).transpose();
        const double s = pairwise_sum(prod.data(), n);
        out.cov(i, j) = s / static_cast<double>(out.n_ok - 1);
        out.cov(j, i) = out.cov(i, j);
      }
    }
  }

  if (diag_dim > 0) {
    out.diag_max.setZero(diag_dim);
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!ok[i]) continue;
      if (first) {
        out.diag_max = diag_rows.col(static_cast<Eigen::Index>(i));
        first = false;
      } else {
        out.diag_max = out.diag_max.cwiseMax(diag_rows.col(static_cast<Eigen::Index>(i)));
      }
    }
  }

  return out;
}

}  // namespace bismut
