#include "bismut/rng.hpp"

#include <cmath>

namespace bismut {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 2>& key,
                                        std::array<std::uint32_t, 4> ctr) {
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, ctr[0], hi0, lo0);
    mul_hi_lo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return ctr;
}

std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                      std::uint32_t block) {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const std::array<std::uint32_t, 4> ctr = {
      block ^ static_cast<std::uint32_t>(step >> 32),
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>(path),
      static_cast<std::uint32_t>(path >> 32),
  };
  const auto bits = philox4x32(key, ctr);
  const std::uint64_t a = (static_cast<std::uint64_t>(bits[0]) << 32) | bits[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(bits[2]) << 32) | bits[3];
  // u1 in (0,1] keeps the log finite; u2 in [0,1).
  const double u1 = static_cast<double>((a >> 11) + 1) * kInv53;
  const double u2 = static_cast<double>(b >> 11) * kInv53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

void sample_noise_into(const GridSpec& grid, int dim, std::uint64_t seed, std::uint64_t path_index,
                       Matrix& out) {
  out.resize(dim, static_cast<Eigen::Index>(grid.steps));
  const double scale = std::sqrt(grid.dt);
  for (long long k = 0; k < grid.steps; ++k) {
    auto col = out.col(static_cast<Eigen::Index>(k));
    for (int i = 0; i < dim; i += 2) {
      const auto z = normal_pair(seed, path_index, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint32_t>(i / 2));
      col(i) = scale * z.first;
      if (i + 1 < dim) col(i + 1) = scale * z.second;
    }
  }
}

NoiseBundle sample_noise(const GridSpec& grid, int dim, std::uint64_t seed,
                         std::uint64_t path_index) {
  NoiseBundle bundle;
  bundle.seed = seed;
  bundle.path_index = path_index;
  sample_noise_into(grid, dim, seed, path_index, bundle.increments);
  return bundle;
}

NoiseBundle coarsen_noise(const NoiseBundle& fine) {
  const Eigen::Index k_fine = fine.increments.cols();
  if (k_fine % 2 != 0) throw ConfigError("coarsen_noise: odd number of fine increments");
  NoiseBundle coarse;
  coarse.seed = fine.seed;
  coarse.path_index = fine.path_index;
  coarse.increments.resize(fine.increments.rows(), k_fine / 2);
  for (Eigen::Index k = 0; k < k_fine / 2; ++k) {
    coarse.increments.col(k) = fine.increments.col(2 * k) + fine.increments.col(2 * k + 1);
  }
  return coarse;
}

}  // namespace bismut
