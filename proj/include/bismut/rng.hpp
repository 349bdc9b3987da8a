#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "bismut/types.hpp"

namespace bismut {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
/// Stateless: one call produces 128 bits from (key, counter).
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 2>& key,
                                        std::array<std::uint32_t, 4> ctr);

/// Two independent N(0,1) draws, keyed by (seed, path, step, block).
/// Identical inputs always produce identical outputs; distinct keys map to
/// distinct Philox counters, so streams never overlap.
std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                      std::uint32_t block);

/// Fills `out` (d x steps) with Brownian increments, coordinate k-th column
/// ~ N(0, dt I_d), reproducible from (seed, path_index) alone.
void sample_noise_into(const GridSpec& grid, int dim, std::uint64_t seed, std::uint64_t path_index,
                       Matrix& out);

NoiseBundle sample_noise(const GridSpec& grid, int dim, std::uint64_t seed,
                         std::uint64_t path_index);

/// Aggregates increments pairwise: fine bundle at step dt/2 -> bundle at dt.
/// Used for coupled grid-refinement studies.
NoiseBundle coarsen_noise(const NoiseBundle& fine);

}  // namespace bismut
