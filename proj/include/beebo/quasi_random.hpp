#pragma once

#include <cstdint>
#include <initializer_list>

#include "beebo/gp_core.hpp"

namespace beebo {

// Counter-based seed derivation (SplitMix64 finalizer chained over keys), so
// every stream depends only on its own keys.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

// Largest dimension served by the Sobol tables; above it uniform pseudo-random
// points are returned instead.
std::uint32_t sobol_max_dimension();

// count x dim points in (0, 1): Sobol sequence with a random digital shift.
Matrix sobol_uniform(Eigen::Index count, Eigen::Index dim, std::uint64_t seed);

// Same points mapped through the standard normal quantile.
Matrix sobol_normal(Eigen::Index count, Eigen::Index dim, std::uint64_t seed);

} // namespace beebo
