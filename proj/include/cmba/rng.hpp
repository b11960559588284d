#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cmba {

using Rng = std::mt19937_64;

// Cheap stateless mixer for deriving independent seeds (per episode,
// per timestep, per data source) from one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Uniform draw in [0, 1). std::uniform_real_distribution is
// implementation-defined, so draws are built from raw engine output to keep
// trajectories reproducible across standard libraries.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

// Standard normal via Box-Muller, one value per call.
inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - uniform_unit(rng); // (0, 1], keeps log finite
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

} // namespace cmba
