// rng.hpp -- deterministic random number helpers.
//
// All randomized operations in the toolkit are pure functions of an explicit
// 64-bit seed. std::mt19937_64 is used as the engine because the standard
// fully specifies its output sequence; the distribution helpers below are
// hand-rolled since the standard library distributions are
// implementation-defined and would break cross-platform reproducibility.
#ifndef VXW_RNG_HPP
#define VXW_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace vxw {

// splitmix64 finalizer; used to derive independent seed streams from a base
// seed and a stream tag, e.g. mix_seed(seed, epoch) or mix_seed(s, patch_id).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    std::uint64_t x = rng();
    while (x > limit) x = rng();
    return x % n;
}

// Fisher-Yates shuffle with uniform_index, so the permutation depends only
// on the engine state (std::shuffle is implementation-defined).
template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace vxw

#endif
