// patch.hpp -- 2D axial patches, cross-subject similar pairs, corruption.
#ifndef VXW_PATCH_HPP
#define VXW_PATCH_HPP

#include <cstdint>
#include <vector>

#include "vxw/volume.hpp"

namespace vxw {

struct VoxelIndex {
    std::uint32_t x = 0, y = 0, z = 0;

    bool operator==(const VoxelIndex&) const = default;
    // Canonical (z, y, x) order; keeps center-keyed containers and files
    // deterministic and diffable.
    auto operator<=>(const VoxelIndex& o) const {
        if (auto c = z <=> o.z; c != 0) return c;
        if (auto c = y <=> o.y; c != 0) return c;
        return x <=> o.x;
    }
};

// A p*p window from one z-constant slice, flattened row-major (x fastest),
// tagged with its center voxel. Values are expected in [0, 1].
struct Patch {
    VoxelIndex center;
    std::vector<double> values;

    bool operator==(const Patch&) const = default;
};

// Similar pair: same center voxel, two different subjects.
struct PatchPair {
    Patch first, second;
    std::size_t subject_first = 0, subject_second = 0;
};

struct PairBatch {
    std::vector<PatchPair> pairs;
};

// Slides a p*p window over every z slice at x/y offsets {0, stride, ...}
// that fit entirely inside the slice, emitting a patch whenever the window
// center voxel is masked. p must be odd and no larger than nx and ny.
std::vector<Patch> extract_patches(const Volume& v, std::uint32_t p, std::uint32_t stride);

// Draws n_pairs similar pairs with replacement: uniformly pick a center
// shared by at least two subjects, then two distinct owning subjects.
// Deterministic given the seed.
PairBatch sample_pairs(const std::vector<std::vector<Patch>>& subject_patches,
                       std::size_t n_pairs, std::uint64_t seed);

// Independently zeroes each value with probability `rate`.
Patch corrupt(const Patch& x, double rate, std::uint64_t seed);

}  // namespace vxw

#endif
