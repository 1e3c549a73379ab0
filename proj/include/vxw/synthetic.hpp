// synthetic.hpp -- synthetic cohort generation for pipeline evaluation.
//
// A cohort is one shared smooth template plus independent per-subject noise;
// the designated test subject additionally receives a spherical intensity
// shift, with the sphere recorded as a ground-truth grid.
#ifndef VXW_SYNTHETIC_HPP
#define VXW_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "vxw/volume.hpp"

namespace vxw {

struct SyntheticCohortSpec {
    std::uint32_t nx = 32, ny = 32, nz = 32;
    std::size_t subjects = 20;         // healthy subjects; the test one is extra
    double template_smoothness = 2.0;  // smoothing radius of the random field
    double noise_level = 0.05;         // per-subject i.i.d. noise sigma
    std::int64_t lesion_x = -1, lesion_y = -1, lesion_z = -1;  // -1 = volume center
    double lesion_radius = 4.0;        // 0 disables the lesion entirely
    double lesion_shift = 0.4;
    std::uint64_t seed = 0;
};

struct SyntheticCohort {
    std::vector<Volume> healthy;
    Volume test;
    Volume truth;  // 1 inside the lesion sphere, 0 elsewhere
};

// Fully deterministic in spec.seed. All intensities are clamped to [0, 1]
// and masks are explicit all-true grids.
SyntheticCohort generate_cohort(const SyntheticCohortSpec& spec);

}  // namespace vxw

#endif
