#include "vxw/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vxw/errors.hpp"
#include "vxw/rng.hpp"

namespace vxw {

namespace {

constexpr std::uint64_t kTagTemplate = 101;
constexpr std::uint64_t kTagSubjectNoise = 202;

double gaussian(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps the log finite
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Mean filter along one axis with a clamped window; applied per axis this
// gives a cheap separable smoothing of the white field.
void smooth_axis(std::vector<double>& grid, std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
                 int axis, int radius) {
    if (radius <= 0) return;
    const std::int64_t dims[3] = {nx, ny, nz};
    const std::int64_t strides[3] = {1, nx, static_cast<std::int64_t>(nx) * ny};
    const std::int64_t len = dims[axis];
    const std::int64_t stride = strides[axis];
    std::vector<double> line(static_cast<std::size_t>(len));

    const std::int64_t a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (std::int64_t j = 0; j < dims[a1]; ++j) {
        for (std::int64_t k = 0; k < dims[a2]; ++k) {
            const std::int64_t base = j * strides[a1] + k * strides[a2];
            for (std::int64_t i = 0; i < len; ++i)
                line[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(base + i * stride)];
            for (std::int64_t i = 0; i < len; ++i) {
                const std::int64_t lo = std::max<std::int64_t>(0, i - radius);
                const std::int64_t hi = std::min<std::int64_t>(len - 1, i + radius);
                double acc = 0.0;
                for (std::int64_t t = lo; t <= hi; ++t) acc += line[static_cast<std::size_t>(t)];
                grid[static_cast<std::size_t>(base + i * stride)] =
                    acc / static_cast<double>(hi - lo + 1);
            }
        }
    }
}

std::vector<double> make_template(const SyntheticCohortSpec& spec) {
    const std::size_t n =
        static_cast<std::size_t>(spec.nx) * spec.ny * spec.nz;
    std::mt19937_64 rng(mix_seed(spec.seed, kTagTemplate));

    // A few low-frequency sinusoids give large-scale structure.
    constexpr int kWaves = 4;
    double amp[kWaves], fx[kWaves], fy[kWaves], fz[kWaves], phase[kWaves];
    for (int w = 0; w < kWaves; ++w) {
        amp[w] = 0.5 + uniform01(rng);
        fx[w] = 1.0 + std::floor(uniform01(rng) * 3.0);
        fy[w] = 1.0 + std::floor(uniform01(rng) * 3.0);
        fz[w] = 1.0 + std::floor(uniform01(rng) * 3.0);
        phase[w] = 2.0 * 3.14159265358979323846 * uniform01(rng);
    }

    std::vector<double> field(n);
    for (double& v : field) v = gaussian(rng);
    const int radius = static_cast<int>(std::lround(spec.template_smoothness));
    for (int pass = 0; pass < 2; ++pass)
        for (int axis = 0; axis < 3; ++axis)
            smooth_axis(field, spec.nx, spec.ny, spec.nz, axis, radius);

    std::size_t i = 0;
    for (std::uint32_t z = 0; z < spec.nz; ++z) {
        for (std::uint32_t y = 0; y < spec.ny; ++y) {
            for (std::uint32_t x = 0; x < spec.nx; ++x, ++i) {
                double s = 0.0;
                for (int w = 0; w < kWaves; ++w) {
                    const double arg = 2.0 * 3.14159265358979323846 *
                                           (fx[w] * x / spec.nx + fy[w] * y / spec.ny +
                                            fz[w] * z / spec.nz) +
                                       phase[w];
                    s += amp[w] * std::sin(arg);
                }
                field[i] = field[i] + 0.35 * s;
            }
        }
    }

    // Normalize the template into [0.02, 0.98] so subject noise reaches the
    // clamps symmetrically across subjects and per-volume rescaling stays
    // consistent between them.
    const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
    const double lo = *lo_it, hi = *hi_it;
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : field) v = 0.02 + 0.96 * (v - lo) / span;
    return field;
}

Volume render_subject(const SyntheticCohortSpec& spec, const std::vector<double>& tpl,
                      std::uint64_t noise_stream, bool with_lesion, Volume* truth_out) {
    Volume v = make_volume(spec.nx, spec.ny, spec.nz);
    std::mt19937_64 rng(noise_stream);

    const double cx = spec.lesion_x >= 0 ? static_cast<double>(spec.lesion_x) : spec.nx / 2.0;
    const double cy = spec.lesion_y >= 0 ? static_cast<double>(spec.lesion_y) : spec.ny / 2.0;
    const double cz = spec.lesion_z >= 0 ? static_cast<double>(spec.lesion_z) : spec.nz / 2.0;
    const double r2 = spec.lesion_radius * spec.lesion_radius;

    std::size_t i = 0;
    for (std::uint32_t z = 0; z < spec.nz; ++z) {
        for (std::uint32_t y = 0; y < spec.ny; ++y) {
            for (std::uint32_t x = 0; x < spec.nx; ++x, ++i) {
                double value = tpl[i] + spec.noise_level * gaussian(rng);
                bool inside = false;
                if (spec.lesion_radius > 0.0) {
                    const double dx = x - cx, dy = y - cy, dz = z - cz;
                    inside = dx * dx + dy * dy + dz * dz <= r2;
                }
                if (with_lesion && inside) value += spec.lesion_shift;
                v.data[i] = static_cast<float>(std::clamp(value, 0.0, 1.0));
                if (truth_out) truth_out->data[i] = inside ? 1.0f : 0.0f;
            }
        }
    }
    return v;
}

}  // namespace

SyntheticCohort generate_cohort(const SyntheticCohortSpec& spec) {
    if (spec.subjects == 0) throw Error("generate_cohort: need at least one subject");
    if (spec.nx == 0 || spec.ny == 0 || spec.nz == 0)
        throw Error("generate_cohort: zero dimension");
    if (spec.noise_level < 0.0) throw Error("generate_cohort: negative noise level");
    if (spec.lesion_radius > 0.0) {
        const double cx = spec.lesion_x >= 0 ? spec.lesion_x : spec.nx / 2.0;
        const double cy = spec.lesion_y >= 0 ? spec.lesion_y : spec.ny / 2.0;
        const double cz = spec.lesion_z >= 0 ? spec.lesion_z : spec.nz / 2.0;
        if (cx - spec.lesion_radius < 0 || cx + spec.lesion_radius >= spec.nx ||
            cy - spec.lesion_radius < 0 || cy + spec.lesion_radius >= spec.ny ||
            cz - spec.lesion_radius < 0 || cz + spec.lesion_radius >= spec.nz)
            throw Error("generate_cohort: lesion sphere does not fit inside the volume");
    }

    const std::vector<double> tpl = make_template(spec);

    SyntheticCohort cohort;
    cohort.truth = make_volume(spec.nx, spec.ny, spec.nz);
    for (std::size_t s = 0; s < spec.subjects; ++s)
        cohort.healthy.push_back(render_subject(
            spec, tpl, mix_seed(spec.seed, kTagSubjectNoise + s), false, nullptr));
    cohort.test = render_subject(spec, tpl,
                                 mix_seed(spec.seed, kTagSubjectNoise + spec.subjects), true,
                                 &cohort.truth);
    return cohort;
}

}  // namespace vxw
