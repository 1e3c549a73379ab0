// volume.hpp -- 3D scalar volumes on a shared grid, with inclusion masks.
//
// File container (all integers little-endian):
//   magic "VXW1" | u32 nx | u32 ny | u32 nz | u8 mask_flag
//   | nx*ny*nz float32 intensities (x fastest, then y, then z)
//   | nx*ny*nz u8 mask bytes when mask_flag != 0
// The same container with magic "VXWC" and an int32 payload carries label
// maps (connected-component output).
#ifndef VXW_VOLUME_HPP
#define VXW_VOLUME_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace vxw {

struct Volume {
    std::uint32_t nx = 0, ny = 0, nz = 0;
    std::vector<float> data;         // nx*ny*nz intensities, x fastest
    std::vector<std::uint8_t> mask;  // nonzero = inside the analysis region

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }

    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }

    float at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return data[index(x, y, z)];
    }
    float& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
        return data[index(x, y, z)];
    }
    bool masked(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return mask[index(x, y, z)] != 0;
    }

    bool operator==(const Volume&) const = default;
};

Volume make_volume(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
                   float fill = 0.0f, bool masked = true);

// Loads a "VXW1" file. When the stored mask flag is zero the mask defaults
// to the strictly-positive-intensity voxels. Intensities are returned as
// stored, not rescaled.
Volume load_volume(const std::string& path);

// Writes the volume with an explicit mask (mask flag always 1), so saving
// is deterministic and load(save(v)) == v bit-exactly.
void save_volume(const Volume& v, const std::string& path);

// Affinely maps masked intensities so min -> 0 and max -> 1; unmasked
// voxels are set to 0. Throws DegenerateRangeError when all masked values
// are equal and Error when the mask is empty.
Volume rescale_unit(const Volume& v);

// Integer label grid in the same container with magic "VXWC".
struct LabelVolume {
    std::uint32_t nx = 0, ny = 0, nz = 0;
    std::vector<std::int32_t> labels;  // 0 = background

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    bool operator==(const LabelVolume&) const = default;
};

LabelVolume load_labels(const std::string& path);
void save_labels(const LabelVolume& v, const std::string& path);

}  // namespace vxw

#endif
