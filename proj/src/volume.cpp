#include "vxw/volume.hpp"

#include <algorithm>
#include <limits>

#include "vxw/binio.hpp"
#include "vxw/errors.hpp"

namespace vxw {

namespace {

constexpr char kVolumeMagic[4] = {'V', 'X', 'W', '1'};
constexpr char kLabelMagic[4] = {'V', 'X', 'W', 'C'};

// Voxel counts are validated up front so a corrupt header cannot drive a
// multi-terabyte allocation. 2^31 voxels is far beyond any aligned grid
// this toolkit targets.
constexpr std::uint64_t kMaxVoxels = 1ULL << 31;

std::uint64_t checked_voxel_count(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
                                  std::size_t dims_offset) {
    if (nx == 0 || ny == 0 || nz == 0)
        throw FormatError("malformed header: zero dimension", dims_offset);
    const std::uint64_t n = static_cast<std::uint64_t>(nx) * ny * nz;
    if (n > kMaxVoxels)
        throw FormatError("dimension overflow: " + std::to_string(nx) + "x" +
                              std::to_string(ny) + "x" + std::to_string(nz),
                          dims_offset);
    return n;
}

}  // namespace

Volume make_volume(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz, float fill,
                   bool masked) {
    Volume v;
    v.nx = nx;
    v.ny = ny;
    v.nz = nz;
    v.data.assign(static_cast<std::size_t>(nx) * ny * nz, fill);
    v.mask.assign(v.data.size(), masked ? 1 : 0);
    return v;
}

Volume load_volume(const std::string& path) {
    ByteReader r(read_file_bytes(path));
    r.expect_magic(kVolumeMagic, path);

    const std::size_t dims_offset = r.offset();
    Volume v;
    v.nx = r.u32();
    v.ny = r.u32();
    v.nz = r.u32();
    const std::uint64_t n = checked_voxel_count(v.nx, v.ny, v.nz, dims_offset);
    const std::uint8_t mask_flag = r.u8();

    const std::size_t payload_offset = r.offset();
    if (r.remaining() < n * 4)
        throw FormatError("truncated payload: " + std::to_string(n) + " float32 expected, " +
                              std::to_string(r.remaining() / 4) + " available",
                          payload_offset);
    v.data.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = r.f32();

    if (mask_flag) {
        const std::size_t mask_offset = r.offset();
        if (r.remaining() < n)
            throw FormatError("truncated mask", mask_offset);
        v.mask.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < v.mask.size(); ++i) v.mask[i] = r.u8();
    } else {
        // Default inclusion rule: strictly positive intensities.
        v.mask.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < v.mask.size(); ++i) v.mask[i] = v.data[i] > 0.0f ? 1 : 0;
    }
    r.expect_end(path);
    return v;
}

void save_volume(const Volume& v, const std::string& path) {
    if (v.data.size() != v.size() || v.mask.size() != v.size())
        throw Error("volume field lengths do not match dims");
    ByteWriter w;
    w.magic(kVolumeMagic);
    w.u32(v.nx);
    w.u32(v.ny);
    w.u32(v.nz);
    w.u8(1);
    for (float f : v.data) w.f32(f);
    for (std::uint8_t m : v.mask) w.u8(m ? 1 : 0);
    write_file_atomic(path, w.data());
}

Volume rescale_unit(const Volume& v) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    std::size_t n_masked = 0;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        if (!v.mask[i]) continue;
        ++n_masked;
        lo = std::min(lo, v.data[i]);
        hi = std::max(hi, v.data[i]);
    }
    if (n_masked == 0) throw Error("rescale_unit: mask selects no voxels");
    if (!(hi > lo))
        throw DegenerateRangeError("rescale_unit: constant masked region (value " +
                                   std::to_string(lo) + ")");

    Volume out = v;
    const float scale = 1.0f / (hi - lo);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = out.mask[i] ? (out.data[i] - lo) * scale : 0.0f;
    return out;
}

LabelVolume load_labels(const std::string& path) {
    ByteReader r(read_file_bytes(path));
    r.expect_magic(kLabelMagic, path);

    const std::size_t dims_offset = r.offset();
    LabelVolume v;
    v.nx = r.u32();
    v.ny = r.u32();
    v.nz = r.u32();
    const std::uint64_t n = checked_voxel_count(v.nx, v.ny, v.nz, dims_offset);
    const std::uint8_t mask_flag = r.u8();

    const std::size_t payload_offset = r.offset();
    if (r.remaining() < n * 4)
        throw FormatError("truncated label payload", payload_offset);
    v.labels.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < v.labels.size(); ++i) v.labels[i] = r.i32();
    if (mask_flag) {
        if (r.remaining() < n) throw FormatError("truncated mask", r.offset());
        for (std::uint64_t i = 0; i < n; ++i) r.u8();
    }
    r.expect_end(path);
    return v;
}

void save_labels(const LabelVolume& v, const std::string& path) {
    if (v.labels.size() != v.size())
        throw Error("label volume field lengths do not match dims");
    ByteWriter w;
    w.magic(kLabelMagic);
    w.u32(v.nx);
    w.u32(v.ny);
    w.u32(v.nz);
    w.u8(0);
    for (std::int32_t l : v.labels) w.i32(l);
    write_file_atomic(path, w.data());
}

}  // namespace vxw
