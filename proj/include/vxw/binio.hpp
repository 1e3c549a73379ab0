// binio.hpp -- little-endian binary encoding and atomic file IO.
#ifndef VXW_BINIO_HPP
#define VXW_BINIO_HPP

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "vxw/errors.hpp"

namespace vxw {

// Append-only little-endian byte buffer. Writers build the whole payload in
// memory, then commit it with write_file_atomic so no partial file is ever
// visible at the destination path.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }

    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }

    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }

    void magic(const char tag[4]) { bytes(tag, 4); }

    const std::vector<std::uint8_t>& data() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

// Cursor over an in-memory file image. All read methods throw FormatError
// with the offending byte offset on truncation.
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::uint8_t u8() {
        need(1, "u8");
        return buf_[pos_++];
    }

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void expect_magic(const char tag[4], const std::string& what) {
        need(4, "magic");
        if (std::memcmp(buf_.data() + pos_, tag, 4) != 0)
            throw FormatError("bad magic, expected " + std::string(tag, 4) + " in " + what, pos_);
        pos_ += 4;
    }

    void expect_end(const std::string& what) {
        if (pos_ != buf_.size())
            throw FormatError("trailing bytes after " + what, pos_);
    }

private:
    void need(std::size_t n, const char* what) {
        if (buf_.size() - pos_ < n)
            throw FormatError(std::string("truncated file: expected ") + what, pos_);
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// Writes to `path + ".tmp"` in the same directory, then renames over `path`.
void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::string& path, const std::string& text);

// FNV-1a 64-bit, rendered as 16 lowercase hex digits. Used for config and
// artifact lineage hashes in run manifests.
std::string fnv1a_hex(const void* data, std::size_t n);
std::string hash_file(const std::string& path);

}  // namespace vxw

#endif
