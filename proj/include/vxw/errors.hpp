// errors.hpp -- exception types shared across the toolkit.
#ifndef VXW_ERRORS_HPP
#define VXW_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vxw {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or truncated file content. `offset` is the byte position at
// which the problem was detected.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset = 0;
};

struct IoError : Error {
    using Error::Error;
};

// Min-max rescaling of a region whose masked values are all equal.
struct DegenerateRangeError : Error {
    using Error::Error;
};

// Median pairwise distance of zero: the bandwidth heuristic has no scale.
struct DegenerateSpreadError : Error {
    using Error::Error;
};

// A middle-layer representation collapsed below the norm floor, so the
// cosine term of the pair loss is undefined.
struct DegenerateCosineError : Error {
    using Error::Error;
};

}  // namespace vxw

#endif
