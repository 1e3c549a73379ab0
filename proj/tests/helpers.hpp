// helpers.hpp -- shared fixtures and independent oracles for the test suites.
#ifndef VXW_TESTS_HELPERS_HPP
#define VXW_TESTS_HELPERS_HPP

#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vxw/rng.hpp"
#include "vxw/volume.hpp"

namespace vxw::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("vxw_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

inline Volume random_volume(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
                            std::uint64_t seed, double mask_rate = 1.0) {
    Volume v = make_volume(nx, ny, nz);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        v.data[i] = static_cast<float>(uniform01(rng));
        v.mask[i] = uniform01(rng) < mask_rate ? 1 : 0;
    }
    return v;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * uniform01(rng);
    return v;
}

inline double gaussian(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace vxw::testing

#endif
