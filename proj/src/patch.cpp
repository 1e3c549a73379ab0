#include "vxw/patch.hpp"

#include <map>
#include <random>
#include <stdexcept>

#include "vxw/errors.hpp"
#include "vxw/rng.hpp"

namespace vxw {

std::vector<Patch> extract_patches(const Volume& v, std::uint32_t p, std::uint32_t stride) {
    if (p == 0 || p % 2 == 0)
        throw Error("extract_patches: patch size must be odd, got " + std::to_string(p));
    if (stride == 0) throw Error("extract_patches: stride must be positive");
    if (p > v.nx || p > v.ny)
        throw Error("extract_patches: patch size " + std::to_string(p) +
                    " exceeds slice dims " + std::to_string(v.nx) + "x" + std::to_string(v.ny));

    const std::uint32_t half = (p - 1) / 2;
    std::vector<Patch> out;
    for (std::uint32_t z = 0; z < v.nz; ++z) {
        for (std::uint32_t oy = 0; oy + p <= v.ny; oy += stride) {
            for (std::uint32_t ox = 0; ox + p <= v.nx; ox += stride) {
                const std::uint32_t cx = ox + half;
                const std::uint32_t cy = oy + half;
                if (!v.masked(cx, cy, z)) continue;
                Patch patch;
                patch.center = {cx, cy, z};
                patch.values.resize(static_cast<std::size_t>(p) * p);
                std::size_t k = 0;
                for (std::uint32_t dy = 0; dy < p; ++dy)
                    for (std::uint32_t dx = 0; dx < p; ++dx)
                        patch.values[k++] = v.at(ox + dx, oy + dy, z);
                out.push_back(std::move(patch));
            }
        }
    }
    return out;
}

PairBatch sample_pairs(const std::vector<std::vector<Patch>>& subject_patches,
                       std::size_t n_pairs, std::uint64_t seed) {
    // center -> list of (subject, patch index), one entry per subject; the
    // std::map keeps the shared center list in canonical order independent
    // of input layout.
    std::map<VoxelIndex, std::vector<std::pair<std::size_t, std::size_t>>> owners;
    for (std::size_t s = 0; s < subject_patches.size(); ++s)
        for (std::size_t i = 0; i < subject_patches[s].size(); ++i) {
            auto& list = owners[subject_patches[s][i].center];
            if (list.empty() || list.back().first != s) list.push_back({s, i});
        }

    std::vector<const std::pair<const VoxelIndex,
                                std::vector<std::pair<std::size_t, std::size_t>>>*>
        shared;
    for (const auto& entry : owners)
        if (entry.second.size() >= 2) shared.push_back(&entry);
    if (shared.empty())
        throw Error("sample_pairs: no center is shared by two or more subjects");

    std::mt19937_64 rng(seed);
    PairBatch batch;
    batch.pairs.reserve(n_pairs);
    while (batch.pairs.size() < n_pairs) {
        const auto& entry = *shared[uniform_index(rng, shared.size())];
        const auto& list = entry.second;
        const auto& a = list[uniform_index(rng, list.size())];
        // Re-draw the partner until it belongs to a different subject;
        // terminates because the center is shared.
        std::pair<std::size_t, std::size_t> b;
        do {
            b = list[uniform_index(rng, list.size())];
        } while (b.first == a.first);
        PatchPair pair;
        pair.first = subject_patches[a.first][a.second];
        pair.second = subject_patches[b.first][b.second];
        pair.subject_first = a.first;
        pair.subject_second = b.first;
        batch.pairs.push_back(std::move(pair));
    }
    return batch;
}

Patch corrupt(const Patch& x, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0)
        throw Error("corrupt: rate must lie in [0, 1], got " + std::to_string(rate));
    Patch out = x;
    std::mt19937_64 rng(seed);
    for (double& v : out.values)
        if (uniform01(rng) < rate) v = 0.0;
    return out;
}

}  // namespace vxw
