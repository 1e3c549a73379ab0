#include "vxw/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vxw/binio.hpp"
#include "vxw/errors.hpp"

namespace vxw {

namespace {

constexpr char kBankMagic[4] = {'V', 'X', 'W', 'B'};
constexpr std::uint32_t kBankVersion = 1;

}  // namespace

ClassifierBank build_bank(const CenterFeatures& features, double nu, double gamma_scale,
                          const SolverOptions& solver) {
    ClassifierBank bank;
    bank.nu = nu;
    for (const auto& [center, rows] : features) {
        if (rows.size() < 2) {
            bank.skipped.push_back(center);
            continue;
        }
        if (bank.feature_dim == 0) bank.feature_dim = rows[0].size();
        for (const auto& row : rows)
            if (row.size() != bank.feature_dim)
                throw Error("build_bank: inconsistent feature dimensions");
        double gamma;
        try {
            gamma = median_gamma(rows, gamma_scale);
        } catch (const DegenerateSpreadError&) {
            bank.skipped.push_back(center);
            continue;
        }
        bank.centers.push_back(center);
        bank.models.push_back(train_ocsvm(rows, nu, KernelConfig{gamma}, solver));
    }
    if (bank.centers.empty())
        throw Error("build_bank: no center has two distinct subject representations");
    return bank;
}

Volume DistanceMap::to_volume() const {
    Volume v;
    v.nx = nx;
    v.ny = ny;
    v.nz = nz;
    v.data = score;
    v.mask = valid;
    return v;
}

DistanceMap DistanceMap::from_volume(const Volume& v) {
    DistanceMap d;
    d.nx = v.nx;
    d.ny = v.ny;
    d.nz = v.nz;
    d.score = v.data;
    d.valid = v.mask;
    return d;
}

DistanceMap score_subject(const ClassifierBank& bank, const CenterVector& subject_features,
                          std::uint32_t nx, std::uint32_t ny, std::uint32_t nz) {
    DistanceMap d;
    d.nx = nx;
    d.ny = ny;
    d.nz = nz;
    d.score.assign(d.size(), 0.0f);
    d.valid.assign(d.size(), 0);

    std::size_t scored = 0;
    for (std::size_t i = 0; i < bank.centers.size(); ++i) {
        const VoxelIndex& c = bank.centers[i];
        const auto it = subject_features.find(c);
        if (it == subject_features.end()) continue;
        if (it->second.size() != bank.feature_dim)
            throw Error("score_subject: feature dim " + std::to_string(it->second.size()) +
                        " does not match bank dim " + std::to_string(bank.feature_dim));
        if (c.x >= nx || c.y >= ny || c.z >= nz)
            throw Error("score_subject: bank center outside the subject grid");
        const std::size_t idx = d.index(c.x, c.y, c.z);
        d.score[idx] = static_cast<float>(decision(bank.models[i], it->second));
        d.valid[idx] = 1;
        ++scored;
    }
    if (scored == 0)
        throw Error("score_subject: no bank center has a subject representation");
    return d;
}

BoolGrid threshold_map(const DistanceMap& d, double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw Error("threshold_map: p must lie in (0, 1)");
    std::vector<float> scores;
    scores.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.valid[i]) scores.push_back(d.score[i]);
    if (scores.empty()) throw Error("threshold_map: no valid scores");

    // k-th smallest with k the smallest integer >= p*m (at least 1); the
    // epsilon absorbs the binary representation error of p*m so an exact
    // integer rank is not bumped to the next one.
    const double rank = p * static_cast<double>(scores.size());
    std::size_t k = static_cast<std::size_t>(std::ceil(rank - 1e-9));
    k = std::min(std::max<std::size_t>(k, 1), scores.size());
    std::nth_element(scores.begin(), scores.begin() + (k - 1), scores.end());
    const float threshold = scores[k - 1];

    BoolGrid g;
    g.nx = d.nx;
    g.ny = d.ny;
    g.nz = d.nz;
    g.kept.assign(d.size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.valid[i] && d.score[i] <= threshold) g.kept[i] = 1;
    return g;
}

LabelVolume ClusterMap::to_labels() const {
    LabelVolume v;
    v.nx = nx;
    v.ny = ny;
    v.nz = nz;
    v.labels = labels;
    return v;
}

ClusterMap connected_components_26(const BoolGrid& kept, const DistanceMap* scores) {
    ClusterMap c;
    c.nx = kept.nx;
    c.ny = kept.ny;
    c.nz = kept.nz;
    c.labels.assign(kept.size(), 0);

    const std::int64_t nx = kept.nx, ny = kept.ny, nz = kept.nz;
    std::vector<std::size_t> stack;
    std::int32_t next_label = 0;

    for (std::int64_t z = 0; z < nz; ++z) {
        for (std::int64_t y = 0; y < ny; ++y) {
            for (std::int64_t x = 0; x < nx; ++x) {
                const std::size_t seed = kept.index(static_cast<std::uint32_t>(x),
                                                    static_cast<std::uint32_t>(y),
                                                    static_cast<std::uint32_t>(z));
                if (!kept.kept[seed] || c.labels[seed] != 0) continue;

                // Flood fill from the first unlabeled voxel; labels are
                // therefore dense and in scan-encounter order.
                const std::int32_t label = ++next_label;
                ClusterStats stats;
                stats.label = label;
                stats.min_score = std::numeric_limits<double>::quiet_NaN();
                stack.assign(1, seed);
                c.labels[seed] = label;
                while (!stack.empty()) {
                    const std::size_t cur = stack.back();
                    stack.pop_back();
                    const std::int64_t cz = static_cast<std::int64_t>(cur) / (nx * ny);
                    const std::int64_t cy = (static_cast<std::int64_t>(cur) / nx) % ny;
                    const std::int64_t cx = static_cast<std::int64_t>(cur) % nx;

                    ++stats.voxels;
                    stats.centroid[0] += static_cast<double>(cx);
                    stats.centroid[1] += static_cast<double>(cy);
                    stats.centroid[2] += static_cast<double>(cz);
                    if (scores && scores->valid[cur]) {
                        const double s = scores->score[cur];
                        if (std::isnan(stats.min_score) || s < stats.min_score)
                            stats.min_score = s;
                    }

                    for (std::int64_t dz = -1; dz <= 1; ++dz) {
                        for (std::int64_t dy = -1; dy <= 1; ++dy) {
                            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                                if (dx == 0 && dy == 0 && dz == 0) continue;
                                const std::int64_t px = cx + dx, py = cy + dy, pz = cz + dz;
                                if (px < 0 || px >= nx || py < 0 || py >= ny || pz < 0 ||
                                    pz >= nz)
                                    continue;
                                const std::size_t nb = static_cast<std::size_t>(
                                    (pz * ny + py) * nx + px);
                                if (kept.kept[nb] && c.labels[nb] == 0) {
                                    c.labels[nb] = label;
                                    stack.push_back(nb);
                                }
                            }
                        }
                    }
                }
                stats.centroid[0] /= static_cast<double>(stats.voxels);
                stats.centroid[1] /= static_cast<double>(stats.voxels);
                stats.centroid[2] /= static_cast<double>(stats.voxels);
                c.clusters.push_back(stats);
            }
        }
    }
    return c;
}

ClusterMap filter_clusters(const ClusterMap& c, std::size_t min_size) {
    // old label -> new label, 0 for dropped clusters.
    std::vector<std::int32_t> remap(c.clusters.size() + 1, 0);
    ClusterMap out;
    out.nx = c.nx;
    out.ny = c.ny;
    out.nz = c.nz;
    std::int32_t next = 0;
    for (const ClusterStats& s : c.clusters) {
        if (s.voxels >= min_size) {
            remap[static_cast<std::size_t>(s.label)] = ++next;
            ClusterStats kept = s;
            kept.label = next;
            out.clusters.push_back(kept);
        }
    }
    out.labels.resize(c.labels.size());
    for (std::size_t i = 0; i < c.labels.size(); ++i)
        out.labels[i] = c.labels[i] > 0 ? remap[static_cast<std::size_t>(c.labels[i])] : 0;
    return out;
}

DetectionReport evaluate(const ClusterMap& c, const BoolGrid& truth) {
    if (c.nx != truth.nx || c.ny != truth.ny || c.nz != truth.nz)
        throw Error("evaluate: cluster map and truth grid dims differ");

    std::vector<std::uint8_t> overlaps(c.clusters.size() + 1, 0);
    DetectionReport r;
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
        if (truth.kept[i]) ++r.truth_voxels;
        if (c.labels[i] > 0 && truth.kept[i]) overlaps[static_cast<std::size_t>(c.labels[i])] = 1;
    }
    r.total_clusters = c.clusters.size();
    for (const ClusterStats& s : c.clusters) {
        if (overlaps[static_cast<std::size_t>(s.label)])
            ++r.true_clusters;
        else
            ++r.false_positives;
    }
    r.detected = r.true_clusters > 0;
    return r;
}

ClusterMap cluster_map_from_labels(const LabelVolume& labels) {
    ClusterMap c;
    c.nx = labels.nx;
    c.ny = labels.ny;
    c.nz = labels.nz;
    c.labels = labels.labels;

    std::int32_t max_label = 0;
    for (std::int32_t l : labels.labels) {
        if (l < 0) throw Error("cluster_map_from_labels: negative label");
        max_label = std::max(max_label, l);
    }
    c.clusters.resize(static_cast<std::size_t>(max_label));
    for (std::size_t i = 0; i < c.clusters.size(); ++i) {
        c.clusters[i].label = static_cast<std::int32_t>(i + 1);
        c.clusters[i].min_score = std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t i = 0;
    for (std::uint32_t z = 0; z < labels.nz; ++z) {
        for (std::uint32_t y = 0; y < labels.ny; ++y) {
            for (std::uint32_t x = 0; x < labels.nx; ++x, ++i) {
                const std::int32_t l = labels.labels[i];
                if (l == 0) continue;
                ClusterStats& s = c.clusters[static_cast<std::size_t>(l - 1)];
                ++s.voxels;
                s.centroid[0] += x;
                s.centroid[1] += y;
                s.centroid[2] += z;
            }
        }
    }
    for (ClusterStats& s : c.clusters) {
        if (s.voxels == 0) throw Error("cluster_map_from_labels: labels are not dense");
        s.centroid[0] /= static_cast<double>(s.voxels);
        s.centroid[1] /= static_cast<double>(s.voxels);
        s.centroid[2] /= static_cast<double>(s.voxels);
    }
    return c;
}

std::string report_text(const DetectionReport& r) {
    std::string out;
    out += "detected ";
    out += r.detected ? "yes" : "no";
    out += "\ntrue_clusters " + std::to_string(r.true_clusters);
    out += "\nfalse_positive_clusters " + std::to_string(r.false_positives);
    out += "\ntotal_clusters " + std::to_string(r.total_clusters);
    out += "\ntruth_voxels " + std::to_string(r.truth_voxels);
    out += "\n";
    return out;
}

void save_bank(const ClassifierBank& bank, const std::string& path) {
    ByteWriter w;
    w.magic(kBankMagic);
    w.u32(kBankVersion);
    w.f64(bank.nu);
    w.u32(static_cast<std::uint32_t>(bank.feature_dim));
    w.u32(static_cast<std::uint32_t>(bank.centers.size()));
    // Banks are built from (z,y,x)-sorted maps, so records are already in
    // canonical order and files are byte-comparable across runs.
    for (std::size_t i = 0; i < bank.centers.size(); ++i) {
        const VoxelIndex& c = bank.centers[i];
        const OcSvmModel& m = bank.models[i];
        w.u32(c.x);
        w.u32(c.y);
        w.u32(c.z);
        w.f64(m.kernel.gamma);
        w.f64(m.rho);
        w.u8(m.converged ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(m.support_vectors.size()));
        for (double a : m.alphas) w.f64(a);
        for (const auto& sv : m.support_vectors)
            for (double v : sv) w.f64(v);
    }
    write_file_atomic(path, w.data());
}

ClassifierBank load_bank(const std::string& path) {
    ByteReader r(read_file_bytes(path));
    r.expect_magic(kBankMagic, path);
    const std::uint32_t version = r.u32();
    if (version != kBankVersion)
        throw FormatError("unsupported bank version " + std::to_string(version), r.offset() - 4);

    ClassifierBank bank;
    bank.nu = r.f64();
    bank.feature_dim = r.u32();
    const std::uint32_t count = r.u32();
    bank.centers.reserve(count);
    bank.models.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        VoxelIndex c;
        c.x = r.u32();
        c.y = r.u32();
        c.z = r.u32();
        OcSvmModel m;
        m.nu = bank.nu;
        m.kernel.gamma = r.f64();
        m.rho = r.f64();
        m.converged = r.u8() != 0;
        const std::uint32_t sv_count = r.u32();
        m.alphas.resize(sv_count);
        for (double& a : m.alphas) a = r.f64();
        m.support_vectors.assign(sv_count, std::vector<double>(bank.feature_dim));
        for (auto& sv : m.support_vectors)
            for (double& v : sv) v = r.f64();
        bank.centers.push_back(c);
        bank.models.push_back(std::move(m));
    }
    r.expect_end(path);
    return bank;
}

}  // namespace vxw
