// detector.hpp -- per-voxel classifier bank and cluster post-processing.
#ifndef VXW_DETECTOR_HPP
#define VXW_DETECTOR_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vxw/ocsvm.hpp"
#include "vxw/patch.hpp"
#include "vxw/volume.hpp"

namespace vxw {

// center -> one feature vector per subject (the middle-layer representation
// of the patch centered there). std::map keys keep everything in canonical
// (z, y, x) order.
using CenterFeatures = std::map<VoxelIndex, std::vector<std::vector<double>>>;
using CenterVector = std::map<VoxelIndex, std::vector<double>>;

struct ClassifierBank {
    std::vector<VoxelIndex> centers;  // sorted (z, y, x), parallel to models
    std::vector<OcSvmModel> models;
    std::size_t feature_dim = 0;
    double nu = 0.0;
    // Centers dropped during training: fewer than two subjects, or zero
    // feature spread (no bandwidth).
    std::vector<VoxelIndex> skipped;
};

// Trains one oc-SVM per center with a per-center median-heuristic bandwidth
// and the shared nu. Throws when no center survives.
ClassifierBank build_bank(const CenterFeatures& features, double nu, double gamma_scale = 0.5,
                          const SolverOptions& solver = {});

struct DistanceMap {
    std::uint32_t nx = 0, ny = 0, nz = 0;
    std::vector<float> score;         // signed decision score, 0 where invalid
    std::vector<std::uint8_t> valid;  // voxels actually scored

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }

    // The map travels in the volume container: scores as intensities,
    // validity as the mask.
    Volume to_volume() const;
    static DistanceMap from_volume(const Volume& v);
};

// Scores every bank center that the subject has a representation for.
// Throws when the intersection is empty or feature dims disagree.
DistanceMap score_subject(const ClassifierBank& bank, const CenterVector& subject_features,
                          std::uint32_t nx, std::uint32_t ny, std::uint32_t nz);

// Keeps the lower tail of the subject's score distribution: the threshold
// is the ceil(p * m)-th smallest of the m valid scores and every voxel with
// score <= threshold is kept (ties included).
struct BoolGrid {
    std::uint32_t nx = 0, ny = 0, nz = 0;
    std::vector<std::uint8_t> kept;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    }
};

BoolGrid threshold_map(const DistanceMap& d, double p);

struct ClusterStats {
    std::int32_t label = 0;
    std::size_t voxels = 0;
    double centroid[3] = {0.0, 0.0, 0.0};
    double min_score = 0.0;  // NaN when no score map was supplied
};

struct ClusterMap {
    std::uint32_t nx = 0, ny = 0, nz = 0;
    std::vector<std::int32_t> labels;  // 0 = background, clusters 1..k
    std::vector<ClusterStats> clusters;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
    LabelVolume to_labels() const;
};

// Maximal components under the 26-neighborhood (all 3^3 - 1 offsets),
// labeled in first-encounter scan order (x fastest, then y, then z).
ClusterMap connected_components_26(const BoolGrid& kept, const DistanceMap* scores = nullptr);

// Drops clusters with fewer than min_size voxels and recompacts labels to
// 1..k preserving relative order. Idempotent.
ClusterMap filter_clusters(const ClusterMap& c, std::size_t min_size);

struct DetectionReport {
    bool detected = false;            // some cluster overlaps the truth grid
    std::size_t true_clusters = 0;    // clusters overlapping >= 1 truth voxel
    std::size_t false_positives = 0;  // clusters with no overlap
    std::size_t total_clusters = 0;
    std::size_t truth_voxels = 0;
};

DetectionReport evaluate(const ClusterMap& c, const BoolGrid& truth);
std::string report_text(const DetectionReport& r);

// Rebuilds cluster statistics from a bare label grid (sizes and centroids;
// min_score is NaN). Labels must be dense 1..k.
ClusterMap cluster_map_from_labels(const LabelVolume& labels);

// Bank container: magic "VXWB" | u32 version | f64 nu | u32 feature_dim
// | u32 center count | per center (sorted (z,y,x)): u32 x, y, z | f64 gamma
// | f64 rho | u8 converged | u32 sv count | f64 alphas | f64 sv values.
void save_bank(const ClassifierBank& bank, const std::string& path);
ClassifierBank load_bank(const std::string& path);

}  // namespace vxw

#endif
