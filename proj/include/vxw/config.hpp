// config.hpp -- pipeline configuration, canonical rendering, run manifests.
#ifndef VXW_CONFIG_HPP
#define VXW_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vxw {

struct PipelineConfig {
    std::uint32_t patch_size = 9;
    std::uint32_t stride = 5;  // training patch harvest; the bank is per-voxel
    std::vector<std::size_t> widths = {64, 32};
    std::vector<double> corruption_pretrain = {0.3, 0.1};
    double corruption_finetune = 0.1;
    double alpha = 0.66;
    double nu = 0.03;
    double p_value = 0.003;
    std::size_t min_cluster_size = 82;
    double gamma_scale = 0.5;  // gamma = gamma_scale / median^2

    double lr_pretrain = 2.0;
    double lr_finetune = 0.5;
    std::size_t batch_size = 32;
    std::size_t epochs_pretrain = 12;
    std::size_t epochs_finetune = 12;
    std::size_t n_pairs = 0;  // 0: one pair per harvested patch
    std::uint64_t seed = 1;

    bool operator==(const PipelineConfig&) const = default;
};

// Canonical flat key-value rendering, one "key value" line per field in a
// fixed order. Floats use shortest round-trip decimals, so the text (and
// its hash) is stable and parse(render(c)) == c.
std::string render_config(const PipelineConfig& c);
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

// Hash of the full canonical rendering.
std::string config_hash(const PipelineConfig& c);
// Hash of the model-determining subset: everything except the
// post-processing knobs (p_value, min_cluster_size), which may legitimately
// vary between a bank build and later scoring/clustering runs.
std::string lineage_hash(const PipelineConfig& c);

// Run manifest: a key-value sidecar written next to every produced
// artifact, recording the tool version, config hashes, seeds, and the
// hashes of inputs and outputs so any run can be replayed and verified.
struct Manifest {
    std::string command;
    std::map<std::string, std::string> fields;
};

std::string manifest_path(const std::string& artifact_path);
void write_manifest(const std::string& artifact_path, const Manifest& m);
Manifest read_manifest(const std::string& artifact_path);

}  // namespace vxw

#endif
