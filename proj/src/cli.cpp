#include "vxw/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "vxw/binio.hpp"
#include "vxw/config.hpp"
#include "vxw/detector.hpp"
#include "vxw/errors.hpp"
#include "vxw/network.hpp"
#include "vxw/ocsvm.hpp"
#include "vxw/patch.hpp"
#include "vxw/rng.hpp"
#include "vxw/synthetic.hpp"
#include "vxw/volume.hpp"

namespace vxw::cli {

namespace {

namespace fs = std::filesystem;

// Seed stream tags for the pipeline stages.
constexpr std::uint64_t kSeedPairs = 11;
constexpr std::uint64_t kSeedFinetune = 12;

std::string render_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Pipeline configuration flags: defaults <- --config file <- explicit flags.

struct ConfigCli {
    CLI::App* sub = nullptr;
    std::string config_path;
    PipelineConfig flags;
    std::string widths_csv;
    std::string corruption_csv;

    void attach(CLI::App* s) {
        sub = s;
        s->add_option("--config", config_path, "configuration file (flat key-value lines)");
        s->add_option("--patch-size", flags.patch_size, "odd patch edge length");
        s->add_option("--stride", flags.stride, "training patch grid stride");
        s->add_option("--widths", widths_csv, "hidden layer widths, e.g. 64,32");
        s->add_option("--corruption-pretrain", corruption_csv,
                      "per-layer pretraining corruption rates, e.g. 0.3,0.1");
        s->add_option("--corruption-finetune", flags.corruption_finetune,
                      "fine-tuning corruption rate");
        s->add_option("--alpha", flags.alpha, "reconstruction/cosine tradeoff");
        s->add_option("--nu", flags.nu, "oc-SVM outlier fraction bound");
        s->add_option("--p-value", flags.p_value, "lower-tail score quantile");
        s->add_option("--min-cluster-size", flags.min_cluster_size,
                      "smallest surviving cluster, in voxels");
        s->add_option("--gamma-scale", flags.gamma_scale,
                      "bandwidth heuristic scale; gamma = scale / median^2");
        s->add_option("--lr-pretrain", flags.lr_pretrain, "pretraining learning rate");
        s->add_option("--lr-finetune", flags.lr_finetune, "fine-tuning learning rate");
        s->add_option("--batch-size", flags.batch_size, "SGD mini-batch size");
        s->add_option("--epochs-pretrain", flags.epochs_pretrain, "pretraining epochs per layer");
        s->add_option("--epochs-finetune", flags.epochs_finetune, "fine-tuning epochs");
        s->add_option("--n-pairs", flags.n_pairs,
                      "similar pairs for fine-tuning (0: one per training patch)");
        s->add_option("--seed", flags.seed, "master seed");
    }

    PipelineConfig resolve() const {
        PipelineConfig c;
        if (!config_path.empty()) c = load_config(config_path);
        const auto given = [this](const char* name) { return sub->count(name) > 0; };
        if (given("--patch-size")) c.patch_size = flags.patch_size;
        if (given("--stride")) c.stride = flags.stride;
        if (given("--widths")) {
            c.widths.clear();
            for (const auto& tok : CLI::detail::split(widths_csv, ','))
                c.widths.push_back(std::stoull(tok));
        }
        if (given("--corruption-pretrain")) {
            c.corruption_pretrain.clear();
            for (const auto& tok : CLI::detail::split(corruption_csv, ','))
                c.corruption_pretrain.push_back(std::stod(tok));
        }
        if (given("--corruption-finetune")) c.corruption_finetune = flags.corruption_finetune;
        if (given("--alpha")) c.alpha = flags.alpha;
        if (given("--nu")) c.nu = flags.nu;
        if (given("--p-value")) c.p_value = flags.p_value;
        if (given("--min-cluster-size")) c.min_cluster_size = flags.min_cluster_size;
        if (given("--gamma-scale")) c.gamma_scale = flags.gamma_scale;
        if (given("--lr-pretrain")) c.lr_pretrain = flags.lr_pretrain;
        if (given("--lr-finetune")) c.lr_finetune = flags.lr_finetune;
        if (given("--batch-size")) c.batch_size = flags.batch_size;
        if (given("--epochs-pretrain")) c.epochs_pretrain = flags.epochs_pretrain;
        if (given("--epochs-finetune")) c.epochs_finetune = flags.epochs_finetune;
        if (given("--n-pairs")) c.n_pairs = flags.n_pairs;
        if (given("--seed")) c.seed = flags.seed;
        return c;
    }
};

// ---------------------------------------------------------------------------
// Shared pipeline helpers.

std::vector<std::string> healthy_paths(const std::string& cohort_dir) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(cohort_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("healthy_") && name.ends_with(".vxw"))
            out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Error("no healthy_*.vxw volumes found in " + cohort_dir);
    return out;
}

// Middle-layer representation of the patch centered at every masked voxel
// whose window fits inside the slice. This is the per-voxel feature grid
// behind the classifier bank, independent of the training stride.
CenterVector dense_features(const Volume& rescaled, const SiameseModel& model,
                            std::uint32_t p) {
    if (p == 0 || p % 2 == 0) throw Error("dense_features: patch size must be odd");
    if (p > rescaled.nx || p > rescaled.ny)
        throw Error("dense_features: patch size exceeds slice dims");
    const std::uint32_t half = (p - 1) / 2;
    CenterVector out;
    std::vector<double> values(static_cast<std::size_t>(p) * p);
    for (std::uint32_t z = 0; z < rescaled.nz; ++z) {
        for (std::uint32_t cy = half; cy + half < rescaled.ny; ++cy) {
            for (std::uint32_t cx = half; cx + half < rescaled.nx; ++cx) {
                if (!rescaled.masked(cx, cy, z)) continue;
                std::size_t k = 0;
                for (std::uint32_t dy = 0; dy < p; ++dy)
                    for (std::uint32_t dx = 0; dx < p; ++dx)
                        values[k++] = rescaled.at(cx - half + dx, cy - half + dy, z);
                out.emplace(VoxelIndex{cx, cy, z}, encode(model, values));
            }
        }
    }
    return out;
}

ProgressFn stderr_progress() {
    return [](const TrainProgress& p) { std::cerr << progress_line(p) << "\n"; };
}

void check_lineage(const std::string& artifact, const PipelineConfig& c,
                   const std::string& what) {
    const Manifest m = read_manifest(artifact);
    const auto it = m.fields.find("lineage_hash");
    if (it == m.fields.end())
        throw Error(what + ": manifest of " + artifact + " carries no lineage hash");
    if (it->second != lineage_hash(c))
        throw Error(what + ": config hash mismatch with " + artifact +
                    " (artifact " + it->second + ", current " + lineage_hash(c) + ")");
}

Manifest base_manifest(const std::string& command, const PipelineConfig& c) {
    Manifest m;
    m.command = command;
    m.fields["tool_version"] = kToolVersion;
    m.fields["config_hash"] = config_hash(c);
    m.fields["lineage_hash"] = lineage_hash(c);
    m.fields["seed"] = std::to_string(c.seed);
    return m;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_generate(const SyntheticCohortSpec& spec, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const SyntheticCohort cohort = generate_cohort(spec);

    Manifest m;
    m.command = "generate";
    m.fields["tool_version"] = kToolVersion;
    m.fields["seed"] = std::to_string(spec.seed);
    m.fields["dims"] = std::to_string(spec.nx) + "," + std::to_string(spec.ny) + "," +
                       std::to_string(spec.nz);
    m.fields["subjects"] = std::to_string(spec.subjects);
    m.fields["noise_level"] = render_double(spec.noise_level);
    m.fields["template_smoothness"] = render_double(spec.template_smoothness);
    m.fields["lesion_radius"] = render_double(spec.lesion_radius);
    m.fields["lesion_shift"] = render_double(spec.lesion_shift);

    for (std::size_t s = 0; s < cohort.healthy.size(); ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "healthy_%03zu.vxw", s);
        const std::string path = (fs::path(out_dir) / name).string();
        save_volume(cohort.healthy[s], path);
        m.fields[std::string("hash_") + name] = hash_file(path);
    }
    const std::string test_path = (fs::path(out_dir) / "test.vxw").string();
    const std::string truth_path = (fs::path(out_dir) / "truth.vxw").string();
    save_volume(cohort.test, test_path);
    save_volume(cohort.truth, truth_path);
    m.fields["hash_test.vxw"] = hash_file(test_path);
    m.fields["hash_truth.vxw"] = hash_file(truth_path);
    write_manifest((fs::path(out_dir) / "cohort").string(), m);
    return 0;
}

int cmd_pretrain(const PipelineConfig& c, const std::string& cohort_dir,
                 const std::string& model_out) {
    std::vector<std::vector<double>> inputs;
    for (const std::string& path : healthy_paths(cohort_dir)) {
        const Volume v = rescale_unit(load_volume(path));
        for (Patch& patch : extract_patches(v, c.patch_size, c.stride))
            inputs.push_back(std::move(patch.values));
    }
    std::cerr << "pretraining on " << inputs.size() << " patches\n";

    SgdConfig sgd;
    sgd.learning_rate = c.lr_pretrain;
    sgd.batch_size = c.batch_size;
    sgd.epochs = c.epochs_pretrain;
    sgd.seed = c.seed;
    SiameseModel model =
        pretrain_stack(inputs, c.widths, c.corruption_pretrain, sgd, stderr_progress());
    model.alpha = c.alpha;
    model.corruption_finetune = c.corruption_finetune;
    save_model(model, model_out);

    Manifest m = base_manifest("pretrain", c);
    m.fields["patches"] = std::to_string(inputs.size());
    m.fields["output_hash"] = hash_file(model_out);
    write_manifest(model_out, m);
    return 0;
}

int cmd_finetune(const PipelineConfig& c, const std::string& cohort_dir,
                 const std::string& model_in, const std::string& model_out) {
    check_lineage(model_in, c, "finetune");
    SiameseModel model = load_model(model_in);
    model.alpha = c.alpha;
    model.corruption_finetune = c.corruption_finetune;

    std::vector<std::vector<Patch>> subject_patches;
    std::size_t total = 0;
    for (const std::string& path : healthy_paths(cohort_dir)) {
        const Volume v = rescale_unit(load_volume(path));
        subject_patches.push_back(extract_patches(v, c.patch_size, c.stride));
        total += subject_patches.back().size();
    }
    const std::size_t n_pairs = c.n_pairs > 0 ? c.n_pairs : total;
    const PairBatch pairs =
        sample_pairs(subject_patches, n_pairs, mix_seed(c.seed, kSeedPairs));
    std::cerr << "fine-tuning on " << n_pairs << " similar pairs\n";

    SgdConfig sgd;
    sgd.learning_rate = c.lr_finetune;
    sgd.batch_size = c.batch_size;
    sgd.epochs = c.epochs_finetune;
    sgd.seed = mix_seed(c.seed, kSeedFinetune);
    finetune(model, pairs, sgd, stderr_progress());
    save_model(model, model_out);

    Manifest m = base_manifest("finetune", c);
    m.fields["input_model_hash"] = hash_file(model_in);
    m.fields["pairs"] = std::to_string(n_pairs);
    m.fields["output_hash"] = hash_file(model_out);
    write_manifest(model_out, m);
    return 0;
}

int cmd_build_bank(const PipelineConfig& c, const std::string& cohort_dir,
                   const std::string& model_path, const std::string& bank_out) {
    check_lineage(model_path, c, "build-bank");
    const SiameseModel model = load_model(model_path);

    CenterFeatures features;
    std::size_t subjects = 0;
    for (const std::string& path : healthy_paths(cohort_dir)) {
        const Volume v = rescale_unit(load_volume(path));
        for (auto& [center, repr] : dense_features(v, model, c.patch_size))
            features[center].push_back(std::move(repr));
        ++subjects;
    }
    std::cerr << "training " << features.size() << " per-voxel classifiers on " << subjects
              << " subjects\n";

    const ClassifierBank bank = build_bank(features, c.nu, c.gamma_scale);
    if (!bank.skipped.empty())
        std::cerr << "skipped " << bank.skipped.size()
                  << " centers (degenerate spread or too few subjects)\n";
    std::size_t unconverged = 0;
    for (const OcSvmModel& m : bank.models)
        if (!m.converged) ++unconverged;
    if (unconverged > 0)
        std::cerr << "warning: " << unconverged << " classifiers hit the sweep cap\n";
    save_bank(bank, bank_out);

    Manifest m = base_manifest("build-bank", c);
    m.fields["model_hash"] = hash_file(model_path);
    m.fields["centers"] = std::to_string(bank.centers.size());
    m.fields["output_hash"] = hash_file(bank_out);
    write_manifest(bank_out, m);
    return 0;
}

int cmd_score(const PipelineConfig& c, const std::string& bank_path,
              const std::string& model_path, const std::string& subject_path,
              const std::string& map_out) {
    check_lineage(bank_path, c, "score");
    const Manifest bank_manifest = read_manifest(bank_path);
    const auto recorded = bank_manifest.fields.find("model_hash");
    if (recorded == bank_manifest.fields.end())
        throw Error("score: bank manifest records no model hash");
    const std::string actual = hash_file(model_path);
    if (recorded->second != actual)
        throw Error("score: bank was built with a different model (bank " + recorded->second +
                    ", supplied " + actual + ")");

    const ClassifierBank bank = load_bank(bank_path);
    const SiameseModel model = load_model(model_path);
    const Volume subject = rescale_unit(load_volume(subject_path));
    const CenterVector reprs = dense_features(subject, model, c.patch_size);
    const DistanceMap map = score_subject(bank, reprs, subject.nx, subject.ny, subject.nz);
    save_volume(map.to_volume(), map_out);

    Manifest m = base_manifest("score", c);
    m.fields["bank_hash"] = hash_file(bank_path);
    m.fields["model_hash"] = actual;
    m.fields["subject"] = fs::path(subject_path).filename().string();
    m.fields["output_hash"] = hash_file(map_out);
    write_manifest(map_out, m);
    return 0;
}

int cmd_clusters(const PipelineConfig& c, const std::string& map_in,
                 const std::string& clusters_out, const std::string& report_out) {
    check_lineage(map_in, c, "clusters");
    const DistanceMap map = DistanceMap::from_volume(load_volume(map_in));
    const BoolGrid kept = threshold_map(map, c.p_value);
    const ClusterMap all = connected_components_26(kept, &map);
    const ClusterMap final_map = filter_clusters(all, c.min_cluster_size);
    save_labels(final_map.to_labels(), clusters_out);

    std::string report = "clusters " + std::to_string(final_map.clusters.size()) + "\n";
    std::size_t kept_count = 0;
    for (std::uint8_t k : kept.kept) kept_count += k;
    report += "kept_voxels " + std::to_string(kept_count) + "\n";
    report += "p_value " + render_double(c.p_value) + "\n";
    report += "min_cluster_size " + std::to_string(c.min_cluster_size) + "\n";
    for (const ClusterStats& s : final_map.clusters) {
        report += "cluster " + std::to_string(s.label) + " voxels " + std::to_string(s.voxels) +
                  " centroid " + render_double(s.centroid[0]) + " " +
                  render_double(s.centroid[1]) + " " + render_double(s.centroid[2]) +
                  " min_score " + render_double(s.min_score) + "\n";
    }
    write_file_atomic(report_out, report);

    Manifest m = base_manifest("clusters", c);
    m.fields["map_hash"] = hash_file(map_in);
    m.fields["clusters"] = std::to_string(final_map.clusters.size());
    m.fields["output_hash"] = hash_file(clusters_out);
    write_manifest(clusters_out, m);
    return 0;
}

int cmd_evaluate(const std::string& clusters_path, const std::string& truth_path,
                 const std::string& report_out) {
    const LabelVolume labels = load_labels(clusters_path);
    const ClusterMap cm = cluster_map_from_labels(labels);
    const Volume truth_volume = load_volume(truth_path);
    if (truth_volume.nx != labels.nx || truth_volume.ny != labels.ny ||
        truth_volume.nz != labels.nz)
        throw Error("evaluate: cluster map and truth grid dims differ");
    BoolGrid truth;
    truth.nx = truth_volume.nx;
    truth.ny = truth_volume.ny;
    truth.nz = truth_volume.nz;
    truth.kept.resize(truth_volume.size());
    for (std::size_t i = 0; i < truth.kept.size(); ++i)
        truth.kept[i] = truth_volume.data[i] > 0.5f ? 1 : 0;

    const DetectionReport r = evaluate(cm, truth);
    const std::string text = report_text(r);
    std::cout << text;
    if (!report_out.empty()) {
        write_file_atomic(report_out, text);
        Manifest m;
        m.command = "evaluate";
        m.fields["tool_version"] = kToolVersion;
        m.fields["clusters_hash"] = hash_file(clusters_path);
        m.fields["truth_hash"] = hash_file(truth_path);
        write_manifest(report_out, m);
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"voxel-level outlier detection pipeline"};
    app.require_subcommand(1);

    // generate
    SyntheticCohortSpec spec;
    std::string gen_out;
    std::string dims_csv = "32,32,32";
    std::string lesion_center_csv;
    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic cohort");
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_option("--dims", dims_csv, "volume dims nx,ny,nz");
    generate->add_option("--subjects", spec.subjects, "healthy subject count");
    generate->add_option("--smoothness", spec.template_smoothness, "template smoothing radius");
    generate->add_option("--noise", spec.noise_level, "per-subject noise sigma");
    generate->add_option("--lesion-center", lesion_center_csv, "lesion center x,y,z");
    generate->add_option("--lesion-radius", spec.lesion_radius, "lesion radius (0 disables)");
    generate->add_option("--lesion-shift", spec.lesion_shift, "lesion intensity shift");
    generate->add_option("--seed", spec.seed, "cohort seed");

    // pretrain
    ConfigCli pre_cfg;
    std::string pre_cohort, pre_out;
    CLI::App* pretrain = app.add_subcommand("pretrain", "greedy layer-wise pretraining");
    pretrain->add_option("--cohort", pre_cohort, "cohort directory")->required();
    pretrain->add_option("--out", pre_out, "output model file")->required();
    pre_cfg.attach(pretrain);

    // finetune
    ConfigCli fin_cfg;
    std::string fin_cohort, fin_in, fin_out;
    CLI::App* fine = app.add_subcommand("finetune", "siamese fine-tuning on similar pairs");
    fine->add_option("--cohort", fin_cohort, "cohort directory")->required();
    fine->add_option("--model", fin_in, "pretrained model file")->required();
    fine->add_option("--out", fin_out, "output model file")->required();
    fin_cfg.attach(fine);

    // build-bank
    ConfigCli bank_cfg;
    std::string bank_cohort, bank_model, bank_out;
    CLI::App* bank = app.add_subcommand("build-bank", "train the per-voxel classifier bank");
    bank->add_option("--cohort", bank_cohort, "cohort directory")->required();
    bank->add_option("--model", bank_model, "trained model file")->required();
    bank->add_option("--out", bank_out, "output bank file")->required();
    bank_cfg.attach(bank);

    // score
    ConfigCli score_cfg;
    std::string score_bank, score_model, score_subject_path, score_out;
    CLI::App* score = app.add_subcommand("score", "score one subject against the bank");
    score->add_option("--bank", score_bank, "classifier bank file")->required();
    score->add_option("--model", score_model, "model the bank was built with")->required();
    score->add_option("--subject", score_subject_path, "subject volume")->required();
    score->add_option("--out", score_out, "output distance map")->required();
    score_cfg.attach(score);

    // clusters
    ConfigCli cl_cfg;
    std::string cl_map, cl_out, cl_report;
    CLI::App* clusters = app.add_subcommand("clusters", "threshold, label, and filter a map");
    clusters->add_option("--map", cl_map, "distance map file")->required();
    clusters->add_option("--out", cl_out, "output cluster map")->required();
    clusters->add_option("--report", cl_report, "output cluster report")->required();
    cl_cfg.attach(clusters);

    // evaluate
    std::string ev_clusters, ev_truth, ev_out;
    CLI::App* evaluate = app.add_subcommand("evaluate", "compare a cluster map against truth");
    evaluate->add_option("--clusters", ev_clusters, "cluster map file")->required();
    evaluate->add_option("--truth", ev_truth, "ground-truth volume")->required();
    evaluate->add_option("--out", ev_out, "optional report file");

    std::vector<const char*> argv;
    argv.push_back("vxw");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (generate->parsed()) {
            const auto dims = CLI::detail::split(dims_csv, ',');
            if (dims.size() != 3) throw Error("generate: --dims expects nx,ny,nz");
            spec.nx = static_cast<std::uint32_t>(std::stoul(dims[0]));
            spec.ny = static_cast<std::uint32_t>(std::stoul(dims[1]));
            spec.nz = static_cast<std::uint32_t>(std::stoul(dims[2]));
            if (!lesion_center_csv.empty()) {
                const auto c = CLI::detail::split(lesion_center_csv, ',');
                if (c.size() != 3) throw Error("generate: --lesion-center expects x,y,z");
                spec.lesion_x = std::stol(c[0]);
                spec.lesion_y = std::stol(c[1]);
                spec.lesion_z = std::stol(c[2]);
            }
            return cmd_generate(spec, gen_out);
        }
        if (pretrain->parsed()) return cmd_pretrain(pre_cfg.resolve(), pre_cohort, pre_out);
        if (fine->parsed())
            return cmd_finetune(fin_cfg.resolve(), fin_cohort, fin_in, fin_out);
        if (bank->parsed())
            return cmd_build_bank(bank_cfg.resolve(), bank_cohort, bank_model, bank_out);
        if (score->parsed())
            return cmd_score(score_cfg.resolve(), score_bank, score_model, score_subject_path,
                             score_out);
        if (clusters->parsed())
            return cmd_clusters(cl_cfg.resolve(), cl_map, cl_out, cl_report);
        if (evaluate->parsed()) return cmd_evaluate(ev_clusters, ev_truth, ev_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

}  // namespace vxw::cli
