#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "vxw/cli.hpp"
#include "vxw/config.hpp"
#include "vxw/detector.hpp"
#include "vxw/network.hpp"
#include "vxw/volume.hpp"

using namespace vxw;
using vxw::testing::TempDir;
using vxw::testing::slurp;

namespace {

int run(const std::vector<std::string>& args) { return cli::run(args); }

// Small cohort and cheap training settings shared by the CLI tests.
const std::vector<std::string> kFast = {
    "--epochs-pretrain", "2", "--epochs-finetune", "2", "--widths", "12,6",
    "--stride",          "5", "--seed",            "7",
};

std::vector<std::string> with_fast(std::vector<std::string> args) {
    args.insert(args.end(), kFast.begin(), kFast.end());
    return args;
}

void make_cohort(const std::string& dir) {
    REQUIRE(run({"generate", "--out", dir, "--dims", "14,14,6", "--subjects", "3",
                 "--lesion-center", "7,7,3", "--lesion-radius", "2", "--seed", "3"}) == 0);
}

// Runs the full pipeline into `dir`, returning the artifact paths.
struct PipelineFiles {
    std::string cohort, pretrained, model, bank, map, clusters, report;
};

PipelineFiles run_pipeline(const TempDir& tmp, const std::string& tag) {
    PipelineFiles f;
    f.cohort = tmp.file("cohort_" + tag);
    f.pretrained = tmp.file("pre_" + tag + ".vxwm");
    f.model = tmp.file("model_" + tag + ".vxwm");
    f.bank = tmp.file("bank_" + tag + ".vxwb");
    f.map = tmp.file("map_" + tag + ".vxw");
    f.clusters = tmp.file("clusters_" + tag + ".vxwc");
    f.report = tmp.file("report_" + tag + ".txt");

    make_cohort(f.cohort);
    REQUIRE(run(with_fast({"pretrain", "--cohort", f.cohort, "--out", f.pretrained})) == 0);
    REQUIRE(run(with_fast({"finetune", "--cohort", f.cohort, "--model", f.pretrained, "--out",
                           f.model})) == 0);
    REQUIRE(run(with_fast({"build-bank", "--cohort", f.cohort, "--model", f.model, "--out",
                           f.bank})) == 0);
    REQUIRE(run(with_fast({"score", "--bank", f.bank, "--model", f.model, "--subject",
                           f.cohort + "/test.vxw", "--out", f.map})) == 0);
    REQUIRE(run(with_fast({"clusters", "--map", f.map, "--out", f.clusters, "--report",
                           f.report})) == 0);
    return f;
}

bool file_exists(const std::string& p) { return std::filesystem::exists(p); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full pipeline smoke test produces parseable artifacts") {
    TempDir tmp("cli_smoke");
    const PipelineFiles f = run_pipeline(tmp, "a");

    // Every artifact loads through its module loader.
    CHECK(load_model(f.model).layers.size() == 2);
    CHECK_NOTHROW(load_bank(f.bank));
    CHECK_NOTHROW(load_volume(f.map));
    CHECK_NOTHROW(load_labels(f.clusters));

    const auto report = slurp(f.report);
    const std::string text(report.begin(), report.end());
    CHECK(text.find("clusters ") != std::string::npos);
    CHECK(text.find("kept_voxels ") != std::string::npos);

    // Manifests carry the lineage.
    const Manifest bank_manifest = read_manifest(f.bank);
    CHECK(bank_manifest.command == "build-bank");
    CHECK(bank_manifest.fields.count("model_hash") == 1);
    CHECK(bank_manifest.fields.count("lineage_hash") == 1);

    // Evaluation runs end to end against the generated truth.
    CHECK(run({"evaluate", "--clusters", f.clusters, "--truth", f.cohort + "/truth.vxw",
               "--out", tmp.file("eval.txt")}) == 0);
    const auto eval = slurp(tmp.file("eval.txt"));
    CHECK(std::string(eval.begin(), eval.end()).find("detected ") == 0);
}

TEST_CASE("identical seeds reproduce byte-identical artifacts") {
    TempDir tmp("cli_det");
    const PipelineFiles a = run_pipeline(tmp, "a");
    const PipelineFiles b = run_pipeline(tmp, "b");

    for (const std::string& name :
         {std::string("healthy_000.vxw"), std::string("test.vxw"), std::string("truth.vxw")})
        CHECK(slurp(a.cohort + "/" + name) == slurp(b.cohort + "/" + name));
    CHECK(slurp(a.pretrained) == slurp(b.pretrained));
    CHECK(slurp(a.model) == slurp(b.model));
    CHECK(slurp(a.bank) == slurp(b.bank));
    CHECK(slurp(a.map) == slurp(b.map));
    CHECK(slurp(a.clusters) == slurp(b.clusters));
    CHECK(slurp(a.report) == slurp(b.report));
}

TEST_CASE("scoring refuses a model the bank was not built with") {
    TempDir tmp("cli_wrong_model");
    const PipelineFiles f = run_pipeline(tmp, "a");

    // A different seed yields a different model file.
    const std::string other = tmp.file("other.vxwm");
    std::vector<std::string> args = {"pretrain", "--cohort", f.cohort, "--out", other};
    args.insert(args.end(), kFast.begin(), kFast.end());
    args.back() = "8";  // different --seed value
    REQUIRE(run(args) == 0);

    const std::string out = tmp.file("bad_map.vxw");
    CHECK(run(with_fast({"score", "--bank", f.bank, "--model", other, "--subject",
                         f.cohort + "/test.vxw", "--out", out})) != 0);
    CHECK_FALSE(file_exists(out));
    CHECK_FALSE(file_exists(out + ".tmp"));
}

TEST_CASE("stage coupling rejects a config hash mismatch") {
    TempDir tmp("cli_lineage");
    const PipelineFiles f = run_pipeline(tmp, "a");

    // Model-relevant mismatch: different alpha.
    auto bad = with_fast({"clusters", "--map", f.map, "--out", tmp.file("c2.vxwc"), "--report",
                          tmp.file("r2.txt")});
    bad.push_back("--alpha");
    bad.push_back("0.9");
    CHECK(run(bad) != 0);
    CHECK_FALSE(file_exists(tmp.file("c2.vxwc")));

    // Post-processing knobs may vary without breaking lineage.
    auto ok = with_fast({"clusters", "--map", f.map, "--out", tmp.file("c3.vxwc"), "--report",
                         tmp.file("r3.txt")});
    ok.push_back("--p-value");
    ok.push_back("0.05");
    ok.push_back("--min-cluster-size");
    ok.push_back("1");
    CHECK(run(ok) == 0);
    CHECK(file_exists(tmp.file("c3.vxwc")));
}

TEST_CASE("commands exit nonzero on missing inputs") {
    TempDir tmp("cli_missing");
    CHECK(run({"pretrain", "--cohort", tmp.file("nope"), "--out", tmp.file("m.vxwm")}) != 0);
    CHECK(run({"evaluate", "--clusters", tmp.file("no.vxwc"), "--truth",
               tmp.file("no.vxw")}) != 0);
    CHECK(run({}) != 0);
    CHECK(run({"not-a-command"}) != 0);
}

TEST_CASE("config file feeds every stage and flags override it") {
    TempDir tmp("cli_cfg");
    PipelineConfig c;
    c.epochs_pretrain = 1;
    c.epochs_finetune = 1;
    c.widths = {10, 5};
    c.corruption_pretrain = {0.3, 0.1};
    c.stride = 5;
    c.seed = 21;
    const std::string cfg = tmp.file("cfg.txt");
    {
        std::ofstream out(cfg);
        out << render_config(c);
    }

    const std::string cohort = tmp.file("cohort");
    make_cohort(cohort);
    const std::string model = tmp.file("m.vxwm");
    REQUIRE(run({"pretrain", "--cohort", cohort, "--out", model, "--config", cfg}) == 0);
    const SiameseModel loaded = load_model(model);
    REQUIRE(loaded.layers.size() == 2);
    CHECK(loaded.layers[0].fan_out == 10);

    // Flag wins over the file.
    const std::string model2 = tmp.file("m2.vxwm");
    REQUIRE(run({"pretrain", "--cohort", cohort, "--out", model2, "--config", cfg, "--widths",
                 "8,4"}) == 0);
    CHECK(load_model(model2).layers[0].fan_out == 8);
}

TEST_CASE("generated cohorts honor the noise and lesion switches") {
    TempDir tmp("cli_gen");
    // Zero noise: all healthy subjects identical.
    REQUIRE(run({"generate", "--out", tmp.file("flat"), "--dims", "12,12,8", "--subjects", "3",
                 "--noise", "0", "--lesion-center", "6,6,4", "--lesion-radius", "2", "--seed",
                 "5"}) == 0);
    CHECK(slurp(tmp.file("flat") + "/healthy_000.vxw") ==
          slurp(tmp.file("flat") + "/healthy_001.vxw"));

    // Radius zero: no lesion, truth empty, test matches the healthy noise law.
    REQUIRE(run({"generate", "--out", tmp.file("none"), "--dims", "12,12,8", "--subjects", "2",
                 "--lesion-radius", "0", "--seed", "5"}) == 0);
    const Volume truth = load_volume(tmp.file("none") + "/truth.vxw");
    for (float v : truth.data) CHECK(v == 0.0f);
}

TEST_CASE("lesion shift raises the mean intensity inside the sphere") {
    TempDir tmp("cli_lesion");
    REQUIRE(run({"generate", "--out", tmp.file("c"), "--dims", "20,20,20", "--subjects", "6",
                 "--noise", "0.02", "--lesion-radius", "4", "--lesion-shift", "0.3", "--seed",
                 "11"}) == 0);
    const Volume truth = load_volume(tmp.file("c") + "/truth.vxw");
    const Volume test = load_volume(tmp.file("c") + "/test.vxw");

    // Average healthy intensity at the same voxels approximates the template.
    double healthy_mean = 0.0, test_mean = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < 6; ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "/healthy_%03zu.vxw", s);
        const Volume h = load_volume(tmp.file("c") + name);
        for (std::size_t i = 0; i < truth.data.size(); ++i)
            if (truth.data[i] > 0.5f) healthy_mean += h.data[i];
    }
    for (std::size_t i = 0; i < truth.data.size(); ++i)
        if (truth.data[i] > 0.5f) {
            test_mean += test.data[i];
            ++count;
        }
    REQUIRE(count > 0);
    healthy_mean /= static_cast<double>(6 * count);
    test_mean /= static_cast<double>(count);
    CHECK(test_mean - healthy_mean == doctest::Approx(0.3).epsilon(0.15));
}

}  // TEST_SUITE
