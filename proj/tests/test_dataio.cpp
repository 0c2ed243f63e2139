#include <doctest.h>

#include "lsm/dataio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace lsm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("lsmkit_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("load_collection parses the sparse text format") {
    const fs::path dir = temp_dir("load_basic");
    write_file(dir / "a.ds", "+1 1:1.0\n-1 2:1.0\n");
    const DatasetCollection coll = load_collection(dir);
    CHECK(coll.num_datasets() == 1);
    CHECK(coll.dim == 2);
    CHECK(coll.datasets[0].id == "a");
    REQUIRE(coll.datasets[0].examples.size() == 2);
    CHECK(coll.datasets[0].examples[0].label == 1);
    CHECK(coll.datasets[0].examples[0].features[0] == 1.0);
    CHECK(coll.datasets[0].examples[0].features[1] == 0.0);
    CHECK(coll.datasets[0].examples[1].label == -1);
    CHECK(coll.datasets[0].examples[1].features[1] == 1.0);
}

TEST_CASE("load_collection pads to the max index across files") {
    const fs::path dir = temp_dir("load_pad");
    write_file(dir / "a.ds", "+1 3:2.0\n-1 1:1.0\n");
    write_file(dir / "b.ds", "+1 5:1.5\n-1 2:0.5\n");
    const DatasetCollection coll = load_collection(dir);
    CHECK(coll.dim == 5);
    CHECK(coll.datasets[0].examples[0].features.size() == 5);
    CHECK(coll.datasets[0].examples[0].features[2] == 2.0);
    CHECK(coll.datasets[0].examples[0].features[4] == 0.0);
    // files are ordered lexicographically
    CHECK(coll.datasets[0].id == "a");
    CHECK(coll.datasets[1].id == "b");
}

TEST_CASE("load_collection rejects bad labels with file and line") {
    const fs::path dir = temp_dir("load_label");
    write_file(dir / "a.ds", "+1 1:1.0\n+2 1:1.0\n");
    try {
        load_collection(dir);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("a.ds:2") != std::string::npos);
        CHECK(msg.find("label") != std::string::npos);
    }
}

TEST_CASE("load_collection error cases") {
    const fs::path dir = temp_dir("load_errors");
    SUBCASE("no files") { CHECK_THROWS_AS(load_collection(dir), IoError); }
    SUBCASE("empty file") {
        write_file(dir / "a.ds", "# only a comment\n");
        CHECK_THROWS_AS(load_collection(dir), IoError);
    }
    SUBCASE("malformed entry") {
        write_file(dir / "a.ds", "+1 1:x\n");
        CHECK_THROWS_AS(load_collection(dir), IoError);
    }
    SUBCASE("duplicate index") {
        write_file(dir / "a.ds", "+1 1:1 1:2\n");
        CHECK_THROWS_AS(load_collection(dir), IoError);
    }
    SUBCASE("dim header smaller than max index") {
        write_file(dir / "a.ds", "#dim 2\n+1 3:1.0\n");
        CHECK_THROWS_AS(load_collection(dir), IoError);
    }
}

TEST_CASE("#dim header can widen a dataset") {
    const fs::path dir = temp_dir("load_dimheader");
    write_file(dir / "a.ds", "#dim 7\n+1 2:1.0\n-1 1:1.0\n");
    const DatasetCollection coll = load_collection(dir);
    CHECK(coll.dim == 7);
}

TEST_CASE("save/load round-trips a synthetic collection exactly") {
    SynthConfig cfg;
    cfg.num_datasets = 3;
    cfg.num_clusters = 2;
    cfg.dim = 5;
    cfg.pos_per_cluster = 7;
    cfg.neg_per_dataset = 9;
    cfg.bias_shift = 1.5;
    cfg.seed = 42;
    const DatasetCollection coll = synth_biased_collection(cfg);
    const fs::path dir = temp_dir("roundtrip");
    save_collection(coll, dir);
    const DatasetCollection back = load_collection(dir);
    REQUIRE(back.num_datasets() == coll.num_datasets());
    CHECK(back.dim == coll.dim);
    for (int t = 0; t < coll.num_datasets(); ++t) {
        CHECK(back.datasets[t].id == coll.datasets[t].id);
        REQUIRE(back.datasets[t].examples.size() == coll.datasets[t].examples.size());
        for (std::size_t i = 0; i < coll.datasets[t].examples.size(); ++i) {
            CHECK(back.datasets[t].examples[i].label == coll.datasets[t].examples[i].label);
            CHECK(back.datasets[t].examples[i].features == coll.datasets[t].examples[i].features);
        }
    }
}

TEST_CASE("split_train_val is stratified and deterministic") {
    Dataset ds;
    ds.id = "s";
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 8; ++i) ds.examples.push_back({Vec::Constant(2, g(rng)), +1});
    for (int i = 0; i < 8; ++i) ds.examples.push_back({Vec::Constant(2, g(rng)), -1});

    SplitSpec spec;
    spec.train_fraction = 0.75;
    spec.seed = 11;
    auto [train, val] = split_train_val(ds, spec);
    CHECK(train.num_positives() == 6);
    CHECK(train.num_negatives() == 6);
    CHECK(val.num_positives() == 2);
    CHECK(val.num_negatives() == 2);

    auto [train2, val2] = split_train_val(ds, spec);
    REQUIRE(train2.examples.size() == train.examples.size());
    for (std::size_t i = 0; i < train.examples.size(); ++i)
        CHECK(train2.examples[i].features == train.examples[i].features);

    SUBCASE("halves are disjoint and exhaustive for any seed") {
        for (std::uint64_t s : {0ULL, 5ULL, 99ULL}) {
            spec.seed = s;
            auto [tr, va] = split_train_val(ds, spec);
            CHECK(tr.examples.size() + va.examples.size() == ds.examples.size());
            // multiset of feature values must match the input exactly
            std::vector<double> all, got;
            for (const auto& e : ds.examples) all.push_back(e.features[0]);
            for (const auto& e : tr.examples) got.push_back(e.features[0]);
            for (const auto& e : va.examples) got.push_back(e.features[0]);
            std::sort(all.begin(), all.end());
            std::sort(got.begin(), got.end());
            CHECK(all == got);
        }
    }
}

TEST_CASE("split_train_val rejects classes that cannot fill both halves") {
    Dataset ds;
    ds.id = "tiny";
    ds.examples.push_back({Vec::Zero(1), +1});
    for (int i = 0; i < 8; ++i) ds.examples.push_back({Vec::Constant(1, i), -1});
    CHECK_THROWS_AS(split_train_val(ds, SplitSpec{}), ValidationError);
}

TEST_CASE("synth generator with zero bias keeps dataset means together") {
    SynthConfig cfg;
    cfg.num_datasets = 3;
    cfg.num_clusters = 2;
    cfg.dim = 2;
    cfg.pos_per_cluster = 400;
    cfg.neg_per_dataset = 10;
    cfg.bias_shift = 0.0;
    cfg.noise = 0.5;
    cfg.seed = 5;
    const DatasetCollection coll = synth_biased_collection(cfg);
    const int n = 2 * cfg.pos_per_cluster;
    std::vector<Vec> means;
    for (const auto& ds : coll.datasets) {
        Vec m = Vec::Zero(cfg.dim);
        for (const auto& e : ds.examples)
            if (e.label > 0) m += e.features;
        means.push_back(m / n);
    }
    const double bound = 4.0 * cfg.noise / std::sqrt(static_cast<double>(n));
    for (std::size_t a = 0; a < means.size(); ++a)
        for (std::size_t b = a + 1; b < means.size(); ++b)
            for (int j = 0; j < cfg.dim; ++j)
                CHECK(std::abs(means[a][j] - means[b][j]) < bound);
}

TEST_CASE("synth generator separates dataset means by the bias shift") {
    SynthConfig cfg;
    cfg.num_datasets = 3;
    cfg.num_clusters = 2;
    cfg.dim = 4;
    cfg.pos_per_cluster = 500;
    cfg.neg_per_dataset = 10;
    cfg.bias_shift = 5.0;
    cfg.noise = 0.1;
    cfg.seed = 9;
    const DatasetCollection coll = synth_biased_collection(cfg);
    const int n = 2 * cfg.pos_per_cluster;
    std::vector<Vec> means;
    for (const auto& ds : coll.datasets) {
        Vec m = Vec::Zero(cfg.dim);
        for (const auto& e : ds.examples)
            if (e.label > 0) m += e.features;
        means.push_back(m / n);
    }
    const double tol = 3.0 * cfg.noise / std::sqrt(static_cast<double>(n)) * cfg.dim;
    for (std::size_t a = 0; a < means.size(); ++a)
        for (std::size_t b = a + 1; b < means.size(); ++b)
            CHECK(std::abs((means[a] - means[b]).norm() - cfg.bias_shift) < tol);
}

TEST_CASE("synth output files are byte-identical for a fixed seed") {
    SynthConfig cfg;
    cfg.pos_per_cluster = 5;
    cfg.neg_per_dataset = 5;
    cfg.seed = 123;
    const fs::path d1 = temp_dir("synth_det1");
    const fs::path d2 = temp_dir("synth_det2");
    save_collection(synth_biased_collection(cfg), d1);
    save_collection(synth_biased_collection(cfg), d2);
    for (const auto& entry : fs::directory_iterator(d1))
        CHECK(slurp(entry.path()) == slurp(d2 / entry.path().filename()));
}

TEST_CASE("synth rejects bad configs") {
    SynthConfig cfg;
    cfg.pos_per_cluster = 0;
    CHECK_THROWS_AS(synth_biased_collection(cfg), ValidationError);
    cfg.pos_per_cluster = 5;
    cfg.noise = 0.0;
    CHECK_THROWS_AS(synth_biased_collection(cfg), ValidationError);
    cfg.noise = 0.5;
    cfg.bias_shift = 1.0;
    cfg.dim = 2;
    cfg.num_datasets = 3; // needs dim >= T when shifted
    CHECK_THROWS_AS(synth_biased_collection(cfg), ValidationError);
}
