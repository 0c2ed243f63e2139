#include <doctest.h>

#include "lsm/model.hpp"

#include <filesystem>
#include <random>

using namespace lsm;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("score takes the best component, ties to the lowest index") {
    LsmModel m{{vec2(1, 0), vec2(-1, 0)}};
    const Vec x = vec2(2, 1);
    const ScoreResult r = score(m, x);
    CHECK(r.value == 2.0);
    CHECK(r.component == 0);

    LsmModel zero{{vec2(0, 0), vec2(0, 0)}};
    const ScoreResult tie = score(zero, x);
    CHECK(tie.value == 0.0);
    CHECK(tie.component == 0);

    LsmModel folded{{vec2(0, 1)}};
    const ScoreResult fb = score(folded, vec2(5, 1));
    CHECK(fb.value == 1.0);
    CHECK(fb.component == 0);
}

TEST_CASE("predict uses a strict zero threshold") {
    LsmModel m{{vec2(1, 0)}};
    CHECK(predict(m, vec2(2, 1)) == 1);
    CHECK(predict(m, vec2(0, 1)) == -1); // score exactly 0
    CHECK(predict(m, vec2(-0.3, 1)) == -1);
}

TEST_CASE("score rejects dimension mismatches") {
    LsmModel m{{vec2(1, 0)}};
    Vec bad(3);
    bad << 1, 2, 3;
    CHECK_THROWS_AS(score(m, bad), ValidationError);
}

TEST_CASE("compose adds shared and bias vectors") {
    MultiTaskModel mt = MultiTaskModel::zeros(2, 3, 2);
    mt.shared[0] = vec2(1, 0);
    mt.shared[1] = vec2(0, 2);
    SUBCASE("zero bias composes to the shared model for every dataset") {
        for (int t = 0; t < 3; ++t) {
            const LsmModel c = compose(mt, t);
            CHECK(c.weights[0] == mt.shared[0]);
            CHECK(c.weights[1] == mt.shared[1]);
        }
    }
    SUBCASE("bias adds per component") {
        mt.bias[2][0] = vec2(0, 1);
        const LsmModel c = compose(mt, 2);
        CHECK(c.weights[0] == vec2(1, 1));
    }
    SUBCASE("out of range dataset index") {
        CHECK_THROWS_AS(compose(mt, 5), ValidationError);
        CHECK_THROWS_AS(compose(mt, -1), ValidationError);
    }
}

TEST_CASE("assign_clusters partitions by argmax") {
    LsmModel m{{vec2(1, 0), vec2(-1, 0)}};
    const std::vector<Vec> pts = {vec2(1, 1), vec2(-1, 1)};
    const auto parts = assign_clusters(m, pts);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0] == std::vector<int>{0});
    CHECK(parts[1] == std::vector<int>{1});

    LsmModel zero{{vec2(0, 0), vec2(0, 0)}};
    const auto all_first = assign_clusters(zero, pts);
    CHECK(all_first[0].size() == 2);
    CHECK(all_first[1].empty());
}

TEST_CASE("assignment sizes always sum to the number of points") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 4);
        LsmModel m;
        for (int c = 0; c < k; ++c) m.weights.push_back(vec2(g(rng), g(rng)));
        std::vector<Vec> pts;
        for (int i = 0; i < 13; ++i) pts.push_back(vec2(g(rng), g(rng)));
        const auto parts = assign_clusters(m, pts);
        std::size_t total = 0;
        for (const auto& p : parts) total += p.size();
        CHECK(total == pts.size());
    }
}

TEST_CASE("positive scaling leaves predictions and assignments unchanged") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> cdist(0.01, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        LsmModel m{{vec2(g(rng), g(rng)), vec2(g(rng), g(rng))}};
        const double c = cdist(rng);
        LsmModel scaled{{c * m.weights[0], c * m.weights[1]}};
        std::vector<Vec> pts;
        for (int i = 0; i < 9; ++i) pts.push_back(vec2(g(rng), g(rng)));
        for (const auto& x : pts) CHECK(predict(m, x) == predict(scaled, x));
        CHECK(assign_clusters(m, pts) == assign_clusters(scaled, pts));
    }
}

TEST_CASE("compose then score equals scoring explicitly summed vectors") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    MultiTaskModel mt = MultiTaskModel::zeros(3, 2, 4);
    for (auto& w : mt.shared)
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = g(rng);
    for (auto& per_t : mt.bias)
        for (auto& v : per_t)
            for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = g(rng);
    for (int t = 0; t < 2; ++t) {
        const LsmModel c = compose(mt, t);
        Vec x(4);
        for (Eigen::Index j = 0; j < 4; ++j) x[j] = g(rng);
        LsmModel manual;
        for (int k = 0; k < 3; ++k) manual.weights.push_back(mt.shared[k] + mt.bias[t][k]);
        CHECK(score(c, x).value == score(manual, x).value);
        CHECK(score(c, x).component == score(manual, x).component);
    }
}

TEST_CASE("augmented appends exactly one") {
    const Vec x = vec2(3, -4);
    const Vec a = augmented(x);
    REQUIRE(a.size() == 3);
    CHECK(a[0] == 3.0);
    CHECK(a[1] == -4.0);
    CHECK(a[2] == 1.0);
}

TEST_CASE("model files round-trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lsmkit_test_model";
    fs::create_directories(dir);
    std::mt19937_64 rng(37);
    std::normal_distribution<double> g;

    SUBCASE("single-dataset model") {
        LsmModel m;
        for (int k = 0; k < 3; ++k) {
            Vec w(5);
            for (Eigen::Index j = 0; j < 5; ++j) w[j] = g(rng);
            m.weights.push_back(w);
        }
        save_model(m, dir / "lsm.txt");
        const ModelFile back = load_model(dir / "lsm.txt");
        CHECK_FALSE(back.multitask.has_value());
        REQUIRE(back.lsm.num_components() == 3);
        for (int k = 0; k < 3; ++k) CHECK(back.lsm.weights[k] == m.weights[k]);
    }
    SUBCASE("multitask model") {
        MultiTaskModel mt = MultiTaskModel::zeros(2, 3, 4);
        for (auto& w : mt.shared)
            for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = g(rng);
        for (auto& per_t : mt.bias)
            for (auto& v : per_t)
                for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = g(rng);
        save_model(mt, dir / "mtl.txt");
        const ModelFile back = load_model(dir / "mtl.txt");
        REQUIRE(back.multitask.has_value());
        CHECK(back.multitask->num_datasets() == 3);
        for (int k = 0; k < 2; ++k) CHECK(back.multitask->shared[k] == mt.shared[k]);
        for (int t = 0; t < 3; ++t)
            for (int k = 0; k < 2; ++k) CHECK(back.multitask->bias[t][k] == mt.bias[t][k]);
    }
}
