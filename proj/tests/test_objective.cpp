#include <doctest.h>

#include "lsm/cluster_init.hpp"
#include "lsm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace lsm;

namespace {

Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Dataset make_dataset(const std::vector<std::pair<Vec, int>>& rows) {
    Dataset ds;
    ds.id = "test";
    for (const auto& [x, y] : rows) ds.examples.push_back({x, y});
    return ds;
}

// Straightforward re-implementation of the full latent objective, kept
// structurally different from the library path on purpose.
double oracle_E(const std::vector<Vec>& w, const Dataset& data, double lambda, Regularizer reg,
                bool neg_variant) {
    double total = 0.0;
    for (const auto& e : data.examples) {
        const Vec x = augmented(e.features);
        std::vector<double> scores;
        for (const auto& wk : w) scores.push_back(wk.dot(x));
        const double best = *std::max_element(scores.begin(), scores.end());
        if (e.label > 0) {
            total += std::max(0.0, 1.0 - best);
        } else if (neg_variant) {
            for (double s : scores) total += std::max(0.0, 1.0 + s);
        } else {
            total += std::max(0.0, 1.0 + best);
        }
    }
    double omega = 0.0;
    for (const auto& wk : w) {
        const double n2 = wk.squaredNorm();
        if (reg == Regularizer::SumSq) omega += n2;
        if (reg == Regularizer::MaxSq) omega = std::max(omega, n2);
        if (reg == Regularizer::MaxNorm) omega = std::max(omega, std::sqrt(n2));
    }
    return total + lambda * omega;
}

LsmModel random_model(int k, Eigen::Index dim, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g;
    LsmModel m;
    for (int c = 0; c < k; ++c) {
        Vec w(dim);
        for (Eigen::Index j = 0; j < dim; ++j) w[j] = scale * g(rng);
        m.weights.push_back(std::move(w));
    }
    return m;
}

Dataset random_dataset(int npos, int nneg, Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Dataset ds;
    ds.id = "rand";
    for (int i = 0; i < npos; ++i) {
        Vec x(d);
        for (Eigen::Index j = 0; j < d; ++j) x[j] = g(rng);
        ds.examples.push_back({x, +1});
    }
    for (int i = 0; i < nneg; ++i) {
        Vec x(d);
        for (Eigen::Index j = 0; j < d; ++j) x[j] = g(rng);
        ds.examples.push_back({x, -1});
    }
    return ds;
}

} // namespace

TEST_CASE("hinge values and shape") {
    CHECK(hinge(0.0) == 1.0);
    CHECK(hinge(2.0) == 0.0);
    CHECK(hinge(-0.5) == 1.5);
    // convex, nonincreasing, nonnegative, zero on [1, inf)
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(hinge(0.5 * (a + b)) <= 0.5 * (hinge(a) + hinge(b)) + 1e-12);
        if (a <= b) CHECK(hinge(a) >= hinge(b));
        CHECK(hinge(a) >= 0.0);
    }
    CHECK(hinge(1.0) == 0.0);
    CHECK(hinge(7.5) == 0.0);
}

TEST_CASE("eval_E on the zero model counts the examples") {
    const Dataset ds = make_dataset({{vec2(0.3, 1.2), +1},
                                     {vec2(-0.7, 0.1), -1},
                                     {vec2(2.0, -1.0), -1}});
    LsmModel zero{{Vec::Zero(3), Vec::Zero(3)}};
    LsmHyper h{2, 1.0, Regularizer::SumSq, false};
    CHECK(eval_E(zero, ds, h) == 3.0);
}

TEST_CASE("eval_E matches the worked two-component example") {
    const Dataset ds = make_dataset({{vec1(1), +1}, {vec1(-1), +1}});
    LsmModel m{{vec2(1, 0), vec2(-1, 0)}};
    LsmHyper h{2, 1.0, Regularizer::SumSq, false};
    CHECK(eval_E(m, ds, h) == 2.0);
    CHECK(eval_E(m, ds, h) == oracle_E(m.weights, ds, 1.0, Regularizer::SumSq, false));

    SUBCASE("per-component negative term charges each component") {
        const Dataset with_neg = make_dataset({{vec1(1), +1}, {vec1(-1), +1}, {vec1(0), -1}});
        LsmHyper hv = h;
        hv.neg_variant = true;
        CHECK(eval_E(m, with_neg, h) == 3.0);  // max variant: L(-0) = 1
        CHECK(eval_E(m, with_neg, hv) == 4.0); // both components: L(-0) + L(-0) = 2
        CHECK(eval_E(m, with_neg, hv) ==
              oracle_E(m.weights, with_neg, 1.0, Regularizer::SumSq, true));
    }
}

TEST_CASE("eval_E equals the oracle on random instances") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 3);
        const Dataset ds = random_dataset(4 + rng() % 5, rng() % 5, 3, rng);
        const LsmModel m = random_model(k, 4, rng);
        for (Regularizer reg : {Regularizer::SumSq, Regularizer::MaxSq, Regularizer::MaxNorm}) {
            for (bool nv : {false, true}) {
                LsmHyper h{k, 0.37, reg, nv};
                CHECK(eval_E(m, ds, h) ==
                      doctest::Approx(oracle_E(m.weights, ds, 0.37, reg, nv)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("eval_F with the model's own assignment equals eval_E exactly") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 3);
        const Dataset ds = random_dataset(5, 4, 3, rng);
        const LsmModel m = random_model(k, 4, rng);
        std::vector<Vec> pos;
        for (const auto& e : ds.examples)
            if (e.label > 0) pos.push_back(augmented(e.features));
        const auto partition = assign_clusters(m, pos);
        LsmHyper h{k, 0.5, Regularizer::SumSq, false};
        CHECK(eval_F(m, ds, partition, h) == eval_E(m, ds, h));
    }
}

TEST_CASE("eval_F dominates eval_E for any partition") {
    const Dataset ds = make_dataset({{vec1(1), +1}, {vec1(-1), +1}});
    LsmModel m{{vec2(1, 0), vec2(-1, 0)}};
    LsmHyper h{2, 1.0, Regularizer::SumSq, false};
    // swapped assignment: each positive charged to the wrong component
    const std::vector<std::vector<int>> swapped = {{1}, {0}};
    CHECK(eval_F(m, ds, swapped, h) == 6.0);
    CHECK(eval_F(m, ds, swapped, h) >= eval_E(m, ds, h));

    SUBCASE("random partitions") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            const int k = 1 + static_cast<int>(rng() % 3);
            const Dataset d2 = random_dataset(6, 3, 2, rng);
            const LsmModel m2 = random_model(k, 3, rng);
            std::vector<std::vector<int>> partition(k);
            for (int p = 0; p < 6; ++p) partition[rng() % k].push_back(p);
            LsmHyper h2{k, 0.2, Regularizer::MaxNorm, false};
            CHECK(eval_F(m2, d2, partition, h2) >= eval_E(m2, d2, h2) - 1e-12);
        }
    }
}

TEST_CASE("eval_F with one component always equals eval_E") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset ds = random_dataset(5, 5, 3, rng);
        const LsmModel m = random_model(1, 4, rng);
        std::vector<std::vector<int>> partition(1);
        for (int p = 0; p < 5; ++p) partition[0].push_back(p);
        LsmHyper h{1, 0.9, Regularizer::SumSq, false};
        CHECK(eval_F(m, ds, partition, h) == eval_E(m, ds, h));
    }
}

TEST_CASE("eval_F rejects non-partitions") {
    const Dataset ds = make_dataset({{vec1(1), +1}, {vec1(-1), +1}, {vec1(0), -1}});
    LsmModel m{{vec2(1, 0), vec2(-1, 0)}};
    LsmHyper h{2, 1.0, Regularizer::SumSq, false};
    CHECK_THROWS_AS(eval_F(m, ds, {{0, 0}, {1}}, h), ValidationError); // duplicate
    CHECK_THROWS_AS(eval_F(m, ds, {{0}, {}}, h), ValidationError);    // missing point
    CHECK_THROWS_AS(eval_F(m, ds, {{0, 1, 2}, {}}, h), ValidationError); // out of range
}

TEST_CASE("eval_S values") {
    // two clusters of sizes 2 and 1 with points exactly at the means
    std::vector<Vec> pos_raw = {vec1(2), vec1(2), vec1(-2)};
    BoundInputs bi;
    bi.means_aug = {augmented(vec1(2)), augmented(vec1(-2))};
    bi.assignment = {0, 0, 1};
    bi.cluster_sizes = {2, 1};
    bi.epsilon = 0.0;
    const std::vector<Vec> negs = {augmented(vec1(0))};

    SUBCASE("zero model counts positives and negatives") {
        LsmModel zero{{Vec::Zero(2), Vec::Zero(2)}};
        CHECK(eval_S(zero, bi, negs, 3.0) == 4.0); // |P| + |N| + 0
    }
    SUBCASE("points at means reproduce the assigned positive loss") {
        LsmModel m{{vec2(0.4, 0), vec2(-0.3, 0.1)}};
        const double assigned_loss = 2 * hinge(m.weights[0].dot(bi.means_aug[0])) +
                                     1 * hinge(m.weights[1].dot(bi.means_aug[1]));
        const double neg_loss = hinge(-std::max(m.weights[0].dot(negs[0]),
                                                m.weights[1].dot(negs[0])));
        const double reg = 3.0 * std::max(m.weights[0].norm(), m.weights[1].norm());
        CHECK(eval_S(m, bi, negs, 3.0) == doctest::Approx(assigned_loss + neg_loss + reg));
    }
    SUBCASE("random instances match an independent recomputation") {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 100; ++trial) {
            const LsmModel m = random_model(2, 2, rng);
            double expect = 0.0;
            for (int k = 0; k < 2; ++k)
                expect += bi.cluster_sizes[k] *
                          std::max(0.0, 1.0 - m.weights[k].dot(bi.means_aug[k]));
            double best = std::max(m.weights[0].dot(negs[0]), m.weights[1].dot(negs[0]));
            expect += std::max(0.0, 1.0 + best);
            expect += 0.7 * std::max(m.weights[0].norm(), m.weights[1].norm());
            CHECK(eval_S(m, bi, negs, 0.7) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("pino_gap collapses when every point sits at its mean") {
    BoundInputs bi;
    bi.means_aug = {augmented(vec1(2)), augmented(vec1(-2))};
    bi.assignment = {0, 0, 1};
    bi.cluster_sizes = {2, 1};
    bi.epsilon = 0.0;
    const std::vector<Vec> pos = {augmented(vec1(2)), augmented(vec1(2)), augmented(vec1(-2))};
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const LsmModel m = random_model(2, 2, rng);
        const PinoGap g = pino_gap(m, bi, pos);
        CHECK(g.lower == doctest::Approx(g.middle).epsilon(1e-12));
        CHECK(g.upper == doctest::Approx(g.middle).epsilon(1e-12));
    }
}

TEST_CASE("pino_gap on the zero model gives the positive count everywhere") {
    BoundInputs bi;
    bi.means_aug = {augmented(vec1(1)), augmented(vec1(5))};
    bi.assignment = {0, 1, 1};
    bi.cluster_sizes = {1, 2};
    bi.epsilon = 4.2;
    const std::vector<Vec> pos = {augmented(vec1(1)), augmented(vec1(4)), augmented(vec1(6))};
    LsmModel zero{{Vec::Zero(2), Vec::Zero(2)}};
    const PinoGap g = pino_gap(zero, bi, pos);
    CHECK(g.lower == 3.0);
    CHECK(g.middle == 3.0);
    CHECK(g.upper == 3.0);
}

TEST_CASE("pino and surrogate sandwich hold on random draws") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> scale(0.2, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 3);
        const int npos = k + 1 + static_cast<int>(rng() % 8);
        const int nneg = static_cast<int>(rng() % 6);
        const Eigen::Index d = 2 + rng() % 3;
        std::vector<Vec> pos_raw;
        for (int i = 0; i < npos; ++i) {
            Vec x(d);
            for (Eigen::Index j = 0; j < d; ++j) x[j] = scale(rng) * g(rng);
            pos_raw.push_back(x);
        }
        Dataset ds;
        ds.id = "draw";
        for (const auto& x : pos_raw) ds.examples.push_back({x, +1});
        std::vector<Vec> negs_aug;
        for (int i = 0; i < nneg; ++i) {
            Vec x(d);
            for (Eigen::Index j = 0; j < d; ++j) x[j] = g(rng);
            ds.examples.push_back({x, -1});
            negs_aug.push_back(augmented(x));
        }
        const ClusterInit ci = kmeans(pos_raw, k, rng(), 3);
        const BoundInputs bi = ci.bound_inputs();
        std::vector<Vec> pos_aug;
        for (const auto& x : pos_raw) pos_aug.push_back(augmented(x));

        const LsmModel m = random_model(k, d + 1, rng, scale(rng));
        const PinoGap gap = pino_gap(m, bi, pos_aug);
        CHECK(gap.lower <= gap.middle + 1e-9);
        CHECK(gap.middle <= gap.upper + 1e-9);

        const double lambda = 0.1 + std::abs(g(rng));
        LsmHyper h{k, lambda, Regularizer::MaxNorm, false};
        const double e_val = eval_E(m, ds, h);
        CHECK(eval_S_min_anchor(m, bi, negs_aug, lambda - bi.epsilon) <= e_val + 1e-9);
        CHECK(e_val <= eval_S_min_anchor(m, bi, negs_aug, lambda + bi.epsilon) + 1e-9);
        // the convex surrogate still upper bounds E
        CHECK(e_val <= eval_S(m, bi, negs_aug, lambda + bi.epsilon) + 1e-9);

        // fixed-assignment objective vs the convex surrogate
        LsmHyper hf{k, lambda - 2 * bi.epsilon, Regularizer::MaxNorm, false};
        CHECK(eval_F(m, ds, ci.partition(), hf) <=
              eval_S(m, bi, negs_aug, lambda - bi.epsilon) + 1e-9);
    }
}

TEST_CASE("eval_J on the zero model counts both fit terms") {
    Dataset a = make_dataset({{vec1(1), +1}, {vec1(0), -1}});
    Dataset b = make_dataset({{vec1(2), +1}, {vec1(1), -1}, {vec1(0), -1}});
    a.id = "a";
    b.id = "b";
    DatasetCollection coll{{a, b}, 1};
    MultiTaskModel mt = MultiTaskModel::zeros(2, 2, 2);
    MtlHyper h{2, 0.5, 2.0, 1.0};
    CHECK(eval_J(mt, coll, h) == (0.5 + 2.0) * 5.0);
}

TEST_CASE("eval_J with one component matches the flat multitask objective") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    Dataset a = random_dataset(4, 3, 3, rng);
    Dataset b = random_dataset(3, 4, 3, rng);
    a.id = "a";
    b.id = "b";
    DatasetCollection coll{{a, b}, 3};
    for (int trial = 0; trial < 100; ++trial) {
        MultiTaskModel mt = MultiTaskModel::zeros(1, 2, 4);
        for (Eigen::Index j = 0; j < 4; ++j) mt.shared[0][j] = g(rng);
        for (int t = 0; t < 2; ++t)
            for (Eigen::Index j = 0; j < 4; ++j) mt.bias[t][0][j] = g(rng);
        MtlHyper h{1, 0.8, 1.3, 0.45};

        double expect = mt.shared[0].squaredNorm();
        for (int t = 0; t < 2; ++t) {
            expect += h.rho * mt.bias[t][0].squaredNorm();
            for (const auto& e : coll.datasets[t].examples) {
                const Vec x = augmented(e.features);
                expect += h.c1 * std::max(0.0, 1.0 - e.label * (mt.shared[0] + mt.bias[t][0]).dot(x));
                expect += h.c2 * std::max(0.0, 1.0 - e.label * mt.shared[0].dot(x));
            }
        }
        CHECK(eval_J(mt, coll, h) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("eval_J with C1=0 and zero bias is the aggregate objective") {
    std::mt19937_64 rng(37);
    Dataset a = random_dataset(4, 4, 2, rng);
    Dataset b = random_dataset(5, 3, 2, rng);
    a.id = "a";
    b.id = "b";
    DatasetCollection coll{{a, b}, 2};
    const LsmModel m = random_model(2, 3, rng);
    MultiTaskModel mt = MultiTaskModel::zeros(2, 2, 3);
    mt.shared = m.weights;
    MtlHyper h{2, 0.0, 1.7, 0.9};

    double hinge_sum = 0.0;
    for (const auto& ds : coll.datasets)
        for (const auto& e : ds.examples) {
            const Vec x = augmented(e.features);
            double best = std::max(m.weights[0].dot(x), m.weights[1].dot(x));
            hinge_sum += std::max(0.0, 1.0 - e.label * best);
        }
    const double expect =
        1.7 * hinge_sum + m.weights[0].squaredNorm() + m.weights[1].squaredNorm();
    CHECK(eval_J(mt, coll, h) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("objectives are nondecreasing in their regularization weights") {
    std::mt19937_64 rng(41);
    const Dataset ds = random_dataset(5, 5, 3, rng);
    Dataset b = random_dataset(4, 4, 3, rng);
    b.id = "b";
    DatasetCollection coll{{ds, b}, 3};
    for (int trial = 0; trial < 30; ++trial) {
        const LsmModel m = random_model(2, 4, rng);
        LsmHyper lo{2, 0.3, Regularizer::MaxNorm, false};
        LsmHyper hi{2, 0.9, Regularizer::MaxNorm, false};
        CHECK(eval_E(m, ds, lo) <= eval_E(m, ds, hi) + 1e-12);

        MultiTaskModel mt = MultiTaskModel::zeros(2, 2, 4);
        mt.shared = m.weights;
        mt.bias[0] = random_model(2, 4, rng).weights;
        mt.bias[1] = random_model(2, 4, rng).weights;
        MtlHyper base{2, 0.5, 0.5, 0.5};
        for (double delta : {0.25, 1.0}) {
            MtlHyper c1 = base;
            c1.c1 += delta;
            MtlHyper c2 = base;
            c2.c2 += delta;
            MtlHyper rho = base;
            rho.rho += delta;
            CHECK(eval_J(mt, coll, base) <= eval_J(mt, coll, c1) + 1e-12);
            CHECK(eval_J(mt, coll, base) <= eval_J(mt, coll, c2) + 1e-12);
            CHECK(eval_J(mt, coll, base) <= eval_J(mt, coll, rho) + 1e-12);
        }
    }
}

TEST_CASE("the negative error term is midpoint convex in the weights") {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 3);
        Vec x(3);
        for (Eigen::Index j = 0; j < 3; ++j) x[j] = g(rng);
        const LsmModel a = random_model(k, 3, rng);
        const LsmModel b = random_model(k, 3, rng);
        LsmModel mid;
        for (int c = 0; c < k; ++c) mid.weights.push_back(0.5 * (a.weights[c] + b.weights[c]));
        auto neg_term = [&](const LsmModel& m) {
            double best = m.weights[0].dot(x);
            for (const auto& w : m.weights) best = std::max(best, w.dot(x));
            return std::max(0.0, 1.0 + best);
        };
        CHECK(neg_term(mid) <= 0.5 * (neg_term(a) + neg_term(b)) + 1e-9);
    }
}
