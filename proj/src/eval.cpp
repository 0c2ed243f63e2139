#include "lsm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

namespace lsm {

ApResult average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("average_precision: scores/labels size mismatch");
    if (scores.empty()) throw ValidationError("average_precision: empty input");
    int npos = 0;
    for (int y : labels) {
        if (y != 1 && y != -1) throw ValidationError("average_precision: labels must be +/-1");
        npos += (y > 0);
    }
    if (npos == 0) throw ValidationError("average_precision: no positives");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    ApResult res;
    res.precision.reserve(order.size());
    res.recall.reserve(order.size());
    int tp = 0;
    double ap_sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] > 0) ++tp;
        const double prec = static_cast<double>(tp) / static_cast<double>(r + 1);
        res.precision.push_back(prec);
        res.recall.push_back(static_cast<double>(tp) / npos);
        if (labels[order[r]] > 0) ap_sum += prec;
    }
    res.ap = ap_sum / npos;
    return res;
}

std::vector<double> model_scores(const LsmModel& m, const Dataset& data) {
    std::vector<double> out;
    out.reserve(data.examples.size());
    for (const auto& e : data.examples) out.push_back(score(m, augmented(e.features)).value);
    return out;
}

double model_ap(const LsmModel& m, const Dataset& data) {
    std::vector<int> labels;
    labels.reserve(data.examples.size());
    for (const auto& e : data.examples) labels.push_back(e.label);
    return average_precision(model_scores(m, data), labels).ap;
}

namespace {

std::vector<Vec> pooled_positives(const DatasetCollection& coll) {
    std::vector<Vec> pos;
    for (const auto& ds : coll.datasets)
        for (const auto& e : ds.examples)
            if (e.label > 0) pos.push_back(e.features);
    return pos;
}

MultiTaskModel random_init(int k, int t, Eigen::Index aug_dim, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MultiTaskModel m = MultiTaskModel::zeros(k, t, aug_dim);
    for (auto& w : m.shared)
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = scale * gauss(rng);
    for (auto& per_t : m.bias)
        for (auto& v : per_t)
            for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = scale * gauss(rng);
    return m;
}

DatasetCollection concatenated(const DatasetCollection& coll) {
    DatasetCollection out;
    out.dim = coll.dim;
    Dataset all;
    all.id = "aggregate";
    for (const auto& ds : coll.datasets)
        all.examples.insert(all.examples.end(), ds.examples.begin(), ds.examples.end());
    out.datasets.push_back(std::move(all));
    return out;
}

} // namespace

DebiasRun train_debias(const DatasetCollection& coll, const MtlHyper& h, const SgdConfig& cfg,
                       InitKind init, double random_scale) {
    coll.validate();
    h.validate();
    DebiasRun run;
    switch (init) {
    case InitKind::Zero:
        run.init = MultiTaskModel::zeros(h.num_components, coll.num_datasets(), coll.dim + 1);
        break;
    case InitKind::Random:
        run.init = random_init(h.num_components, coll.num_datasets(), coll.dim + 1,
                               cfg.seed ^ 0xC0FFEEULL, random_scale);
        break;
    case InitKind::KMeans: {
        const auto pos = pooled_positives(coll);
        const ClusterInit ci = kmeans(pos, h.num_components, cfg.seed);
        run.init = init_mtl_from_clusters(ci, coll, h, cfg);
        break;
    }
    }
    auto [model, trace] = train_mtl(coll, h, run.init, cfg);
    run.model = std::move(model);
    run.trace = std::move(trace);
    return run;
}

LsmModel train_aggregate_lsm(const DatasetCollection& coll, double c, int num_components,
                             const SgdConfig& cfg) {
    MtlHyper h;
    h.num_components = num_components;
    h.c1 = 0.0;
    h.c2 = c;
    h.rho = 1.0;
    const DatasetCollection concat = concatenated(coll);
    auto [model, trace] =
        train_mtl(concat, h, MultiTaskModel::zeros(num_components, 1, coll.dim + 1), cfg);
    (void)trace;
    LsmModel out;
    out.weights = std::move(model.shared);
    return out;
}

ProtocolReport run_seen(const DatasetCollection& coll, const MtlHyper& h, const SgdConfig& cfg,
                        const SplitSpec& split) {
    coll.validate();
    const int t_count = coll.num_datasets();
    DatasetCollection train;
    train.dim = coll.dim;
    std::vector<Dataset> test;
    SplitSpec per_split = split;
    for (int t = 0; t < t_count; ++t) {
        per_split.seed = split.seed + 31 * static_cast<std::uint64_t>(t);
        auto [tr, te] = split_train_val(coll.datasets[t], per_split);
        train.datasets.push_back(std::move(tr));
        test.push_back(std::move(te));
    }

    const DebiasRun run = train_debias(train, h, cfg, InitKind::KMeans);
    const LsmModel aggregate = train_aggregate_lsm(train, h.c1 + h.c2, h.num_components, cfg);

    std::vector<LsmModel> independent;
    for (int t = 0; t < t_count; ++t) {
        DatasetCollection solo;
        solo.dim = coll.dim;
        solo.datasets.push_back(train.datasets[t]);
        independent.push_back(train_aggregate_lsm(solo, h.c1 + h.c2, h.num_components, cfg));
    }

    ProtocolReport rep;
    rep.ap = Mat::Zero(t_count, t_count + 3);
    for (int t = 0; t < t_count; ++t) {
        rep.dataset_ids.push_back(coll.datasets[t].id);
        rep.model_labels.push_back("w_" + coll.datasets[t].id);
    }
    rep.model_labels.push_back("w_vw");
    rep.model_labels.push_back("aggregate");
    rep.model_labels.push_back("independent");

    LsmModel vw;
    vw.weights = run.model.shared;
    for (int row = 0; row < t_count; ++row) {
        for (int col = 0; col < t_count; ++col)
            rep.ap(row, col) = model_ap(compose(run.model, col), test[row]);
        rep.ap(row, t_count) = model_ap(vw, test[row]);
        rep.ap(row, t_count + 1) = model_ap(aggregate, test[row]);
        rep.ap(row, t_count + 2) = model_ap(independent[row], test[row]);
    }
    for (int col = 0; col < rep.ap.cols(); ++col)
        rep.averages.push_back(rep.ap.col(col).mean());
    return rep;
}

UnseenReport run_unseen(const DatasetCollection& coll, int holdout, const MtlHyper& h,
                        const SgdConfig& cfg) {
    coll.validate();
    if (coll.num_datasets() < 2) throw ValidationError("run_unseen: need at least two datasets");
    if (holdout < 0 || holdout >= coll.num_datasets())
        throw ValidationError("run_unseen: holdout index out of range");

    DatasetCollection train;
    train.dim = coll.dim;
    for (int t = 0; t < coll.num_datasets(); ++t)
        if (t != holdout) train.datasets.push_back(coll.datasets[t]);
    const Dataset& held = coll.datasets[holdout];

    const DebiasRun run = train_debias(train, h, cfg, InitKind::KMeans);
    LsmModel vw;
    vw.weights = run.model.shared;

    const LsmModel aggregate = train_aggregate_lsm(train, h.c1 + h.c2, h.num_components, cfg);

    MtlHyper k1 = h;
    k1.num_components = 1;
    const DebiasRun k1_run = train_debias(train, k1, cfg, InitKind::KMeans);
    LsmModel k1_vw;
    k1_vw.weights = k1_run.model.shared;

    UnseenReport rep;
    rep.holdout_id = held.id;
    rep.ap_visual_world = model_ap(vw, held);
    rep.ap_aggregate = model_ap(aggregate, held);
    rep.ap_k1_visual_world = model_ap(k1_vw, held);
    rep.rel_improvement_vs_aggregate =
        rep.ap_aggregate > 0 ? 100.0 * (rep.ap_visual_world - rep.ap_aggregate) / rep.ap_aggregate
                             : 0.0;
    rep.rel_improvement_vs_k1 =
        rep.ap_k1_visual_world > 0
            ? 100.0 * (rep.ap_visual_world - rep.ap_k1_visual_world) / rep.ap_k1_visual_world
            : 0.0;
    return rep;
}

GridSpec GridSpec::paper_default() {
    GridSpec g;
    for (int r = -9; r <= 4; ++r) g.rho_exponents.push_back(r);
    for (double r = -9.0; r <= 4.0 + 1e-9; r += 0.5) g.c_exponents.push_back(r);
    for (int k = 1; k <= 10; ++k) g.k_values.push_back(k);
    return g;
}

GridResult grid_search(const DatasetCollection& coll, const GridSpec& grid, const SgdConfig& cfg,
                       const SplitSpec& split) {
    if (grid.rho_exponents.empty() || grid.c_exponents.empty() || grid.k_values.empty())
        throw ValidationError("grid_search: empty grid");
    coll.validate();

    DatasetCollection train;
    train.dim = coll.dim;
    std::vector<Dataset> val;
    SplitSpec per_split = split;
    for (int t = 0; t < coll.num_datasets(); ++t) {
        per_split.seed = split.seed + 31 * static_cast<std::uint64_t>(t);
        auto [tr, va] = split_train_val(coll.datasets[t], per_split);
        train.datasets.push_back(std::move(tr));
        val.push_back(std::move(va));
    }

    GridResult out;
    bool have = false;
    for (int k : grid.k_values) {
        for (double c1e : grid.c_exponents) {
            for (double c2e : grid.c_exponents) {
                for (int rhoe : grid.rho_exponents) {
                    MtlHyper h;
                    h.num_components = k;
                    h.c1 = std::pow(10.0, c1e);
                    h.c2 = std::pow(10.0, c2e);
                    h.rho = std::pow(10.0, rhoe);
                    const DebiasRun run = train_debias(train, h, cfg, InitKind::KMeans);
                    double mean_ap = 0.0;
                    for (int t = 0; t < train.num_datasets(); ++t)
                        mean_ap += model_ap(compose(run.model, t), val[t]);
                    mean_ap /= train.num_datasets();
                    GridCell cell{k, h.c1, h.c2, h.rho, mean_ap};
                    out.table.push_back(cell);
                    const bool better =
                        !have || cell.mean_val_ap > out.best.mean_val_ap ||
                        (cell.mean_val_ap == out.best.mean_val_ap &&
                         std::tie(cell.k, cell.rho, cell.c1, cell.c2) <
                             std::tie(out.best.k, out.best.rho, out.best.c1, out.best.c2));
                    if (better) {
                        out.best = cell;
                        have = true;
                    }
                }
            }
        }
    }
    return out;
}

} // namespace lsm
