#pragma once

#include "lsm/cluster_init.hpp"
#include "lsm/dataio.hpp"
#include "lsm/model.hpp"
#include "lsm/objective.hpp"
#include "lsm/optim.hpp"
#include "lsm/types.hpp"

#include <string>
#include <vector>

namespace lsm {

struct ApResult {
    double ap = 0.0;
    std::vector<double> precision; // at every rank position
    std::vector<double> recall;
};

// All-points average precision: rank by descending score (ties broken by
// ascending input index), average the precision at each positive's position.
ApResult average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

std::vector<double> model_scores(const LsmModel& m, const Dataset& data);
double model_ap(const LsmModel& m, const Dataset& data);

enum class InitKind { Zero, Random, KMeans };

struct DebiasRun {
    MultiTaskModel init;
    MultiTaskModel model;
    Trace trace;
};

// Full training pipeline: build the initial model (k-means clustering of the
// pooled positives followed by per-cluster subproblems, or a seeded random /
// zero start), then run the stochastic subgradient training.
DebiasRun train_debias(const DatasetCollection& coll, const MtlHyper& h, const SgdConfig& cfg,
                       InitKind init = InitKind::KMeans, double random_scale = 0.1);

// Single model trained on the concatenation of all datasets via the C1=0
// training path (bias vectors stay at zero); returns the shared vectors.
LsmModel train_aggregate_lsm(const DatasetCollection& coll, double c, int num_components,
                             const SgdConfig& cfg);

struct ProtocolReport {
    std::vector<std::string> dataset_ids;  // test rows
    std::vector<std::string> model_labels; // T biased models, then vw, aggregate, independent
    Mat ap;                                // rows: test dataset, cols: model
    std::vector<double> averages;          // per-column mean
};

// Seen-dataset protocol: split each dataset, train the multitask model on
// the train halves, and score every model on every dataset's held-out half.
ProtocolReport run_seen(const DatasetCollection& coll, const MtlHyper& h, const SgdConfig& cfg,
                        const SplitSpec& split);

struct UnseenReport {
    std::string holdout_id;
    double ap_visual_world = 0.0;
    double ap_aggregate = 0.0;
    double ap_k1_visual_world = 0.0;
    double rel_improvement_vs_aggregate = 0.0; // percent
    double rel_improvement_vs_k1 = 0.0;        // percent
};

// Leave-one-dataset-out protocol: train on the rest, score the shared
// (visual-world) model on the held-out dataset against the aggregate and
// single-component baselines.
UnseenReport run_unseen(const DatasetCollection& coll, int holdout, const MtlHyper& h,
                        const SgdConfig& cfg);

struct GridSpec {
    std::vector<int> rho_exponents;
    std::vector<double> c_exponents;
    std::vector<int> k_values;

    // rho = 10^r for r in -9..4 step 1; C1, C2 = 10^r for r in -9..4 step .5;
    // K in 1..10.
    static GridSpec paper_default();
    std::size_t size() const {
        return rho_exponents.size() * c_exponents.size() * c_exponents.size() * k_values.size();
    }
};

struct GridCell {
    int k = 0;
    double c1 = 0.0, c2 = 0.0, rho = 0.0;
    double mean_val_ap = 0.0;
};

struct GridResult {
    GridCell best;
    std::vector<GridCell> table;
};

// Exhaustive sweep; each cell trains on the 75% halves and scores the
// composed per-dataset classifiers on the 25% halves. Ties prefer smaller K,
// then smaller rho, then smaller C1, then smaller C2.
GridResult grid_search(const DatasetCollection& coll, const GridSpec& grid, const SgdConfig& cfg,
                       const SplitSpec& split);

} // namespace lsm
