#pragma once

#include "lsm/dataio.hpp"
#include "lsm/model.hpp"
#include "lsm/objective.hpp"
#include "lsm/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace lsm {

struct SgdConfig {
    int epochs = 100;
    double eta0 = 1.0;
    std::uint64_t seed = 0;
    double tol_weight_change = 1e-6;
    int cooldown_len = 5;
    bool cooldown_enabled = true;
    bool dataset_uniform_sampling = false; // default: uniform over the pooled examples
    void validate() const;
};

struct TraceRecord {
    int epoch;
    double objective;
    double max_weight_change;
    long skipped;
};
using Trace = std::vector<TraceRecord>;

struct LsmTraceRecord {
    int outer;
    double f_value;
    double e_value;
    int reassigned; // positives that changed component this outer iteration
};
using LsmTrace = std::vector<LsmTraceRecord>;

// Pegasos-style solver for hinge loss with an L2 penalty: step 1/(lambda t),
// projection onto the 1/sqrt(lambda) ball, weights averaged over the final
// epoch. Inputs are augmented vectors.
Vec train_svm(const std::vector<Vec>& pos_aug, const std::vector<Vec>& neg_aug,
              double lambda, const SgdConfig& cfg);

// Subgradient of the multitask objective at one sampled example (t, x, y),
// following the four-way case split on the two argmax components and their
// margins. d_bias applies to the sampled dataset's bias vectors only.
struct MtlSubgrad {
    std::vector<Vec> d_shared;
    std::vector<Vec> d_bias;
};
MtlSubgrad subgrad_J(const MultiTaskModel& mt, const Vec& x_aug, int y, int t, const MtlHyper& h);

// Stochastic subgradient training of the multitask objective with the
// cooldown cache. Returns the final model and a per-epoch trace of the full
// objective.
std::pair<MultiTaskModel, Trace> train_mtl(const DatasetCollection& coll, const MtlHyper& h,
                                           MultiTaskModel init, const SgdConfig& cfg);

// Minimizes the convex fixed-assignment objective F over the weights by
// seeded SGD, returning the best iterate seen (by exact objective value).
// When given, objective_history receives the end-of-epoch F values.
LsmModel minimize_F(const Dataset& data, const std::vector<std::vector<int>>& partition,
                    const LsmHyper& h, LsmModel init, const SgdConfig& cfg,
                    std::vector<double>* objective_history = nullptr);

// Alternating minimization: reassign positives by argmax, then minimize the
// convex F (per-cluster SVMs under the neg_variant error term, otherwise SGD
// on F). A weight update is kept only if it does not increase F, so the
// traced objective is nonincreasing. Stops when the assignment is stable.
std::pair<LsmModel, LsmTrace> train_lsm_alternating(const Dataset& data, const LsmHyper& h,
                                                    LsmModel init, int max_outer,
                                                    const SgdConfig& cfg);

} // namespace lsm
