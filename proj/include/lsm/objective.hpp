#pragma once

#include "lsm/dataio.hpp"
#include "lsm/model.hpp"
#include "lsm/types.hpp"

#include <vector>

namespace lsm {

// SumSq:   sum_k ||w_k||^2      (the popular training instance)
// MaxSq:   max_k ||w_k||^2      (evaporation-resistant variant)
// MaxNorm: max_k ||w_k||        (unsquared; used by the bound machinery)
enum class Regularizer { SumSq, MaxSq, MaxNorm };

struct LsmHyper {
    int num_components = 1;
    double lambda = 0.0;
    Regularizer reg = Regularizer::SumSq;
    bool neg_variant = false; // per-component negative error term
};

struct MtlHyper {
    int num_components = 1;
    double c1 = 1.0;
    double c2 = 1.0;
    double rho = 1.0;
    void validate() const;
};

// Inputs of the clustering-based bound: augmented cluster means, the
// per-positive assignment, cluster sizes, and epsilon = sum_i ||x_i - mu_{k_i}||.
struct BoundInputs {
    std::vector<Vec> means_aug;
    std::vector<int> assignment;
    std::vector<int> cluster_sizes;
    double epsilon = 0.0;

    int num_clusters() const { return static_cast<int>(means_aug.size()); }
    void validate(int num_positives) const;
};

double hinge(double z); // max(0, 1 - z)

double regularizer_value(Regularizer reg, const std::vector<Vec>& weights);
double max_component_norm(const std::vector<Vec>& weights);

// Full latent objective: positive losses take the best component per point,
// negative losses the worst (or every component under neg_variant).
double eval_E(const LsmModel& m, const Dataset& data, const LsmHyper& h);

// Fixed-assignment convex relaxation: positives are charged to their
// assigned component. partition[k] lists positive indices (into the
// dataset's positives, in encounter order) owned by component k.
double eval_F(const LsmModel& m, const Dataset& data,
              const std::vector<std::vector<int>>& partition, const LsmHyper& h);

// Convex surrogate anchored at the assigned cluster means:
//   sum_k p_k L(<w_k, mu_k>) + sum_neg L(-max_k <w_k, x>) + lambda * max_k ||w_k||
double eval_S(const LsmModel& m, const BoundInputs& bi,
              const std::vector<Vec>& negatives_aug, double lambda);

// Same surrogate but with the per-cluster best component at the mean,
//   sum_k p_k min_j L(<w_j, mu_k>) + ...
// This is the anchor the Lipschitz sandwich argument holds for.
double eval_S_min_anchor(const LsmModel& m, const BoundInputs& bi,
                         const std::vector<Vec>& negatives_aug, double lambda);

struct PinoGap {
    double lower;
    double middle; // sum over positives of min_k L(<w_k, x_i>)
    double upper;
};

// Sandwich of the positive error term around the cluster-mean anchor:
//   anchor -/+ epsilon * max_k ||w_k||  vs  sum_i min_k L(<w_k, x_i>)
// where anchor = sum_k p_k min_j L(<w_j, mu_k>). Holds for every model.
PinoGap pino_gap(const LsmModel& m, const BoundInputs& bi, const std::vector<Vec>& positives_aug);

// Multitask objective:
//   C1 sum_t sum_i L(y max_k <w0^k + v_t^k, x>) + C2 sum_t sum_i L(y max_k <w0^k, x>)
//   + sum_k (||w0^k||^2 + rho sum_t ||v_t^k||^2)
double eval_J(const MultiTaskModel& mt, const DatasetCollection& coll, const MtlHyper& h);

} // namespace lsm
