#pragma once

#include "lsm/dataio.hpp"
#include "lsm/model.hpp"
#include "lsm/objective.hpp"
#include "lsm/optim.hpp"
#include "lsm/types.hpp"

#include <cstdint>
#include <vector>

namespace lsm {

struct ClusterInit {
    Mat means; // K x d, one center per row
    std::vector<int> assignment;
    double distortion_sq = 0.0; // sum_i min_k ||x_i - mu_k||^2
    double epsilon = 0.0;       // sum_i ||x_i - mu_{k_i}||
    std::vector<double> lloyd_distortion; // per-iteration history of the winning run

    int num_clusters() const { return static_cast<int>(means.rows()); }
    std::vector<int> cluster_sizes() const;
    std::vector<std::vector<int>> partition() const;

    // Augmented means + epsilon packaged for the bound evaluators.
    BoundInputs bound_inputs() const;
};

// Lloyd iterations to convergence (assignment fixed point or 200 iterations),
// best of `restarts` seeded runs by squared distortion. Empty clusters are
// repaired by stealing the point farthest from its center. `warm_start`
// optionally adds one extra run seeded from the given centers.
ClusterInit kmeans(const std::vector<Vec>& points, int k, std::uint64_t seed, int restarts = 10,
                   const Mat* warm_start = nullptr);

// Alternating assignment / geometric-median updates (Weiszfeld, tol 1e-8,
// up to 500 inner iterations); selection across restarts by epsilon.
ClusterInit kmedians(const std::vector<Vec>& points, int k, std::uint64_t seed, int restarts = 10);

// Geometric median of a point set (Weiszfeld with a small distance floor).
Vec geometric_median(const std::vector<Vec>& points, double tol = 1e-8, int max_iters = 500);

// Background statistics for exemplar classifiers: negative mean and
// covariance plus a ridge that keeps the solve positive definite.
struct NegStats {
    Vec mean;
    Mat cov;
    double ridge = 0.0;

    // ML covariance of the negatives; ridge = ridge_scale * trace(cov)/d
    // (with an absolute floor for degenerate covariances).
    static NegStats estimate(const std::vector<Vec>& negatives, double ridge_scale = 1e-3);
};

// Solves (cov + ridge I) w = x_pos - mean for the per-exemplar classifier.
Vec exemplar_lda(const Vec& x_pos, const NegStats& stats);

// Partition produced by the similarity-based initializers.
struct PartitionInit {
    std::vector<int> assignment;
    std::vector<int> medoids;
    Mat similarity; // symmetric, unit diagonal after normalization
};

// Per-positive exemplar classifiers scored on all other positives; directed
// scores averaged into a symmetric similarity, distance 1 - sim/max(sim),
// then seeded k-medoids.
PartitionInit score_based_init(const std::vector<Vec>& positives, const NegStats& stats, int k,
                               std::uint64_t seed);

// Same pipeline but similarity = |top-N(i) intersect top-N(j)| / N over each
// exemplar's ranking of the other positives.
PartitionInit rank_based_init(const std::vector<Vec>& positives, const NegStats& stats, int k,
                              int n_top, std::uint64_t seed);

// One SVM per cluster (cluster positives vs all negatives), stacked.
LsmModel init_lsm_from_clusters(const ClusterInit& ci, const Dataset& data, const LsmHyper& h,
                                const SgdConfig& cfg);

// Per cluster, solves the K=1 multitask problem on the cluster's positives
// plus every dataset's negatives, and assembles the component vectors.
MultiTaskModel init_mtl_from_clusters(const ClusterInit& ci, const DatasetCollection& coll,
                                      const MtlHyper& h, const SgdConfig& cfg);

struct BoundReport {
    int k = 0;
    double lambda = 0.0;
    double epsilon = 0.0;
    double lambda_prime = 0.0;       // lambda - 2 epsilon
    bool lambda_prime_positive = true;
    double f_opt = 0.0;              // optimized F_{K,lambda}
    double f_prime_opt = 0.0;        // optimized F_{K,lambda-2eps} (NaN if lambda' <= 0)
    double e_at_minimizer = 0.0;     // E_{K,lambda} at the F minimizer
    bool chain_ok = false;           // f_prime_opt <= e_at_minimizer <= f_opt + tol
    int pointwise_draws = 0;
    int pointwise_violations = 0;
    LsmModel minimizer;
};

// Runs k-means, optimizes the two convex fixed-assignment objectives, and
// verifies the optimized chain plus the pointwise sandwich on random models.
BoundReport check_bound(const Dataset& data, int k, double lambda, std::uint64_t seed,
                        int pointwise_draws = 1000, const SgdConfig* cfg = nullptr);

} // namespace lsm
