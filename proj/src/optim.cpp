#include "lsm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lsm {

void SgdConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (!(eta0 > 0)) throw ValidationError("eta0 must be positive");
    if (cooldown_len < 0) throw ValidationError("cooldown_len must be nonnegative");
    if (!(tol_weight_change >= 0)) throw ValidationError("tol_weight_change must be nonnegative");
}

namespace {

struct AugmentedData {
    std::vector<Vec> pos;
    std::vector<Vec> neg;
};

AugmentedData augment_dataset(const Dataset& ds) {
    AugmentedData out;
    for (const auto& e : ds.examples)
        (e.label > 0 ? out.pos : out.neg).push_back(augmented(e.features));
    return out;
}

int argmax_component(const std::vector<Vec>& weights, const Vec& x) {
    int best = 0;
    double best_val = weights[0].dot(x);
    for (int k = 1; k < static_cast<int>(weights.size()); ++k) {
        const double v = weights[k].dot(x);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    return best;
}

double max_abs_change(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
    return m;
}

} // namespace

Vec train_svm(const std::vector<Vec>& pos_aug, const std::vector<Vec>& neg_aug,
              double lambda, const SgdConfig& cfg) {
    cfg.validate();
    if (pos_aug.empty() || neg_aug.empty())
        throw ValidationError("train_svm: both classes must be nonempty");
    if (lambda < 0) throw ValidationError("train_svm: lambda must be nonnegative");

    const Eigen::Index dim = pos_aug.front().size();
    const std::size_t m = pos_aug.size() + neg_aug.size();
    Vec w = Vec::Zero(dim);
    Vec tail_sum = Vec::Zero(dim);
    std::size_t tail_count = 0;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    const double radius = lambda > 0 ? 1.0 / std::sqrt(lambda) : 0.0;
    const std::size_t total_steps = static_cast<std::size_t>(cfg.epochs) * m;

    for (std::size_t step = 1; step <= total_steps; ++step) {
        const std::size_t idx = pick(rng);
        const bool is_pos = idx < pos_aug.size();
        const Vec& x = is_pos ? pos_aug[idx] : neg_aug[idx - pos_aug.size()];
        const double y = is_pos ? 1.0 : -1.0;
        const double eta = lambda > 0 ? 1.0 / (lambda * static_cast<double>(step))
                                      : cfg.eta0 / std::sqrt(static_cast<double>(step));
        if (lambda > 0) w *= std::max(0.0, 1.0 - eta * lambda);
        if (y * w.dot(x) < 1.0) w += eta * y * x;
        if (lambda > 0) {
            const double n = w.norm();
            if (n > radius) w *= radius / n;
        }
        if (total_steps - step < m) {
            tail_sum += w;
            ++tail_count;
        }
    }
    return tail_sum / static_cast<double>(tail_count);
}

namespace {

// Case analysis shared by subgrad_J and the SGD update: which data terms are
// active for each component at the sampled example.
struct Algo1Active {
    int argmax_shared;
    int argmax_biased;
    bool shared_margin; // y <w0^a0, x> <= 1
    bool biased_margin; // y <w0^a1 + v_t^a1, x> <= 1
};

Algo1Active algo1_cases(const MultiTaskModel& mt, const Vec& x, int y, int t) {
    if (t < 0 || t >= mt.num_datasets())
        throw ValidationError("subgrad_J: dataset index out of range");
    if (x.size() != mt.dim()) throw ValidationError("subgrad_J: dimension mismatch");
    Algo1Active a{};
    a.argmax_shared = argmax_component(mt.shared, x);
    int best = 0;
    double best_val = (mt.shared[0] + mt.bias[t][0]).dot(x);
    for (int k = 1; k < mt.num_components(); ++k) {
        const double v = (mt.shared[k] + mt.bias[t][k]).dot(x);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    a.argmax_biased = best;
    a.shared_margin = y * mt.shared[a.argmax_shared].dot(x) <= 1.0;
    a.biased_margin = y * best_val <= 1.0;
    return a;
}

// Data part of the shared-vector subgradient for component k (regularizer
// term w0^k excluded): 0, -C1 y x, -C2 y x or -(C1+C2) y x.
double shared_data_coeff(const Algo1Active& a, int k, const MtlHyper& h) {
    const bool at_shared = (k == a.argmax_shared) && a.shared_margin;
    const bool at_biased = (k == a.argmax_biased) && a.biased_margin;
    if (at_shared && at_biased) return h.c1 + h.c2;
    if (at_shared) return h.c2;
    if (at_biased) return h.c1;
    return 0.0;
}

bool bias_data_active(const Algo1Active& a, int k) {
    return k == a.argmax_biased && a.biased_margin;
}

} // namespace

MtlSubgrad subgrad_J(const MultiTaskModel& mt, const Vec& x_aug, int y, int t, const MtlHyper& h) {
    const Algo1Active a = algo1_cases(mt, x_aug, y, t);
    MtlSubgrad g;
    g.d_shared.reserve(mt.num_components());
    g.d_bias.reserve(mt.num_components());
    for (int k = 0; k < mt.num_components(); ++k) {
        const double c = shared_data_coeff(a, k, h);
        g.d_shared.push_back(mt.shared[k] - c * y * x_aug);
        Vec dv = h.rho * mt.bias[t][k];
        if (bias_data_active(a, k)) dv -= h.c1 * y * x_aug;
        g.d_bias.push_back(std::move(dv));
    }
    return g;
}

std::pair<MultiTaskModel, Trace> train_mtl(const DatasetCollection& coll, const MtlHyper& h,
                                           MultiTaskModel init, const SgdConfig& cfg) {
    cfg.validate();
    h.validate();
    init.validate();
    if (init.num_datasets() != coll.num_datasets())
        throw ValidationError("train_mtl: init dataset count mismatch");
    if (init.dim() != coll.dim + 1)
        throw ValidationError("train_mtl: init dimension mismatch");

    struct Sample {
        int t;
        Vec x;
        int y;
    };
    std::vector<Sample> samples;
    std::vector<std::size_t> dataset_offset(coll.num_datasets(), 0);
    for (int t = 0; t < coll.num_datasets(); ++t) {
        dataset_offset[t] = samples.size();
        for (const auto& e : coll.datasets[t].examples)
            samples.push_back({t, augmented(e.features), e.label});
    }
    if (samples.empty()) throw ValidationError("train_mtl: empty collection");

    MultiTaskModel mt = std::move(init);
    const int K = mt.num_components();
    const std::size_t m_total = samples.size();
    // Step size decay is tied to the smallest active regularization
    // coefficient (1 for the shared vectors, rho for the bias vectors).
    const double sigma = h.rho > 0 ? std::min(1.0, h.rho) : 1.0;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick_flat(0, m_total - 1);
    std::uniform_int_distribution<int> pick_dataset(0, coll.num_datasets() - 1);

    std::vector<int> cooldown(m_total, 0);
    Trace trace;
    std::size_t n = 0; // global step counter

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<Vec> shared_before = mt.shared;
        std::vector<std::vector<Vec>> bias_before = mt.bias;
        long skipped = 0;

        for (std::size_t s = 0; s < m_total; ++s, ++n) {
            std::size_t idx;
            if (cfg.dataset_uniform_sampling) {
                const int t = pick_dataset(rng);
                std::uniform_int_distribution<std::size_t> pick_in(
                    0, coll.datasets[t].examples.size() - 1);
                idx = dataset_offset[t] + pick_in(rng);
            } else {
                idx = pick_flat(rng);
            }
            const Sample& sm = samples[idx];
            const double eta = cfg.eta0 / (1.0 + static_cast<double>(n) * cfg.eta0 * sigma);
            if (cfg.cooldown_enabled && cooldown[idx] > 0) {
                // skip the data terms; a cooled-down point contributes only
                // its regularizer step, which stays applied
                --cooldown[idx];
                ++skipped;
                const double sd = std::max(0.0, 1.0 - eta);
                const double bd = std::max(0.0, 1.0 - eta * h.rho);
                for (int k = 0; k < K; ++k) {
                    mt.shared[k] *= sd;
                    mt.bias[sm.t][k] *= bd;
                }
                continue;
            }

            if (cfg.cooldown_enabled && cfg.cooldown_len > 0) {
                // a pair counts when both its classifiers place the point
                // outside the margin, i.e. with zero hinge loss
                int pairs_correct = 0;
                for (int k = 0; k < K; ++k) {
                    const double s0 = sm.y * mt.shared[k].dot(sm.x);
                    const double s1 = sm.y * (mt.shared[k] + mt.bias[sm.t][k]).dot(sm.x);
                    if (s0 >= 1.0 && s1 >= 1.0) ++pairs_correct;
                }
                if (pairs_correct >= std::min(2, K)) cooldown[idx] = cfg.cooldown_len;
            }

            const Algo1Active a = algo1_cases(mt, sm.x, sm.y, sm.t);
            const double shared_decay = std::max(0.0, 1.0 - eta);
            const double bias_decay = std::max(0.0, 1.0 - eta * h.rho);
            for (int k = 0; k < K; ++k) {
                const double c = shared_data_coeff(a, k, h);
                mt.shared[k] *= shared_decay;
                if (c != 0.0) mt.shared[k] += eta * c * sm.y * sm.x;
                Vec& v = mt.bias[sm.t][k];
                v *= bias_decay;
                if (bias_data_active(a, k)) v += eta * h.c1 * sm.y * sm.x;
            }
        }

        double change = max_abs_change(mt.shared, shared_before);
        for (int t = 0; t < mt.num_datasets(); ++t)
            change = std::max(change, max_abs_change(mt.bias[t], bias_before[t]));
        trace.push_back({epoch, eval_J(mt, coll, h), change, skipped});
        if (change < cfg.tol_weight_change) break;
    }
    return {std::move(mt), std::move(trace)};
}

namespace {

struct FExample {
    Vec x;
    bool positive;
    int owner; // owning component for positives, -1 for negatives
};

std::vector<FExample> build_f_examples(const Dataset& data,
                                       const std::vector<std::vector<int>>& partition,
                                       int num_components) {
    std::vector<int> owner_of_positive;
    {
        int npos = 0;
        for (const auto& e : data.examples) npos += (e.label > 0);
        owner_of_positive.assign(npos, -1);
    }
    if (static_cast<int>(partition.size()) != num_components)
        throw ValidationError("minimize_F: partition size mismatch");
    for (int k = 0; k < num_components; ++k)
        for (int p : partition[k]) {
            if (p < 0 || p >= static_cast<int>(owner_of_positive.size()) ||
                owner_of_positive[p] != -1)
                throw ValidationError("minimize_F: invalid partition");
            owner_of_positive[p] = k;
        }
    for (int o : owner_of_positive)
        if (o < 0) throw ValidationError("minimize_F: partition not exhaustive");

    std::vector<FExample> out;
    int p = 0;
    for (const auto& e : data.examples) {
        FExample fe{augmented(e.features), e.label > 0, -1};
        if (fe.positive) fe.owner = owner_of_positive[p++];
        out.push_back(std::move(fe));
    }
    return out;
}

int argmax_norm_component(const std::vector<Vec>& weights) {
    int best = 0;
    double best_norm = weights[0].norm();
    for (int k = 1; k < static_cast<int>(weights.size()); ++k) {
        const double n = weights[k].norm();
        if (n > best_norm) {
            best_norm = n;
            best = k;
        }
    }
    return best;
}

} // namespace

LsmModel minimize_F(const Dataset& data, const std::vector<std::vector<int>>& partition,
                    const LsmHyper& h, LsmModel init, const SgdConfig& cfg,
                    std::vector<double>* objective_history) {
    cfg.validate();
    init.validate();
    const int K = init.num_components();
    const auto examples = build_f_examples(data, partition, K);
    const std::size_t m = examples.size();
    if (m == 0) throw ValidationError("minimize_F: empty dataset");

    LsmModel w = std::move(init);
    LsmModel best = w;
    double best_f = eval_F(best, data, partition, h);

    // Per-sample regularizer weight so that the stochastic objective matches
    // (1/m) F; sum_sq is strongly convex, the max regularizers get sqrt decay.
    const double reg_per_sample = h.lambda / static_cast<double>(m);
    const double sigma = (h.reg == Regularizer::SumSq && h.lambda > 0) ? 2.0 * reg_per_sample : 0.0;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::size_t n = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t s = 0; s < m; ++s, ++n) {
            const FExample& e = examples[pick(rng)];
            const double eta = sigma > 0
                                   ? cfg.eta0 / (1.0 + static_cast<double>(n) * cfg.eta0 * sigma)
                                   : cfg.eta0 / std::sqrt(static_cast<double>(n + 1));
            // regularizer subgradient
            switch (h.reg) {
            case Regularizer::SumSq: {
                const double decay = std::max(0.0, 1.0 - eta * 2.0 * reg_per_sample);
                for (auto& wk : w.weights) wk *= decay;
                break;
            }
            case Regularizer::MaxSq: {
                const int j = argmax_norm_component(w.weights);
                w.weights[j] *= std::max(0.0, 1.0 - eta * 2.0 * reg_per_sample);
                break;
            }
            case Regularizer::MaxNorm: {
                const int j = argmax_norm_component(w.weights);
                const double nj = w.weights[j].norm();
                if (nj > 0) w.weights[j] -= eta * reg_per_sample / nj * w.weights[j];
                break;
            }
            }
            // data subgradient
            if (e.positive) {
                if (w.weights[e.owner].dot(e.x) <= 1.0) w.weights[e.owner] += eta * e.x;
            } else if (h.neg_variant) {
                for (auto& wk : w.weights)
                    if (wk.dot(e.x) >= -1.0) wk -= eta * e.x;
            } else {
                const int j = argmax_component(w.weights, e.x);
                if (w.weights[j].dot(e.x) >= -1.0) w.weights[j] -= eta * e.x;
            }
        }
        const double f = eval_F(w, data, partition, h);
        if (objective_history) objective_history->push_back(f);
        if (f < best_f) {
            best_f = f;
            best = w;
        }
    }
    return best;
}

std::pair<LsmModel, LsmTrace> train_lsm_alternating(const Dataset& data, const LsmHyper& h,
                                                    LsmModel init, int max_outer,
                                                    const SgdConfig& cfg) {
    init.validate();
    data.validate_for_training();
    if (max_outer < 1) throw ValidationError("max_outer must be >= 1");

    const AugmentedData aug = augment_dataset(data);
    LsmModel model = std::move(init);
    LsmTrace trace;
    std::vector<int> prev_owner;

    for (int outer = 0; outer < max_outer; ++outer) {
        const auto partition = assign_clusters(model, aug.pos);
        std::vector<int> owner(aug.pos.size(), -1);
        for (int k = 0; k < static_cast<int>(partition.size()); ++k)
            for (int p : partition[k]) owner[p] = k;
        int reassigned = 0;
        if (!prev_owner.empty())
            for (std::size_t i = 0; i < owner.size(); ++i) reassigned += owner[i] != prev_owner[i];

        LsmModel candidate;
        if (h.neg_variant && h.reg == Regularizer::SumSq) {
            // the per-component negative term decouples the problem into K SVMs
            candidate.weights.reserve(partition.size());
            SgdConfig sub = cfg;
            for (int k = 0; k < static_cast<int>(partition.size()); ++k) {
                sub.seed = cfg.seed;
                if (partition[k].empty()) {
                    candidate.weights.push_back(model.weights[k]);
                    continue;
                }
                std::vector<Vec> cluster_pos;
                for (int p : partition[k]) cluster_pos.push_back(aug.pos[p]);
                candidate.weights.push_back(train_svm(cluster_pos, aug.neg, h.lambda, sub));
            }
        } else {
            candidate = minimize_F(data, partition, h, model, cfg);
        }

        // keep the update only if the convex step did not increase F
        if (eval_F(candidate, data, partition, h) <= eval_F(model, data, partition, h))
            model = std::move(candidate);

        trace.push_back({outer, eval_F(model, data, partition, h), eval_E(model, data, h),
                         reassigned});

        const auto next_partition = assign_clusters(model, aug.pos);
        std::vector<int> next_owner(aug.pos.size(), -1);
        for (int k = 0; k < static_cast<int>(next_partition.size()); ++k)
            for (int p : next_partition[k]) next_owner[p] = k;
        prev_owner = owner;
        if (next_owner == owner) break;
    }
    return {std::move(model), std::move(trace)};
}

} // namespace lsm
