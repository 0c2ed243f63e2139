#include "lsm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsm {

void MtlHyper::validate() const {
    if (num_components < 1) throw ValidationError("K must be >= 1");
    if (c1 < 0 || c2 < 0 || rho < 0) throw ValidationError("C1, C2, rho must be nonnegative");
}

void BoundInputs::validate(int num_positives) const {
    if (means_aug.empty()) throw ValidationError("bound inputs: no cluster means");
    if (static_cast<int>(assignment.size()) != num_positives)
        throw ValidationError("bound inputs: assignment size mismatch");
    if (static_cast<int>(cluster_sizes.size()) != num_clusters())
        throw ValidationError("bound inputs: cluster size list mismatch");
    int total = 0;
    for (int p : cluster_sizes) total += p;
    if (total != num_positives)
        throw ValidationError("bound inputs: cluster sizes do not sum to the number of positives");
    if (epsilon < 0) throw ValidationError("bound inputs: negative epsilon");
}

double hinge(double z) { return std::max(0.0, 1.0 - z); }

double max_component_norm(const std::vector<Vec>& weights) {
    double m = 0.0;
    for (const auto& w : weights) m = std::max(m, w.norm());
    return m;
}

double regularizer_value(Regularizer reg, const std::vector<Vec>& weights) {
    switch (reg) {
    case Regularizer::SumSq: {
        double s = 0.0;
        for (const auto& w : weights) s += w.squaredNorm();
        return s;
    }
    case Regularizer::MaxSq: {
        double m = 0.0;
        for (const auto& w : weights) m = std::max(m, w.squaredNorm());
        return m;
    }
    case Regularizer::MaxNorm:
        return max_component_norm(weights);
    }
    throw ValidationError("unknown regularizer");
}

namespace {

double best_score(const LsmModel& m, const Vec& x_aug) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& w : m.weights) best = std::max(best, w.dot(x_aug));
    return best;
}

} // namespace

double eval_E(const LsmModel& m, const Dataset& data, const LsmHyper& h) {
    double pos_term = 0.0, neg_term = 0.0;
    for (const auto& e : data.examples) {
        const Vec x = augmented(e.features);
        if (m.dim() != x.size()) throw ValidationError("eval_E: dimension mismatch");
        if (e.label > 0) {
            pos_term += hinge(best_score(m, x));
        } else if (h.neg_variant) {
            for (const auto& w : m.weights) neg_term += hinge(-w.dot(x));
        } else {
            neg_term += hinge(-best_score(m, x));
        }
    }
    return pos_term + neg_term + h.lambda * regularizer_value(h.reg, m.weights);
}

double eval_F(const LsmModel& m, const Dataset& data,
              const std::vector<std::vector<int>>& partition, const LsmHyper& h) {
    std::vector<int> pos_indices;
    for (int i = 0; i < static_cast<int>(data.examples.size()); ++i)
        if (data.examples[i].label > 0) pos_indices.push_back(i);

    if (static_cast<int>(partition.size()) != m.num_components())
        throw ValidationError("eval_F: partition does not match component count");
    // owner[p] = component owning the p-th positive; must be a partition
    std::vector<int> owner(pos_indices.size(), -1);
    for (int k = 0; k < static_cast<int>(partition.size()); ++k) {
        for (int p : partition[k]) {
            if (p < 0 || p >= static_cast<int>(owner.size()) || owner[p] != -1)
                throw ValidationError("eval_F: assignment is not a partition of the positives");
            owner[p] = k;
        }
    }
    for (int o : owner)
        if (o < 0) throw ValidationError("eval_F: assignment is not exhaustive");

    double pos_term = 0.0, neg_term = 0.0;
    int p = 0;
    for (const auto& e : data.examples) {
        const Vec x = augmented(e.features);
        if (m.dim() != x.size()) throw ValidationError("eval_F: dimension mismatch");
        if (e.label > 0) {
            pos_term += hinge(m.weights[owner[p]].dot(x));
            ++p;
        } else if (h.neg_variant) {
            for (const auto& w : m.weights) neg_term += hinge(-w.dot(x));
        } else {
            neg_term += hinge(-best_score(m, x));
        }
    }
    return pos_term + neg_term + h.lambda * regularizer_value(h.reg, m.weights);
}

namespace {

double surrogate(const LsmModel& m, const BoundInputs& bi,
                 const std::vector<Vec>& negatives_aug, double lambda, bool min_anchor) {
    if (m.num_components() != bi.num_clusters())
        throw ValidationError("surrogate: model components != clusters");
    double val = 0.0;
    for (int k = 0; k < bi.num_clusters(); ++k) {
        if (bi.means_aug[k].size() != m.dim())
            throw ValidationError("surrogate: dimension mismatch");
        double loss;
        if (min_anchor) {
            loss = std::numeric_limits<double>::infinity();
            for (const auto& w : m.weights) loss = std::min(loss, hinge(w.dot(bi.means_aug[k])));
        } else {
            loss = hinge(m.weights[k].dot(bi.means_aug[k]));
        }
        val += bi.cluster_sizes[k] * loss;
    }
    for (const auto& x : negatives_aug) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& w : m.weights) {
            if (w.size() != x.size()) throw ValidationError("surrogate: dimension mismatch");
            best = std::max(best, w.dot(x));
        }
        val += hinge(-best);
    }
    return val + lambda * max_component_norm(m.weights);
}

} // namespace

double eval_S(const LsmModel& m, const BoundInputs& bi,
              const std::vector<Vec>& negatives_aug, double lambda) {
    return surrogate(m, bi, negatives_aug, lambda, /*min_anchor=*/false);
}

double eval_S_min_anchor(const LsmModel& m, const BoundInputs& bi,
                         const std::vector<Vec>& negatives_aug, double lambda) {
    return surrogate(m, bi, negatives_aug, lambda, /*min_anchor=*/true);
}

PinoGap pino_gap(const LsmModel& m, const BoundInputs& bi, const std::vector<Vec>& positives_aug) {
    bi.validate(static_cast<int>(positives_aug.size()));
    double anchor = 0.0;
    for (int k = 0; k < bi.num_clusters(); ++k) {
        double loss = std::numeric_limits<double>::infinity();
        for (const auto& w : m.weights) {
            if (w.size() != bi.means_aug[k].size())
                throw ValidationError("pino_gap: dimension mismatch");
            loss = std::min(loss, hinge(w.dot(bi.means_aug[k])));
        }
        anchor += bi.cluster_sizes[k] * loss;
    }
    double middle = 0.0;
    for (const auto& x : positives_aug) {
        double loss = std::numeric_limits<double>::infinity();
        for (const auto& w : m.weights) loss = std::min(loss, hinge(w.dot(x)));
        middle += loss;
    }
    const double spread = bi.epsilon * max_component_norm(m.weights);
    return {anchor - spread, middle, anchor + spread};
}

double eval_J(const MultiTaskModel& mt, const DatasetCollection& coll, const MtlHyper& h) {
    h.validate();
    if (mt.num_datasets() != coll.num_datasets())
        throw ValidationError("eval_J: dataset count mismatch");
    double fit_biased = 0.0, fit_shared = 0.0;
    for (int t = 0; t < coll.num_datasets(); ++t) {
        const LsmModel composed = compose(mt, t);
        LsmModel shared_only{mt.shared};
        for (const auto& e : coll.datasets[t].examples) {
            const Vec x = augmented(e.features);
            if (x.size() != mt.dim()) throw ValidationError("eval_J: dimension mismatch");
            fit_biased += hinge(e.label * best_score(composed, x));
            fit_shared += hinge(e.label * best_score(shared_only, x));
        }
    }
    double reg = 0.0;
    for (int k = 0; k < mt.num_components(); ++k) {
        reg += mt.shared[k].squaredNorm();
        double bias_sq = 0.0;
        for (int t = 0; t < mt.num_datasets(); ++t) bias_sq += mt.bias[t][k].squaredNorm();
        reg += h.rho * bias_sq;
    }
    return h.c1 * fit_biased + h.c2 * fit_shared + reg;
}

} // namespace lsm
