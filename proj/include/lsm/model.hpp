#pragma once

#include "lsm/types.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace lsm {

// K linear subclassifiers over augmented inputs (x, 1); the last weight
// component is the folded bias. A point is positive when any component
// scores strictly above zero.
struct LsmModel {
    std::vector<Vec> weights; // K vectors of size d+1

    int num_components() const { return static_cast<int>(weights.size()); }
    Eigen::Index dim() const { return weights.empty() ? 0 : weights.front().size(); }
    void validate() const;
};

// Shared component vectors w0^k plus per-dataset bias vectors v_t^k.
// The classifier of dataset t, component k is w0^k + v_t^k.
struct MultiTaskModel {
    std::vector<Vec> shared;            // K vectors of size d+1
    std::vector<std::vector<Vec>> bias; // T x K vectors of size d+1

    int num_components() const { return static_cast<int>(shared.size()); }
    int num_datasets() const { return static_cast<int>(bias.size()); }
    Eigen::Index dim() const { return shared.empty() ? 0 : shared.front().size(); }
    void validate() const;

    static MultiTaskModel zeros(int num_components, int num_datasets, Eigen::Index aug_dim);
};

// (x, 1)
Vec augmented(const Vec& x);

struct ScoreResult {
    double value;
    int component; // argmax index, lowest on ties
};

ScoreResult score(const LsmModel& m, const Vec& x_aug);
int predict(const LsmModel& m, const Vec& x_aug); // +1 iff score > 0

LsmModel compose(const MultiTaskModel& mt, int t);

// Partition of positive indices by argmax component (lowest index on ties).
std::vector<std::vector<int>> assign_clusters(const LsmModel& m, const std::vector<Vec>& positives_aug);

// Text model file: header `K T d`, then the K shared vectors, then for each
// dataset t the K bias vectors, one vector per line with round-trip decimal
// precision. T=0 marks a plain single-dataset model.
struct ModelFile {
    LsmModel lsm;                       // shared part (or the whole model when T=0)
    std::optional<MultiTaskModel> multitask;
};

void save_model(const LsmModel& m, const std::filesystem::path& file);
void save_model(const MultiTaskModel& m, const std::filesystem::path& file);
ModelFile load_model(const std::filesystem::path& file);

} // namespace lsm
