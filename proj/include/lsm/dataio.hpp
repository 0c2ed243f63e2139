#pragma once

#include "lsm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace lsm {

struct LabeledExample {
    Vec features; // dimension d, all finite
    int label;    // +1 or -1
};

struct Dataset {
    std::string id;
    std::vector<LabeledExample> examples;

    Eigen::Index dim() const { return examples.empty() ? 0 : examples.front().features.size(); }
    int num_positives() const;
    int num_negatives() const;

    // Checks the training invariants: nonempty, uniform dimension,
    // at least one example of each label.
    void validate_for_training() const;
};

// Ordered list of datasets sharing one feature dimension.
struct DatasetCollection {
    std::vector<Dataset> datasets;
    Eigen::Index dim = 0;

    int num_datasets() const { return static_cast<int>(datasets.size()); }
    std::size_t total_examples() const;
    void validate() const;
};

struct SplitSpec {
    double train_fraction = 0.75;
    std::uint64_t seed = 0;
};

struct SynthConfig {
    int num_datasets = 3;   // T
    int num_clusters = 2;   // true number of positive clusters
    int dim = 4;
    int pos_per_cluster = 50;
    int neg_per_dataset = 100;
    double separation = 4.0;  // distance scale of cluster centers from origin
    double bias_shift = 0.0;  // pairwise distance between positive-only shift vectors
    double common_shift = 0.0; // whole-dataset capture shift (both classes)
    double noise = 0.5;       // cluster noise scale
    double neg_scale = 1.0;   // background negative scale
    std::uint64_t seed = 0;
};

// Loads every *.ds file under `dir` (sorted lexicographically by filename).
// Format: one example per line, `<label> <index>:<value> ...`, 1-based
// indices, `#` starts a comment, optional `#dim <D>` header per file.
// The collection dimension is the max declared/seen index across all files;
// shorter vectors are zero padded.
DatasetCollection load_collection(const std::filesystem::path& dir);

// Parses a single dataset file. The dataset id is the file stem.
Dataset load_dataset_file(const std::filesystem::path& file);

// Writes `<id>.ds` per dataset into `dir` (created if missing), with a
// `#dim` header so that load(save(c)) round-trips exactly.
void save_collection(const DatasetCollection& coll, const std::filesystem::path& dir);
void save_dataset_file(const Dataset& ds, Eigen::Index dim, const std::filesystem::path& file);

// Stratified split: round(train_fraction * n) per label class goes to the
// first returned dataset, the rest to the second. Deterministic given seed.
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec);

// Synthesizes T biased datasets: positives are drawn around `num_clusters`
// shared cluster centers, each dataset displacing all its positive centers
// by a dataset specific shift vector; negatives come from a background
// Gaussian at the origin. Shift vectors sit at the vertices of a regular
// simplex scaled so that any two datasets' shifts are exactly `bias_shift`
// apart (requires dim >= num_datasets when bias_shift > 0).
DatasetCollection synth_biased_collection(const SynthConfig& cfg);

} // namespace lsm
