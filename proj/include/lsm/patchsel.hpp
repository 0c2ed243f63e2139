#pragma once

#include "lsm/optim.hpp"
#include "lsm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lsm {

struct Box {
    double x = 0.0, y = 0.0; // top-left
    double w = 0.0, h = 0.0; // positive extents
    double area() const { return w * h; }
    void validate() const;
};

// A patch is an appearance model plus its expected position relative to the
// object box, in object-normalized coordinates.
struct PatchModel {
    std::string id;
    Vec weights;
    Box rel_pos; // x, y in [0,1], w, h in (0,1]
    void validate() const;
};

struct Candidate {
    Vec features;
    Box box;
};

// Abstract detection record: one image's object box and the candidate patch
// placements inside it.
struct DetectionRecord {
    std::string image_id;
    Box object_box;
    std::vector<Candidate> candidates;
    void validate() const;
};

struct PatchScores {
    double appearance = 0.0; // best candidate response
    double spatial = 0.0;    // IoU of that candidate with the expected placement
    double combined = 0.0;   // appearance + spatial (unnormalized)
    int best_candidate = 0;
};

double iou(const Box& a, const Box& b);

// Expected absolute placement of a patch inside an object box.
Box project_rel_pos(const Box& rel, const Box& object_box);

PatchScores patch_score(const DetectionRecord& rec, const PatchModel& p);

// Mean over the records of (normalized appearance + spatial). Appearance is
// min-max normalized per patch across the record set; a degenerate range
// (all appearances equal) is left unnormalized.
double representation_measure(const PatchModel& p, const std::vector<DetectionRecord>& recs);

// Normalized median retrieval rank of the positive records within the mixed
// positive + negative set, ranked by the combined score (descending, ties by
// input order, positives listed first). Lower is better.
double discrimination_measure(const PatchModel& p, const std::vector<DetectionRecord>& pos_recs,
                              const std::vector<DetectionRecord>& neg_recs);

struct RankedPatch {
    int pool_index = 0;
    double rep = 0.0;
    double disc = 0.0;
    double score = 0.0; // rep - disc, equal weights
};

// Top-n patches by rep - disc (ties keep pool order). Returns all pool
// entries ranked; the first n are the selection.
std::vector<RankedPatch> select_patches(const std::vector<PatchModel>& pool,
                                        const std::vector<DetectionRecord>& pos_recs,
                                        const std::vector<DetectionRecord>& neg_recs, int n);

struct CalibrationModel {
    Vec weights; // one weight per score channel plus a folded bias
};

// Context-rescoring calibration: a linear SVM over per-image score vectors
// [monolithic, patch_1, ..., patch_n].
CalibrationModel calibrate(const std::vector<Vec>& channel_scores, const std::vector<int>& labels,
                           double lambda, const SgdConfig& cfg);

enum class PoolMethod { Nms, Median, KMeans };

struct ScoredBox {
    Box box;
    double score = 0.0;
};

// Final-box pooling over predicted boxes: greedy NMS at 0.5 IoU, the
// coordinate-wise (lower) median box, or k-means over box centers with a
// per-cluster median box.
std::vector<Box> pool_boxes(const std::vector<ScoredBox>& predicted, PoolMethod method,
                            int kmeans_k = 1, std::uint64_t seed = 0);

// Text formats: detection records are lines
//   image_id candidate_id f_1 ... f_D x y w h
// where candidate_id -1 carries the image's object box (no features);
// patch files are lines `patch_id rx ry rw rh w_1 ... w_D`.
std::vector<DetectionRecord> load_detection_records(const std::filesystem::path& file);
std::vector<PatchModel> load_patch_models(const std::filesystem::path& file);

} // namespace lsm
