#include "lsm/patchsel.hpp"

#include "lsm/cluster_init.hpp"
#include "lsm/model.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace lsm {

void Box::validate() const {
    if (!(w > 0) || !(h > 0)) throw ValidationError("box extents must be positive");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
        throw ValidationError("box coordinates must be finite");
}

void PatchModel::validate() const {
    rel_pos.validate();
    if (rel_pos.x < 0 || rel_pos.x > 1 || rel_pos.y < 0 || rel_pos.y > 1 || rel_pos.w > 1 ||
        rel_pos.h > 1)
        throw ValidationError("patch '" + id + "': rel_pos outside normalized ranges");
    if (weights.size() == 0 || !weights.allFinite())
        throw ValidationError("patch '" + id + "': invalid weights");
}

void DetectionRecord::validate() const {
    object_box.validate();
    if (candidates.empty())
        throw ValidationError("record '" + image_id + "' has no candidates");
    const Eigen::Index d = candidates.front().features.size();
    for (const auto& c : candidates) {
        c.box.validate();
        if (c.features.size() != d)
            throw ValidationError("record '" + image_id + "' has mixed feature dimensions");
    }
}

double iou(const Box& a, const Box& b) {
    a.validate();
    b.validate();
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

Box project_rel_pos(const Box& rel, const Box& object_box) {
    object_box.validate();
    return Box{object_box.x + rel.x * object_box.w, object_box.y + rel.y * object_box.h,
               rel.w * object_box.w, rel.h * object_box.h};
}

PatchScores patch_score(const DetectionRecord& rec, const PatchModel& p) {
    rec.validate();
    PatchScores out;
    out.best_candidate = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(rec.candidates.size()); ++i) {
        if (rec.candidates[i].features.size() != p.weights.size())
            throw ValidationError("patch_score: feature dimension mismatch");
        const double s = p.weights.dot(rec.candidates[i].features);
        if (s > best) {
            best = s;
            out.best_candidate = i;
        }
    }
    out.appearance = best;
    out.spatial = iou(rec.candidates[out.best_candidate].box,
                      project_rel_pos(p.rel_pos, rec.object_box));
    out.combined = out.appearance + out.spatial;
    return out;
}

namespace {

// Min-max normalized appearance + spatial for every record, sharing one
// normalization range per patch. A degenerate range leaves appearances as is.
std::vector<double> normalized_combined(const PatchModel& p,
                                        const std::vector<const DetectionRecord*>& recs) {
    std::vector<PatchScores> raw;
    raw.reserve(recs.size());
    for (const auto* r : recs) raw.push_back(patch_score(*r, p));
    double lo = raw.front().appearance, hi = raw.front().appearance;
    for (const auto& s : raw) {
        lo = std::min(lo, s.appearance);
        hi = std::max(hi, s.appearance);
    }
    std::vector<double> out;
    out.reserve(raw.size());
    const bool degenerate = !(hi > lo);
    for (const auto& s : raw) {
        const double app = degenerate ? s.appearance : (s.appearance - lo) / (hi - lo);
        out.push_back(app + s.spatial);
    }
    return out;
}

std::vector<const DetectionRecord*> pointers(const std::vector<DetectionRecord>& recs) {
    std::vector<const DetectionRecord*> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.push_back(&r);
    return out;
}

} // namespace

double representation_measure(const PatchModel& p, const std::vector<DetectionRecord>& recs) {
    if (recs.empty()) throw ValidationError("representation_measure: empty record set");
    const auto combined = normalized_combined(p, pointers(recs));
    double sum = 0.0;
    for (double c : combined) sum += c;
    return sum / static_cast<double>(combined.size());
}

double discrimination_measure(const PatchModel& p, const std::vector<DetectionRecord>& pos_recs,
                              const std::vector<DetectionRecord>& neg_recs) {
    if (pos_recs.empty()) throw ValidationError("discrimination_measure: empty positive set");
    if (neg_recs.empty()) throw ValidationError("discrimination_measure: empty negative set");
    std::vector<const DetectionRecord*> mixed = pointers(pos_recs);
    for (const auto& r : neg_recs) mixed.push_back(&r);
    const auto combined = normalized_combined(p, mixed);

    std::vector<int> order(mixed.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return combined[a] > combined[b]; });

    std::vector<double> pos_ranks;
    for (std::size_t r = 0; r < order.size(); ++r)
        if (order[r] < static_cast<int>(pos_recs.size()))
            pos_ranks.push_back(static_cast<double>(r + 1));
    std::sort(pos_ranks.begin(), pos_ranks.end());
    const std::size_t n = pos_ranks.size();
    const double median = (n % 2 == 1) ? pos_ranks[n / 2]
                                       : 0.5 * (pos_ranks[n / 2 - 1] + pos_ranks[n / 2]);
    return median / static_cast<double>(pos_recs.size());
}

std::vector<RankedPatch> select_patches(const std::vector<PatchModel>& pool,
                                        const std::vector<DetectionRecord>& pos_recs,
                                        const std::vector<DetectionRecord>& neg_recs, int n) {
    if (n < 0 || n > static_cast<int>(pool.size()))
        throw ValidationError("select_patches: n must be in [0, pool size]");
    std::vector<RankedPatch> ranked;
    ranked.reserve(pool.size());
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
        RankedPatch r;
        r.pool_index = i;
        r.rep = representation_measure(pool[i], pos_recs);
        r.disc = discrimination_measure(pool[i], pos_recs, neg_recs);
        r.score = r.rep - r.disc;
        ranked.push_back(r);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedPatch& a, const RankedPatch& b) { return a.score > b.score; });
    return ranked;
}

CalibrationModel calibrate(const std::vector<Vec>& channel_scores, const std::vector<int>& labels,
                           double lambda, const SgdConfig& cfg) {
    if (channel_scores.size() != labels.size())
        throw ValidationError("calibrate: scores/labels size mismatch");
    std::vector<Vec> pos, neg;
    for (std::size_t i = 0; i < channel_scores.size(); ++i)
        (labels[i] > 0 ? pos : neg).push_back(augmented(channel_scores[i]));
    if (pos.empty() || neg.empty())
        throw ValidationError("calibrate: both classes required");
    return CalibrationModel{train_svm(pos, neg, lambda, cfg)};
}

namespace {

std::vector<Box> median_boxes(const std::vector<const Box*>& boxes) {
    auto lower_median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[(v.size() - 1) / 2];
    };
    std::vector<double> xs, ys, ws, hs;
    for (const auto* b : boxes) {
        xs.push_back(b->x);
        ys.push_back(b->y);
        ws.push_back(b->w);
        hs.push_back(b->h);
    }
    return {Box{lower_median(xs), lower_median(ys), lower_median(ws), lower_median(hs)}};
}

} // namespace

std::vector<Box> pool_boxes(const std::vector<ScoredBox>& predicted, PoolMethod method,
                            int kmeans_k, std::uint64_t seed) {
    if (predicted.empty()) throw ValidationError("pool_boxes: empty input");
    for (const auto& sb : predicted) sb.box.validate();

    switch (method) {
    case PoolMethod::Nms: {
        std::vector<int> order(predicted.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return predicted[a].score > predicted[b].score;
        });
        std::vector<Box> kept;
        for (int i : order) {
            bool covered = false;
            for (const auto& k : kept)
                if (iou(predicted[i].box, k) >= 0.5) {
                    covered = true;
                    break;
                }
            if (!covered) kept.push_back(predicted[i].box);
        }
        return kept;
    }
    case PoolMethod::Median: {
        std::vector<const Box*> all;
        for (const auto& sb : predicted) all.push_back(&sb.box);
        return median_boxes(all);
    }
    case PoolMethod::KMeans: {
        if (kmeans_k < 1 || kmeans_k > static_cast<int>(predicted.size()))
            throw ValidationError("pool_boxes: bad k for box clustering");
        std::vector<Vec> centers;
        for (const auto& sb : predicted) {
            Vec c(2);
            c << sb.box.x + sb.box.w / 2.0, sb.box.y + sb.box.h / 2.0;
            centers.push_back(std::move(c));
        }
        const ClusterInit ci = kmeans(centers, kmeans_k, seed);
        // emit clusters in order of first appearance
        std::vector<int> first_member(kmeans_k, -1);
        for (int i = 0; i < static_cast<int>(centers.size()); ++i)
            if (first_member[ci.assignment[i]] < 0) first_member[ci.assignment[i]] = i;
        std::vector<int> cluster_order(kmeans_k);
        std::iota(cluster_order.begin(), cluster_order.end(), 0);
        std::sort(cluster_order.begin(), cluster_order.end(),
                  [&](int a, int b) { return first_member[a] < first_member[b]; });
        std::vector<Box> out;
        for (int c : cluster_order) {
            std::vector<const Box*> members;
            for (int i = 0; i < static_cast<int>(centers.size()); ++i)
                if (ci.assignment[i] == c) members.push_back(&predicted[i].box);
            if (!members.empty()) out.push_back(median_boxes(members).front());
        }
        return out;
    }
    }
    throw ValidationError("pool_boxes: unknown method");
}

namespace {

[[noreturn]] void record_fail(const std::filesystem::path& file, int line_no,
                              const std::string& what) {
    throw IoError(file.string() + ":" + std::to_string(line_no) + ": " + what);
}

} // namespace

std::vector<DetectionRecord> load_detection_records(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::map<std::string, std::size_t> index;
    std::vector<DetectionRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string image_id, cand_tok;
        if (!(ls >> image_id >> cand_tok)) record_fail(file, line_no, "truncated record line");
        std::vector<double> nums;
        std::string tok;
        while (ls >> tok) {
            double v;
            if (!detail::parse_double(tok, v)) record_fail(file, line_no, "malformed number '" + tok + "'");
            nums.push_back(v);
        }
        if (nums.size() < 4) record_fail(file, line_no, "missing box coordinates");
        Box box{nums[nums.size() - 4], nums[nums.size() - 3], nums[nums.size() - 2],
                nums[nums.size() - 1]};
        nums.resize(nums.size() - 4);

        auto it = index.find(image_id);
        if (it == index.end()) {
            index[image_id] = records.size();
            records.push_back(DetectionRecord{image_id, Box{0, 0, 1, 1}, {}});
            it = index.find(image_id);
        }
        DetectionRecord& rec = records[it->second];
        if (cand_tok == "-1") {
            if (!nums.empty()) record_fail(file, line_no, "object box line must carry no features");
            rec.object_box = box;
        } else {
            long cand_id;
            if (!detail::parse_int(cand_tok, cand_id) || cand_id < 0)
                record_fail(file, line_no, "bad candidate id '" + cand_tok + "'");
            Candidate c;
            c.features = Eigen::Map<const Vec>(nums.data(), nums.size());
            c.box = box;
            rec.candidates.push_back(std::move(c));
        }
    }
    if (records.empty()) throw IoError(file.string() + ": no detection records");
    for (const auto& r : records) r.validate();
    return records;
}

std::vector<PatchModel> load_patch_models(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<PatchModel> patches;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        PatchModel p;
        if (!(ls >> p.id)) record_fail(file, line_no, "missing patch id");
        std::vector<double> nums;
        std::string tok;
        while (ls >> tok) {
            double v;
            if (!detail::parse_double(tok, v)) record_fail(file, line_no, "malformed number '" + tok + "'");
            nums.push_back(v);
        }
        if (nums.size() < 5) record_fail(file, line_no, "patch line needs rel pos and weights");
        p.rel_pos = Box{nums[0], nums[1], nums[2], nums[3]};
        p.weights = Eigen::Map<const Vec>(nums.data() + 4, nums.size() - 4);
        p.validate();
        patches.push_back(std::move(p));
    }
    if (patches.empty()) throw IoError(file.string() + ": no patches");
    return patches;
}

} // namespace lsm
