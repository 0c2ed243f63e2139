#include "lsm/dataio.hpp"

#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace lsm {

int Dataset::num_positives() const {
    int n = 0;
    for (const auto& e : examples) n += (e.label > 0);
    return n;
}

int Dataset::num_negatives() const {
    return static_cast<int>(examples.size()) - num_positives();
}

void Dataset::validate_for_training() const {
    if (examples.empty()) throw ValidationError("dataset '" + id + "' is empty");
    const Eigen::Index d = examples.front().features.size();
    for (const auto& e : examples) {
        if (e.features.size() != d)
            throw ValidationError("dataset '" + id + "' has mixed feature dimensions");
        if (!e.features.allFinite())
            throw ValidationError("dataset '" + id + "' contains non-finite features");
    }
    if (num_positives() == 0 || num_negatives() == 0)
        throw ValidationError("dataset '" + id + "' needs at least one positive and one negative");
}

std::size_t DatasetCollection::total_examples() const {
    std::size_t n = 0;
    for (const auto& ds : datasets) n += ds.examples.size();
    return n;
}

void DatasetCollection::validate() const {
    if (datasets.empty()) throw ValidationError("collection has no datasets");
    std::map<std::string, int> seen;
    for (const auto& ds : datasets) {
        if (++seen[ds.id] > 1) throw ValidationError("duplicate dataset id '" + ds.id + "'");
        for (const auto& e : ds.examples)
            if (e.features.size() != dim)
                throw ValidationError("dataset '" + ds.id + "' does not match collection dimension");
    }
}

namespace {

struct SparseExample {
    int label;
    std::vector<std::pair<long, double>> entries; // 1-based index, value
};

struct ParsedFile {
    std::vector<SparseExample> examples;
    long declared_dim = 0; // from #dim header, 0 if absent
    long max_index = 0;
};

[[noreturn]] void parse_fail(const fs::path& file, int line_no, const std::string& what) {
    throw IoError(file.string() + ":" + std::to_string(line_no) + ": " + what);
}

ParsedFile parse_dataset_text(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    ParsedFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        const auto first = trimmed.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (trimmed[first] == '#') {
            std::istringstream hs(trimmed.substr(first + 1));
            std::string key;
            hs >> key;
            if (key == "dim") {
                long d = 0;
                if (!(hs >> d) || d <= 0) parse_fail(file, line_no, "bad #dim header");
                out.declared_dim = d;
            }
            continue;
        }
        std::istringstream ls(trimmed);
        std::string tok;
        if (!(ls >> tok)) continue;
        long label = 0;
        if (!detail::parse_int(tok, label)) parse_fail(file, line_no, "malformed label '" + tok + "'");
        if (label != 1 && label != -1) parse_fail(file, line_no, "label not +/-1");
        SparseExample ex;
        ex.label = static_cast<int>(label);
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
                parse_fail(file, line_no, "malformed entry '" + tok + "'");
            long idx = 0;
            double val = 0.0;
            if (!detail::parse_int(tok.substr(0, colon), idx) || idx < 1)
                parse_fail(file, line_no, "malformed index in '" + tok + "'");
            if (!detail::parse_double(tok.substr(colon + 1), val) || !std::isfinite(val))
                parse_fail(file, line_no, "malformed value in '" + tok + "'");
            for (const auto& [seen_idx, seen_val] : ex.entries)
                if (seen_idx == idx) parse_fail(file, line_no, "duplicate index " + std::to_string(idx));
            ex.entries.emplace_back(idx, val);
            out.max_index = std::max(out.max_index, idx);
        }
        out.examples.push_back(std::move(ex));
    }
    if (out.examples.empty()) throw IoError(file.string() + ": empty dataset file");
    if (out.declared_dim > 0 && out.declared_dim < out.max_index)
        throw IoError(file.string() + ": #dim " + std::to_string(out.declared_dim) +
                      " smaller than max index " + std::to_string(out.max_index));
    return out;
}

Dataset densify(const ParsedFile& parsed, const std::string& id, Eigen::Index dim) {
    Dataset ds;
    ds.id = id;
    ds.examples.reserve(parsed.examples.size());
    for (const auto& ex : parsed.examples) {
        LabeledExample e;
        e.label = ex.label;
        e.features = Vec::Zero(dim);
        for (const auto& [idx, val] : ex.entries) e.features[idx - 1] = val;
        ds.examples.push_back(std::move(e));
    }
    return ds;
}

} // namespace

Dataset load_dataset_file(const fs::path& file) {
    ParsedFile parsed = parse_dataset_text(file);
    const long dim = std::max(parsed.declared_dim, parsed.max_index);
    return densify(parsed, file.stem().string(), dim);
}

DatasetCollection load_collection(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ds")
            files.push_back(entry.path());
    if (files.empty()) throw IoError("no .ds files in " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    std::vector<ParsedFile> parsed;
    long dim = 0;
    for (const auto& f : files) {
        parsed.push_back(parse_dataset_text(f));
        dim = std::max({dim, parsed.back().max_index, parsed.back().declared_dim});
    }
    DatasetCollection coll;
    coll.dim = dim;
    for (std::size_t i = 0; i < files.size(); ++i)
        coll.datasets.push_back(densify(parsed[i], files[i].stem().string(), dim));
    coll.validate();
    return coll;
}

void save_dataset_file(const Dataset& ds, Eigen::Index dim, const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "#dim " << dim << "\n";
    for (const auto& e : ds.examples) {
        out << (e.label > 0 ? "+1" : "-1");
        for (Eigen::Index j = 0; j < e.features.size(); ++j)
            if (e.features[j] != 0.0)
                out << ' ' << (j + 1) << ':' << detail::format_double(e.features[j]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + file.string());
}

void save_collection(const DatasetCollection& coll, const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& ds : coll.datasets)
        save_dataset_file(ds, coll.dim, dir / (ds.id + ".ds"));
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ValidationError("train_fraction must be in (0,1)");
    std::vector<int> pos_idx, neg_idx;
    for (int i = 0; i < static_cast<int>(ds.examples.size()); ++i)
        (ds.examples[i].label > 0 ? pos_idx : neg_idx).push_back(i);
    if (pos_idx.size() < 2 || neg_idx.size() < 2)
        throw ValidationError("dataset '" + ds.id + "' needs >=2 examples per class to split");

    std::mt19937_64 rng(spec.seed);
    auto take = [&](std::vector<int>& idx) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(
            std::llround(spec.train_fraction * static_cast<double>(idx.size())));
        if (n_train == 0 || n_train >= idx.size())
            throw ValidationError("split leaves an empty class half in dataset '" + ds.id + "'");
        return n_train;
    };
    const auto n_pos_train = take(pos_idx);
    const auto n_neg_train = take(neg_idx);

    std::vector<bool> in_train(ds.examples.size(), false);
    for (std::size_t i = 0; i < n_pos_train; ++i) in_train[pos_idx[i]] = true;
    for (std::size_t i = 0; i < n_neg_train; ++i) in_train[neg_idx[i]] = true;

    Dataset train, val;
    train.id = ds.id;
    val.id = ds.id;
    for (std::size_t i = 0; i < ds.examples.size(); ++i)
        (in_train[i] ? train : val).examples.push_back(ds.examples[i]);
    return {std::move(train), std::move(val)};
}

namespace {

// Vertices of a regular simplex with unit pairwise distance, centered at the
// origin, embedded in the first `n` coordinates of R^dim.
std::vector<Vec> centered_simplex(int n, Eigen::Index dim) {
    std::vector<Vec> verts(n, Vec::Zero(dim));
    if (n <= 1) return verts;
    const double scale = 1.0 / std::sqrt(2.0); // unit vectors e_t are sqrt(2) apart
    for (int t = 0; t < n; ++t) {
        for (int j = 0; j < n; ++j)
            verts[t][j] = scale * ((j == t ? 1.0 : 0.0) - 1.0 / n);
    }
    return verts;
}

} // namespace

DatasetCollection synth_biased_collection(const SynthConfig& cfg) {
    if (cfg.num_datasets < 1 || cfg.num_clusters < 1 || cfg.dim < 1 ||
        cfg.pos_per_cluster < 1 || cfg.neg_per_dataset < 1)
        throw ValidationError("synth: counts must be positive");
    if (cfg.separation < 0 || cfg.bias_shift < 0 || cfg.common_shift < 0 || cfg.noise <= 0 ||
        cfg.neg_scale <= 0)
        throw ValidationError("synth: scales must be positive (shift/separation nonnegative)");
    if ((cfg.bias_shift > 0 || cfg.common_shift > 0) && cfg.dim < cfg.num_datasets)
        throw ValidationError("synth: dataset shifts require dim >= num_datasets");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Shared cluster directions, one random unit vector per cluster.
    std::vector<Vec> centers(cfg.num_clusters);
    for (auto& c : centers) {
        Vec v(cfg.dim);
        do {
            for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = gauss(rng);
        } while (v.norm() < 1e-12);
        c = cfg.separation * v / v.norm();
    }

    const std::vector<Vec> simplex = centered_simplex(cfg.num_datasets, cfg.dim);

    DatasetCollection coll;
    coll.dim = cfg.dim;
    for (int t = 0; t < cfg.num_datasets; ++t) {
        const Vec pos_shift = cfg.bias_shift * simplex[t];
        const Vec capture_shift = cfg.common_shift * simplex[t];
        Dataset ds;
        ds.id = "synth" + std::to_string(t);
        for (int k = 0; k < cfg.num_clusters; ++k) {
            for (int i = 0; i < cfg.pos_per_cluster; ++i) {
                LabeledExample e;
                e.label = +1;
                e.features = centers[k] + pos_shift + capture_shift;
                for (Eigen::Index j = 0; j < cfg.dim; ++j) e.features[j] += cfg.noise * gauss(rng);
                ds.examples.push_back(std::move(e));
            }
        }
        for (int i = 0; i < cfg.neg_per_dataset; ++i) {
            LabeledExample e;
            e.label = -1;
            e.features = capture_shift;
            for (Eigen::Index j = 0; j < cfg.dim; ++j) e.features[j] += cfg.neg_scale * gauss(rng);
            ds.examples.push_back(std::move(e));
        }
        coll.datasets.push_back(std::move(ds));
    }
    return coll;
}

} // namespace lsm
