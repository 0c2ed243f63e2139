#include "lsm/model.hpp"

#include "text_format.hpp"

#include <fstream>
#include <sstream>

namespace lsm {

void LsmModel::validate() const {
    if (weights.empty()) throw ValidationError("model has no components");
    const Eigen::Index d = weights.front().size();
    for (const auto& w : weights) {
        if (w.size() != d) throw ValidationError("model components have mixed dimensions");
        if (!w.allFinite()) throw ValidationError("model contains non-finite weights");
    }
}

void MultiTaskModel::validate() const {
    if (shared.empty()) throw ValidationError("multitask model has no components");
    const Eigen::Index d = shared.front().size();
    for (const auto& w : shared)
        if (w.size() != d || !w.allFinite())
            throw ValidationError("multitask shared vectors invalid");
    for (const auto& per_t : bias) {
        if (per_t.size() != shared.size())
            throw ValidationError("multitask bias component count mismatch");
        for (const auto& v : per_t)
            if (v.size() != d || !v.allFinite())
                throw ValidationError("multitask bias vectors invalid");
    }
}

MultiTaskModel MultiTaskModel::zeros(int num_components, int num_datasets, Eigen::Index aug_dim) {
    MultiTaskModel m;
    m.shared.assign(num_components, Vec::Zero(aug_dim));
    m.bias.assign(num_datasets, std::vector<Vec>(num_components, Vec::Zero(aug_dim)));
    return m;
}

Vec augmented(const Vec& x) {
    Vec out(x.size() + 1);
    out.head(x.size()) = x;
    out[x.size()] = 1.0;
    return out;
}

ScoreResult score(const LsmModel& m, const Vec& x_aug) {
    if (m.weights.empty()) throw ValidationError("score: empty model");
    ScoreResult best{0.0, -1};
    for (int k = 0; k < m.num_components(); ++k) {
        if (m.weights[k].size() != x_aug.size())
            throw ValidationError("score: dimension mismatch");
        const double s = m.weights[k].dot(x_aug);
        if (best.component < 0 || s > best.value) best = {s, k};
    }
    return best;
}

int predict(const LsmModel& m, const Vec& x_aug) {
    return score(m, x_aug).value > 0.0 ? +1 : -1;
}

LsmModel compose(const MultiTaskModel& mt, int t) {
    if (t < 0 || t >= mt.num_datasets())
        throw ValidationError("compose: dataset index out of range");
    LsmModel m;
    m.weights.reserve(mt.shared.size());
    for (int k = 0; k < mt.num_components(); ++k)
        m.weights.push_back(mt.shared[k] + mt.bias[t][k]);
    return m;
}

std::vector<std::vector<int>> assign_clusters(const LsmModel& m, const std::vector<Vec>& positives_aug) {
    if (positives_aug.empty()) throw ValidationError("assign_clusters: no positives");
    std::vector<std::vector<int>> partition(m.num_components());
    for (int i = 0; i < static_cast<int>(positives_aug.size()); ++i)
        partition[score(m, positives_aug[i]).component].push_back(i);
    return partition;
}

namespace {

void write_vector(std::ofstream& out, const Vec& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (j) out << ' ';
        out << detail::format_double(v[j]);
    }
    out << '\n';
}

Vec read_vector(std::ifstream& in, Eigen::Index n, const std::filesystem::path& file) {
    std::string line;
    if (!std::getline(in, line)) throw IoError(file.string() + ": truncated model file");
    std::istringstream ls(line);
    Vec v(n);
    std::string tok;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(ls >> tok) || !detail::parse_double(tok, v[j]))
            throw IoError(file.string() + ": malformed weight vector");
    }
    return v;
}

} // namespace

void save_model(const LsmModel& m, const std::filesystem::path& file) {
    m.validate();
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << m.num_components() << " 0 " << (m.dim() - 1) << '\n';
    for (const auto& w : m.weights) write_vector(out, w);
    if (!out) throw IoError("write failed for " + file.string());
}

void save_model(const MultiTaskModel& m, const std::filesystem::path& file) {
    m.validate();
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << m.num_components() << ' ' << m.num_datasets() << ' ' << (m.dim() - 1) << '\n';
    for (const auto& w : m.shared) write_vector(out, w);
    for (const auto& per_t : m.bias)
        for (const auto& v : per_t) write_vector(out, v);
    if (!out) throw IoError("write failed for " + file.string());
}

ModelFile load_model(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw IoError(file.string() + ": empty model file");
    std::istringstream hs(header);
    long K = 0, T = 0, d = 0;
    if (!(hs >> K >> T >> d) || K < 1 || T < 0 || d < 1)
        throw IoError(file.string() + ": bad model header");
    ModelFile out;
    out.lsm.weights.reserve(K);
    for (long k = 0; k < K; ++k) out.lsm.weights.push_back(read_vector(in, d + 1, file));
    if (T > 0) {
        MultiTaskModel mt;
        mt.shared = out.lsm.weights;
        mt.bias.resize(T);
        for (long t = 0; t < T; ++t)
            for (long k = 0; k < K; ++k) mt.bias[t].push_back(read_vector(in, d + 1, file));
        mt.validate();
        out.multitask = std::move(mt);
    }
    out.lsm.validate();
    return out;
}

} // namespace lsm
