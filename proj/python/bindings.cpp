#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lsm/cluster_init.hpp"
#include "lsm/dataio.hpp"
#include "lsm/eval.hpp"
#include "lsm/model.hpp"
#include "lsm/objective.hpp"
#include "lsm/optim.hpp"
#include "lsm/patchsel.hpp"

namespace py = pybind11;
using namespace lsm;

namespace {

Mat stack_weights(const std::vector<Vec>& weights) {
    Mat out(weights.size(), weights.empty() ? 0 : weights.front().size());
    for (std::size_t k = 0; k < weights.size(); ++k) out.row(k) = weights[k].transpose();
    return out;
}

Dataset dataset_from_arrays(const Mat& x, const std::vector<int>& y, const std::string& id) {
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ValidationError("features/labels size mismatch");
    Dataset ds;
    ds.id = id;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        ds.examples.push_back({x.row(i).transpose(), y[i]});
    return ds;
}

std::vector<double> lsm_scores(const LsmModel& m, const Mat& x) {
    std::vector<double> out;
    out.reserve(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        out.push_back(score(m, augmented(x.row(i).transpose())).value);
    return out;
}

Box box_from_tuple(const std::array<double, 4>& b) { return Box{b[0], b[1], b[2], b[3]}; }

struct PyDebias {
    MultiTaskModel model;
    Trace trace;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latent subcategory models with dataset-bias correction";

    py::register_exception<ValidationError>(m, "LsmValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "LsmIoError", PyExc_IOError);
    py::register_exception<NumericalError>(m, "LsmNumericalError", PyExc_ArithmeticError);

    py::class_<DatasetCollection>(m, "Collection")
        .def_property_readonly("num_datasets", &DatasetCollection::num_datasets)
        .def_property_readonly("dim", [](const DatasetCollection& c) { return c.dim; })
        .def("ids",
             [](const DatasetCollection& c) {
                 std::vector<std::string> ids;
                 for (const auto& ds : c.datasets) ids.push_back(ds.id);
                 return ids;
             })
        .def("features",
             [](const DatasetCollection& c, int t) {
                 const auto& ds = c.datasets.at(t);
                 Mat x(ds.examples.size(), c.dim);
                 for (std::size_t i = 0; i < ds.examples.size(); ++i)
                     x.row(i) = ds.examples[i].features.transpose();
                 return x;
             })
        .def("labels", [](const DatasetCollection& c, int t) {
            const auto& ds = c.datasets.at(t);
            std::vector<int> y;
            for (const auto& e : ds.examples) y.push_back(e.label);
            return y;
        });

    m.def(
        "synth_collection",
        [](int t, int k_true, int dim, int pos_per_cluster, int neg_per_dataset,
           double separation, double bias_shift, double noise, double neg_scale,
           std::uint64_t seed) {
            SynthConfig cfg;
            cfg.num_datasets = t;
            cfg.num_clusters = k_true;
            cfg.dim = dim;
            cfg.pos_per_cluster = pos_per_cluster;
            cfg.neg_per_dataset = neg_per_dataset;
            cfg.separation = separation;
            cfg.bias_shift = bias_shift;
            cfg.noise = noise;
            cfg.neg_scale = neg_scale;
            cfg.seed = seed;
            return synth_biased_collection(cfg);
        },
        py::arg("t") = 3, py::arg("k_true") = 2, py::arg("dim") = 4,
        py::arg("pos_per_cluster") = 50, py::arg("neg_per_dataset") = 100,
        py::arg("separation") = 4.0, py::arg("bias_shift") = 0.0, py::arg("noise") = 0.5,
        py::arg("neg_scale") = 1.0, py::arg("seed") = 0);

    m.def("load_collection", &load_collection, py::arg("path"));
    m.def("save_collection", &save_collection, py::arg("collection"), py::arg("path"));

    m.def(
        "kmeans",
        [](const Mat& x, int k, std::uint64_t seed, int restarts) {
            std::vector<Vec> pts;
            for (Eigen::Index i = 0; i < x.rows(); ++i) pts.push_back(x.row(i).transpose());
            const ClusterInit ci = kmeans(pts, k, seed, restarts);
            py::dict out;
            out["means"] = ci.means;
            out["assignment"] = ci.assignment;
            out["distortion_sq"] = ci.distortion_sq;
            out["epsilon"] = ci.epsilon;
            return out;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 10);

    m.def(
        "average_precision",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return average_precision(scores, labels).ap;
        },
        py::arg("scores"), py::arg("labels"));

    py::class_<PyDebias>(m, "DebiasModel")
        .def_property_readonly("num_components",
                               [](const PyDebias& d) { return d.model.num_components(); })
        .def_property_readonly("num_datasets",
                               [](const PyDebias& d) { return d.model.num_datasets(); })
        .def("shared", [](const PyDebias& d) { return stack_weights(d.model.shared); })
        .def("bias", [](const PyDebias& d, int t) { return stack_weights(d.model.bias.at(t)); })
        .def("shared_scores",
             [](const PyDebias& d, const Mat& x) {
                 LsmModel vw{d.model.shared};
                 return lsm_scores(vw, x);
             })
        .def("composed_scores",
             [](const PyDebias& d, const Mat& x, int t) {
                 return lsm_scores(compose(d.model, t), x);
             })
        .def("objective_trace", [](const PyDebias& d) {
            std::vector<double> out;
            for (const auto& r : d.trace) out.push_back(r.objective);
            return out;
        });

    m.def(
        "train_debias",
        [](const DatasetCollection& coll, int k, double c1, double c2, double rho, int epochs,
           double eta0, std::uint64_t seed, const std::string& init) {
            MtlHyper h;
            h.num_components = k;
            h.c1 = c1;
            h.c2 = c2;
            h.rho = rho;
            SgdConfig cfg;
            cfg.epochs = epochs;
            cfg.eta0 = eta0;
            cfg.seed = seed;
            InitKind kind = InitKind::KMeans;
            if (init == "random") kind = InitKind::Random;
            else if (init == "zero") kind = InitKind::Zero;
            else if (init != "kmeans") throw ValidationError("init must be kmeans|random|zero");
            DebiasRun run = train_debias(coll, h, cfg, kind);
            return PyDebias{std::move(run.model), std::move(run.trace)};
        },
        py::arg("collection"), py::arg("k") = 2, py::arg("c1") = 1.0, py::arg("c2") = 1.0,
        py::arg("rho") = 1.0, py::arg("epochs") = 100, py::arg("eta0") = 1.0,
        py::arg("seed") = 0, py::arg("init") = "kmeans");

    m.def(
        "train_aggregate",
        [](const DatasetCollection& coll, double c, int k, int epochs, double eta0,
           std::uint64_t seed) {
            SgdConfig cfg;
            cfg.epochs = epochs;
            cfg.eta0 = eta0;
            cfg.seed = seed;
            return stack_weights(train_aggregate_lsm(coll, c, k, cfg).weights);
        },
        py::arg("collection"), py::arg("c") = 1.0, py::arg("k") = 2, py::arg("epochs") = 100,
        py::arg("eta0") = 1.0, py::arg("seed") = 0);

    m.def(
        "bound_check",
        [](const Mat& x, const std::vector<int>& y, int k, double lambda, std::uint64_t seed,
           int draws) {
            const Dataset ds = dataset_from_arrays(x, y, "data");
            const BoundReport rep = check_bound(ds, k, lambda, seed, draws);
            py::dict out;
            out["k"] = rep.k;
            out["lambda"] = rep.lambda;
            out["epsilon"] = rep.epsilon;
            out["lambda_prime"] = rep.lambda_prime;
            out["lambda_prime_positive"] = rep.lambda_prime_positive;
            out["f_opt"] = rep.f_opt;
            out["f_prime_opt"] = rep.f_prime_opt;
            out["e_at_minimizer"] = rep.e_at_minimizer;
            out["chain_ok"] = rep.chain_ok;
            out["pointwise_draws"] = rep.pointwise_draws;
            out["pointwise_violations"] = rep.pointwise_violations;
            return out;
        },
        py::arg("features"), py::arg("labels"), py::arg("k") = 2, py::arg("lambda") = 1.0,
        py::arg("seed") = 0, py::arg("draws") = 1000);

    m.def(
        "iou",
        [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
            return iou(box_from_tuple(a), box_from_tuple(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "project_rel_pos",
        [](const std::array<double, 4>& rel, const std::array<double, 4>& obj) {
            const Box l = project_rel_pos(box_from_tuple(rel), box_from_tuple(obj));
            return std::array<double, 4>{l.x, l.y, l.w, l.h};
        },
        py::arg("rel"), py::arg("object_box"));

    m.def(
        "pool_boxes_nms",
        [](const std::vector<std::array<double, 4>>& boxes, const std::vector<double>& scores) {
            if (boxes.size() != scores.size())
                throw ValidationError("boxes/scores size mismatch");
            std::vector<ScoredBox> sb;
            for (std::size_t i = 0; i < boxes.size(); ++i)
                sb.push_back({box_from_tuple(boxes[i]), scores[i]});
            std::vector<std::array<double, 4>> out;
            for (const Box& b : pool_boxes(sb, PoolMethod::Nms))
                out.push_back({b.x, b.y, b.w, b.h});
            return out;
        },
        py::arg("boxes"), py::arg("scores"));

    m.def(
        "pool_boxes_median",
        [](const std::vector<std::array<double, 4>>& boxes) {
            std::vector<ScoredBox> sb;
            for (const auto& b : boxes) sb.push_back({box_from_tuple(b), 0.0});
            const Box b = pool_boxes(sb, PoolMethod::Median).front();
            return std::array<double, 4>{b.x, b.y, b.w, b.h};
        },
        py::arg("boxes"));
}
