#include "lsm/cli.hpp"

#include "lsm/cluster_init.hpp"
#include "lsm/dataio.hpp"
#include "lsm/eval.hpp"
#include "lsm/model.hpp"
#include "lsm/objective.hpp"
#include "lsm/optim.hpp"
#include "lsm/patchsel.hpp"
#include "lsm/results.hpp"
#include "text_format.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace lsm {
namespace {

Regularizer parse_reg(const std::string& name) {
    if (name == "sum-sq") return Regularizer::SumSq;
    if (name == "max-sq") return Regularizer::MaxSq;
    if (name == "max-norm") return Regularizer::MaxNorm;
    throw ValidationError("unknown regularizer '" + name + "'");
}

InitKind parse_init(const std::string& name) {
    if (name == "kmeans") return InitKind::KMeans;
    if (name == "random") return InitKind::Random;
    if (name == "zero") return InitKind::Zero;
    throw ValidationError("unknown init '" + name + "'");
}

Dataset pooled_dataset(const DatasetCollection& coll) {
    Dataset all;
    all.id = "pooled";
    for (const auto& ds : coll.datasets)
        all.examples.insert(all.examples.end(), ds.examples.begin(), ds.examples.end());
    return all;
}

Dataset load_dataset_or_pool(const std::string& path) {
    if (fs::is_directory(path)) return pooled_dataset(load_collection(path));
    return load_dataset_file(path);
}

std::string mtl_trace_text(const Trace& trace) {
    std::ostringstream out;
    for (const auto& r : trace)
        out << r.epoch << ' ' << detail::format_double(r.objective) << ' '
            << detail::format_double(r.max_weight_change) << ' ' << r.skipped << '\n';
    return out.str();
}

Json mtl_trace_json(const Trace& trace) {
    Json rows = Json::array();
    for (const auto& r : trace)
        rows.push_back({{"epoch", r.epoch},
                        {"objective", r.objective},
                        {"max_change", r.max_weight_change},
                        {"skipped", r.skipped}});
    return rows;
}

std::string lsm_trace_text(const LsmTrace& trace) {
    std::ostringstream out;
    for (const auto& r : trace)
        out << r.outer << ' ' << detail::format_double(r.f_value) << ' '
            << detail::format_double(r.e_value) << ' ' << r.reassigned << '\n';
    return out.str();
}

Json lsm_trace_json(const LsmTrace& trace) {
    Json rows = Json::array();
    for (const auto& r : trace)
        rows.push_back({{"outer", r.outer},
                        {"f", r.f_value},
                        {"e", r.e_value},
                        {"reassigned", r.reassigned}});
    return rows;
}

void write_results(const fs::path& out_dir, const Json& doc) {
    fs::create_directories(out_dir);
    write_text_atomic(out_dir / "results.json", doc.dump(2) + "\n");
}

struct TrainFlags {
    std::string data;
    int k = 1;
    double c1 = 1.0, c2 = 1.0, rho = 1.0;
    int epochs = 100;
    double eta0 = 1.0;
    int cooldown_len = 5;
    bool no_cooldown = false;
    bool dataset_uniform = false;
    double tol = 1e-6;
    std::string init = "kmeans";
    double init_scale = 0.1;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--data", f.data, "directory of .ds dataset files")->required();
    cmd->add_option("--k", f.k, "number of subclassifiers");
    cmd->add_option("--c1", f.c1, "weight of the per-dataset error term");
    cmd->add_option("--c2", f.c2, "weight of the shared-model error term");
    cmd->add_option("--rho", f.rho, "bias vector penalty");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--eta0", f.eta0, "initial step size");
    cmd->add_option("--cooldown", f.cooldown_len, "cooldown length");
    cmd->add_flag("--no-cooldown", f.no_cooldown, "disable the cooldown cache");
    cmd->add_flag("--dataset-uniform", f.dataset_uniform,
                  "sample a dataset first instead of pooled examples");
    cmd->add_option("--tol", f.tol, "stop when the max weight change drops below this");
    cmd->add_option("--init", f.init, "kmeans | random | zero");
    cmd->add_option("--init-scale", f.init_scale, "random init scale");
}

MtlHyper hyper_of(const TrainFlags& f) {
    MtlHyper h;
    h.num_components = f.k;
    h.c1 = f.c1;
    h.c2 = f.c2;
    h.rho = f.rho;
    h.validate();
    return h;
}

SgdConfig sgd_of(const TrainFlags& f, std::uint64_t seed) {
    SgdConfig cfg;
    cfg.epochs = f.epochs;
    cfg.eta0 = f.eta0;
    cfg.seed = seed;
    cfg.tol_weight_change = f.tol;
    cfg.cooldown_len = f.cooldown_len;
    cfg.cooldown_enabled = !f.no_cooldown;
    cfg.dataset_uniform_sampling = f.dataset_uniform;
    cfg.validate();
    return cfg;
}

Json config_of(const TrainFlags& f, std::uint64_t seed) {
    return {{"data", f.data},         {"k", f.k},
            {"c1", f.c1},             {"c2", f.c2},
            {"rho", f.rho},           {"epochs", f.epochs},
            {"eta0", f.eta0},         {"cooldown", f.cooldown_len},
            {"no_cooldown", f.no_cooldown}, {"dataset_uniform", f.dataset_uniform},
            {"tol", f.tol},           {"init", f.init},
            {"init_scale", f.init_scale},   {"seed", seed}};
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"latent subcategory models with dataset-bias correction"};
    app.require_subcommand(1);
    app.set_config("--config")->description("flat key=value config file; flags override");

    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a biased synthetic collection");
    SynthConfig sc;
    synth->add_option("--t", sc.num_datasets, "number of datasets");
    synth->add_option("--k-true", sc.num_clusters, "true positive cluster count");
    synth->add_option("--dim", sc.dim, "feature dimension");
    synth->add_option("--pos-per-cluster", sc.pos_per_cluster, "positives per cluster");
    synth->add_option("--neg-per-dataset", sc.neg_per_dataset, "negatives per dataset");
    synth->add_option("--separation", sc.separation, "cluster center distance from origin");
    synth->add_option("--bias-shift", sc.bias_shift, "pairwise dataset shift magnitude");
    synth->add_option("--noise", sc.noise, "cluster noise scale");
    synth->add_option("--neg-scale", sc.neg_scale, "background negative scale");

    // train-lsm
    auto* train_lsm = app.add_subcommand("train-lsm", "train a single-dataset model");
    TrainFlags lf;
    double lsm_lambda = 0.1;
    std::string lsm_reg = "sum-sq";
    bool lsm_neg_variant = false;
    int lsm_max_outer = 20;
    add_train_flags(train_lsm, lf);
    train_lsm->add_option("--lambda", lsm_lambda, "regularization weight");
    train_lsm->add_option("--reg", lsm_reg, "sum-sq | max-sq | max-norm");
    train_lsm->add_flag("--neg-variant", lsm_neg_variant, "per-component negative error term");
    train_lsm->add_option("--max-outer", lsm_max_outer, "alternating minimization iterations");

    // train-debias
    auto* train_db = app.add_subcommand("train-debias", "train the multitask model");
    TrainFlags df;
    add_train_flags(train_db, df);

    // bound-check
    auto* bound = app.add_subcommand("bound-check", "verify the initialization bound");
    std::string bound_data;
    int bound_k = 2;
    double bound_lambda = 0.0, bound_lambda_eps_mult = 0.0;
    int bound_draws = 1000, bound_opt_epochs = 150;
    bound->add_option("--data", bound_data, "dataset file or directory (pooled)")->required();
    bound->add_option("--k", bound_k, "cluster / component count");
    bound->add_option("--lambda", bound_lambda, "regularization weight");
    bound->add_option("--lambda-eps-mult", bound_lambda_eps_mult,
                      "set lambda to this multiple of the k-means epsilon");
    bound->add_option("--draws", bound_draws, "random models for the pointwise check");
    bound->add_option("--opt-epochs", bound_opt_epochs, "epochs per convex solve");

    // eval-seen / eval-unseen
    auto* seen = app.add_subcommand("eval-seen", "seen-dataset protocol");
    TrainFlags sf;
    double seen_fraction = 0.75;
    add_train_flags(seen, sf);
    seen->add_option("--train-fraction", seen_fraction, "train split fraction");

    auto* unseen = app.add_subcommand("eval-unseen", "leave-one-dataset-out protocol");
    TrainFlags uf;
    std::string holdout = "0";
    add_train_flags(unseen, uf);
    unseen->add_option("--holdout", holdout, "held-out dataset index or id");

    // grid
    auto* grid = app.add_subcommand("grid", "hyperparameter grid search");
    TrainFlags gf;
    double rho_min = -9, rho_max = 4, rho_step = 1;
    double c_min = -9, c_max = 4, c_step = 0.5;
    int k_min = 1, k_max = 10;
    double grid_fraction = 0.75;
    bool k_from_test = false;
    std::string test_data;
    add_train_flags(grid, gf);
    grid->add_option("--rho-exp-min", rho_min, "rho exponent range start");
    grid->add_option("--rho-exp-max", rho_max, "rho exponent range end");
    grid->add_option("--rho-exp-step", rho_step, "rho exponent step");
    grid->add_option("--c-exp-min", c_min, "C exponent range start");
    grid->add_option("--c-exp-max", c_max, "C exponent range end");
    grid->add_option("--c-exp-step", c_step, "C exponent step");
    grid->add_option("--k-min", k_min, "smallest K");
    grid->add_option("--k-max", k_max, "largest K");
    grid->add_option("--train-fraction", grid_fraction, "train split fraction");
    grid->add_flag("--k-from-test", k_from_test, "pick K by AP on --test-data");
    grid->add_option("--test-data", test_data, "collection used when --k-from-test is set");

    // init-compare
    auto* initcmp = app.add_subcommand("init-compare", "initialization comparison table");
    TrainFlags icf;
    int runs = 30;
    double ic_fraction = 0.75;
    add_train_flags(initcmp, icf);
    initcmp->add_option("--runs", runs, "number of seeded runs");
    initcmp->add_option("--train-fraction", ic_fraction, "train split fraction");

    // patch-select
    auto* patch = app.add_subcommand("patch-select", "rank and select discriminative patches");
    std::string patch_pos, patch_neg, patch_file;
    int patch_top = 1;
    patch->add_option("--pos", patch_pos, "positive detection records")->required();
    patch->add_option("--neg", patch_neg, "negative detection records")->required();
    patch->add_option("--patches", patch_file, "patch model file")->required();
    patch->add_option("--top", patch_top, "number of patches to select");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            return app.exit(e);
        }
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (out_dir.empty()) throw ValidationError("--out is required");
        const fs::path out(out_dir);

        if (synth->parsed()) {
            sc.seed = seed;
            const DatasetCollection coll = synth_biased_collection(sc);
            Json config = {{"t", sc.num_datasets},       {"k_true", sc.num_clusters},
                           {"dim", sc.dim},              {"pos_per_cluster", sc.pos_per_cluster},
                           {"neg_per_dataset", sc.neg_per_dataset},
                           {"separation", sc.separation},
                           {"bias_shift", sc.bias_shift}, {"noise", sc.noise},
                           {"neg_scale", sc.neg_scale},  {"seed", seed}};
            fs::create_directories(out);
            save_collection(coll, out);
            Json payload;
            payload["dim"] = coll.dim;
            payload["total_examples"] = coll.total_examples();
            Json ids = Json::array();
            for (const auto& ds : coll.datasets) ids.push_back(ds.id + ".ds");
            payload["files"] = ids;
            write_results(out, results_document("synth", seed, config, payload));
            return 0;
        }

        if (train_lsm->parsed()) {
            const Dataset data = load_dataset_or_pool(lf.data);
            data.validate_for_training();
            LsmHyper h;
            h.num_components = lf.k;
            h.lambda = lsm_lambda;
            h.reg = parse_reg(lsm_reg);
            h.neg_variant = lsm_neg_variant;
            if (h.lambda < 0) throw ValidationError("lambda must be nonnegative");
            const SgdConfig cfg = sgd_of(lf, seed);

            LsmModel init;
            if (parse_init(lf.init) == InitKind::KMeans) {
                std::vector<Vec> pos;
                for (const auto& e : data.examples)
                    if (e.label > 0) pos.push_back(e.features);
                init = init_lsm_from_clusters(kmeans(pos, lf.k, seed), data, h, cfg);
            } else {
                std::mt19937_64 rng(seed ^ 0xC0FFEEULL);
                std::normal_distribution<double> gauss(0.0, 1.0);
                init.weights.assign(lf.k, Vec::Zero(data.dim() + 1));
                if (parse_init(lf.init) == InitKind::Random)
                    for (auto& w : init.weights)
                        for (Eigen::Index j = 0; j < w.size(); ++j)
                            w[j] = lf.init_scale * gauss(rng);
            }
            auto [model, trace] = train_lsm_alternating(data, h, init, lsm_max_outer, cfg);

            Json config = config_of(lf, seed);
            config["lambda"] = lsm_lambda;
            config["reg"] = lsm_reg;
            config["neg_variant"] = lsm_neg_variant;
            config["max_outer"] = lsm_max_outer;
            Json payload;
            payload["final_f"] = trace.back().f_value;
            payload["final_e"] = trace.back().e_value;
            payload["outer_iterations"] = trace.size();
            payload["trace"] = lsm_trace_json(trace);
            payload["model_file"] = "model.txt";
            fs::create_directories(out);
            save_model(model, out / "model.txt");
            write_text_atomic(out / "trace.txt", lsm_trace_text(trace));
            write_results(out, results_document("train-lsm", seed, config, payload));
            return 0;
        }

        if (train_db->parsed()) {
            const DatasetCollection coll = load_collection(df.data);
            for (const auto& ds : coll.datasets) ds.validate_for_training();
            const MtlHyper h = hyper_of(df);
            const SgdConfig cfg = sgd_of(df, seed);
            const DebiasRun run = train_debias(coll, h, cfg, parse_init(df.init), df.init_scale);

            Json payload;
            payload["final_objective"] = run.trace.back().objective;
            payload["epochs_run"] = run.trace.size();
            payload["trace"] = mtl_trace_json(run.trace);
            payload["model_file"] = "model.txt";
            fs::create_directories(out);
            save_model(run.model, out / "model.txt");
            write_text_atomic(out / "trace.txt", mtl_trace_text(run.trace));
            write_results(out, results_document("train-debias", seed, config_of(df, seed), payload));
            return 0;
        }

        if (bound->parsed()) {
            const Dataset data = load_dataset_or_pool(bound_data);
            data.validate_for_training();
            if (bound_k < 1) throw ValidationError("k must be >= 1");
            double lambda = bound_lambda;
            if (bound_lambda_eps_mult > 0) {
                std::vector<Vec> pos;
                for (const auto& e : data.examples)
                    if (e.label > 0) pos.push_back(e.features);
                lambda = bound_lambda_eps_mult * kmeans(pos, bound_k, seed).epsilon;
            }
            if (!(lambda > 0)) throw ValidationError("lambda must be positive");
            SgdConfig cfg;
            cfg.epochs = bound_opt_epochs;
            cfg.eta0 = 0.5;
            const BoundReport rep = check_bound(data, bound_k, lambda, seed, bound_draws, &cfg);

            Json config = {{"data", bound_data},
                           {"k", bound_k},
                           {"lambda", bound_lambda},
                           {"lambda_eps_mult", bound_lambda_eps_mult},
                           {"draws", bound_draws},
                           {"opt_epochs", bound_opt_epochs},
                           {"seed", seed}};
            Json payload;
            payload["k"] = rep.k;
            payload["lambda"] = rep.lambda;
            payload["epsilon"] = rep.epsilon;
            payload["lambda_prime"] = rep.lambda_prime;
            payload["lambda_prime_positive"] = rep.lambda_prime_positive;
            payload["f_opt"] = rep.f_opt;
            payload["f_prime_opt"] = rep.f_prime_opt;
            payload["e_at_minimizer"] = rep.e_at_minimizer;
            payload["chain_ok"] = rep.chain_ok;
            payload["pointwise_draws"] = rep.pointwise_draws;
            payload["pointwise_violations"] = rep.pointwise_violations;
            write_results(out, results_document("bound-check", seed, config, payload));
            if (!rep.lambda_prime_positive)
                std::cerr << "note: lambda - 2*epsilon <= 0; lower bound not evaluated\n";
            return 0;
        }

        if (seen->parsed()) {
            const DatasetCollection coll = load_collection(sf.data);
            const MtlHyper h = hyper_of(sf);
            const SgdConfig cfg = sgd_of(sf, seed);
            const ProtocolReport rep = run_seen(coll, h, cfg, SplitSpec{seen_fraction, seed});
            Json config = config_of(sf, seed);
            config["train_fraction"] = seen_fraction;
            Json payload;
            payload["dataset_ids"] = rep.dataset_ids;
            payload["model_labels"] = rep.model_labels;
            Json table = Json::array();
            for (int r = 0; r < rep.ap.rows(); ++r) {
                Json row = Json::array();
                for (int c = 0; c < rep.ap.cols(); ++c) row.push_back(rep.ap(r, c));
                table.push_back(row);
            }
            payload["ap"] = table;
            payload["averages"] = rep.averages;
            write_results(out, results_document("eval-seen", seed, config, payload));
            return 0;
        }

        if (unseen->parsed()) {
            const DatasetCollection coll = load_collection(uf.data);
            int idx = -1;
            for (int t = 0; t < coll.num_datasets(); ++t)
                if (coll.datasets[t].id == holdout) idx = t;
            if (idx < 0) {
                long parsed = -1;
                if (detail::parse_int(holdout, parsed)) idx = static_cast<int>(parsed);
            }
            const MtlHyper h = hyper_of(uf);
            const SgdConfig cfg = sgd_of(uf, seed);
            const UnseenReport rep = run_unseen(coll, idx, h, cfg);
            Json config = config_of(uf, seed);
            config["holdout"] = holdout;
            Json payload;
            payload["holdout_id"] = rep.holdout_id;
            payload["ap_visual_world"] = rep.ap_visual_world;
            payload["ap_aggregate"] = rep.ap_aggregate;
            payload["ap_k1_visual_world"] = rep.ap_k1_visual_world;
            payload["rel_improvement_vs_aggregate"] = rep.rel_improvement_vs_aggregate;
            payload["rel_improvement_vs_k1"] = rep.rel_improvement_vs_k1;
            write_results(out, results_document("eval-unseen", seed, config, payload));
            return 0;
        }

        if (grid->parsed()) {
            const DatasetCollection coll = load_collection(gf.data);
            GridSpec gspec;
            for (double r = rho_min; r <= rho_max + 1e-9; r += rho_step)
                gspec.rho_exponents.push_back(static_cast<int>(std::lround(r)));
            for (double r = c_min; r <= c_max + 1e-9; r += c_step) gspec.c_exponents.push_back(r);
            for (int k = k_min; k <= k_max; ++k) gspec.k_values.push_back(k);
            const SgdConfig cfg = sgd_of(gf, seed);
            const SplitSpec split{grid_fraction, seed};

            Json config = config_of(gf, seed);
            config["rho_exp_min"] = rho_min;
            config["rho_exp_max"] = rho_max;
            config["rho_exp_step"] = rho_step;
            config["c_exp_min"] = c_min;
            config["c_exp_max"] = c_max;
            config["c_exp_step"] = c_step;
            config["k_min"] = k_min;
            config["k_max"] = k_max;
            config["train_fraction"] = grid_fraction;
            config["k_from_test"] = k_from_test;
            config["test_data"] = test_data;

            auto cell_json = [](const GridCell& c) {
                return Json{{"k", c.k}, {"c1", c.c1}, {"c2", c.c2}, {"rho", c.rho},
                            {"mean_val_ap", c.mean_val_ap}};
            };
            Json payload;
            if (k_from_test) {
                if (test_data.empty())
                    throw ValidationError("--k-from-test requires --test-data");
                const DatasetCollection test = load_collection(test_data);
                GridCell best;
                double best_test_ap = -1.0;
                Json per_k = Json::array();
                for (int k : gspec.k_values) {
                    GridSpec sub = gspec;
                    sub.k_values = {k};
                    const GridResult res = grid_search(coll, sub, cfg, split);
                    MtlHyper h;
                    h.num_components = k;
                    h.c1 = res.best.c1;
                    h.c2 = res.best.c2;
                    h.rho = res.best.rho;
                    const DebiasRun run = train_debias(coll, h, cfg, InitKind::KMeans);
                    LsmModel vw;
                    vw.weights = run.model.shared;
                    double ap = 0.0;
                    for (const auto& ds : test.datasets) ap += model_ap(vw, ds);
                    ap /= test.num_datasets();
                    Json entry = cell_json(res.best);
                    entry["test_ap"] = ap;
                    per_k.push_back(entry);
                    if (ap > best_test_ap) {
                        best_test_ap = ap;
                        best = res.best;
                    }
                }
                payload["best"] = cell_json(best);
                payload["per_k"] = per_k;
            } else {
                const GridResult res = grid_search(coll, gspec, cfg, split);
                payload["best"] = cell_json(res.best);
                Json cells = Json::array();
                for (const auto& c : res.table) cells.push_back(cell_json(c));
                payload["cells"] = cells;
            }
            write_results(out, results_document("grid", seed, config, payload));
            return 0;
        }

        if (initcmp->parsed()) {
            const DatasetCollection coll = load_collection(icf.data);
            if (runs < 1) throw ValidationError("--runs must be >= 1");
            const MtlHyper h = hyper_of(icf);
            const int t_count = coll.num_datasets();
            const std::vector<std::string> rows = {"random", "random_opt", "kmeans", "kmeans_opt"};
            // ap[row][run][dataset]
            std::vector<std::vector<std::vector<double>>> ap(
                4, std::vector<std::vector<double>>(runs, std::vector<double>(t_count, 0.0)));

            for (int run = 0; run < runs; ++run) {
                DatasetCollection train;
                train.dim = coll.dim;
                std::vector<Dataset> val;
                for (int t = 0; t < t_count; ++t) {
                    SplitSpec split{ic_fraction,
                                    seed + 1000 * static_cast<std::uint64_t>(run) + 31 * t};
                    auto [tr, va] = split_train_val(coll.datasets[t], split);
                    train.datasets.push_back(std::move(tr));
                    val.push_back(std::move(va));
                }
                SgdConfig cfg = sgd_of(icf, seed + static_cast<std::uint64_t>(run));
                const DebiasRun random_run =
                    train_debias(train, h, cfg, InitKind::Random, icf.init_scale);
                const DebiasRun kmeans_run = train_debias(train, h, cfg, InitKind::KMeans);
                const MultiTaskModel* models[4] = {&random_run.init, &random_run.model,
                                                   &kmeans_run.init, &kmeans_run.model};
                for (int r = 0; r < 4; ++r)
                    for (int t = 0; t < t_count; ++t)
                        ap[r][run][t] = model_ap(compose(*models[r], t), val[t]);
            }

            auto mean_std = [](const std::vector<double>& v) {
                double mean = 0.0;
                for (double x : v) mean += x;
                mean /= v.size();
                double var = 0.0;
                for (double x : v) var += (x - mean) * (x - mean);
                var /= v.size();
                return std::pair<double, double>(mean, std::sqrt(var));
            };

            Json config = config_of(icf, seed);
            config["runs"] = runs;
            config["train_fraction"] = ic_fraction;
            Json payload;
            payload["rows"] = rows;
            Json ids = Json::array();
            for (const auto& ds : coll.datasets) ids.push_back(ds.id);
            payload["dataset_ids"] = ids;
            payload["runs"] = runs;
            Json means = Json::array(), stds = Json::array();
            Json overall_mean = Json::array(), overall_std = Json::array();
            for (int r = 0; r < 4; ++r) {
                Json mrow = Json::array(), srow = Json::array();
                for (int t = 0; t < t_count; ++t) {
                    std::vector<double> v(runs);
                    for (int run = 0; run < runs; ++run) v[run] = ap[r][run][t];
                    auto [m, s] = mean_std(v);
                    mrow.push_back(m);
                    srow.push_back(s);
                }
                std::vector<double> per_run(runs, 0.0);
                for (int run = 0; run < runs; ++run) {
                    for (int t = 0; t < t_count; ++t) per_run[run] += ap[r][run][t];
                    per_run[run] /= t_count;
                }
                auto [om, os] = mean_std(per_run);
                overall_mean.push_back(om);
                overall_std.push_back(os);
                means.push_back(mrow);
                stds.push_back(srow);
            }
            payload["mean"] = means;
            payload["std"] = stds;
            payload["overall_mean"] = overall_mean;
            payload["overall_std"] = overall_std;
            write_results(out, results_document("init-compare", seed, config, payload));
            return 0;
        }

        if (patch->parsed()) {
            const auto pos = load_detection_records(patch_pos);
            const auto neg = load_detection_records(patch_neg);
            const auto pool = load_patch_models(patch_file);
            if (patch_top < 0 || patch_top > static_cast<int>(pool.size()))
                throw ValidationError("--top out of range");
            const auto ranked = select_patches(pool, pos, neg, patch_top);
            Json config = {{"pos", patch_pos},
                           {"neg", patch_neg},
                           {"patches", patch_file},
                           {"top", patch_top},
                           {"seed", seed}};
            Json payload;
            Json table = Json::array();
            for (const auto& r : ranked)
                table.push_back({{"id", pool[r.pool_index].id},
                                 {"rep", r.rep},
                                 {"disc", r.disc},
                                 {"score", r.score}});
            payload["ranked"] = table;
            Json selected = Json::array();
            for (int i = 0; i < patch_top; ++i) selected.push_back(pool[ranked[i].pool_index].id);
            payload["selected"] = selected;
            write_results(out, results_document("patch-select", seed, config, payload));
            return 0;
        }
        throw ValidationError("no subcommand given");
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace lsm
