// Command-line front end: synthetic data generation, offline training,
// online prediction, benchmark studies, and artifact inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "matnet/bench.hpp"
#include "matnet/datagen.hpp"
#include "matnet/errors.hpp"
#include "matnet/io.hpp"
#include "matnet/materials.hpp"
#include "matnet/network.hpp"
#include "matnet/parallel.hpp"
#include "matnet/rng.hpp"
#include "matnet/solvers.hpp"
#include "matnet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int threads = 0;
};

void write_config_snapshot(const fs::path& dir, const ordered_json& j) {
    fs::create_directories(dir);
    std::ofstream out(dir / "config.json", std::ios::binary);
    out << j.dump(2) << "\n";
}

int fail_numeric(const GlobalOpts& g, const std::string& what) {
    fs::create_directories(g.out_dir);
    const fs::path diag = fs::path(g.out_dir) / "diagnostic.txt";
    std::ofstream out(diag);
    out << what << "\n";
    std::cerr << "error: " << what << "\n";
    std::cerr << "diagnostic written to " << diag.string() << "\n";
    return 2;
}

matnet::ModelType parse_model_type(const std::string& name) {
    if (name == "dmn") return matnet::ModelType::dmn;
    if (name == "imn") return matnet::ModelType::imn;
    throw matnet::ConfigError("unknown model type '" + name + "' (expected dmn or imn)");
}

matnet::PhaseMaterials resolve_materials(const std::string& composite,
                                         const std::string& materials_file) {
    if (!materials_file.empty())
        return matnet::material_from_json([&] {
            std::ifstream in(materials_file, std::ios::binary);
            if (!in) throw matnet::FormatError("cannot open '" + materials_file + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }());
    return matnet::composite_preset(composite).phases();
}

int cmd_gen_data(const GlobalOpts& g, const std::string& teacher_type, int depth, int samples) {
    if (depth < 1) {
        std::cerr << "error: depth must be >= 1\n";
        return 1;
    }
    if (samples < 1) {
        std::cerr << "error: samples must be >= 1\n";
        return 1;
    }
    const matnet::ModelType type = parse_model_type(teacher_type);
    matnet::Rng rng(matnet::derive_seed(g.seed, 0x7eac));
    const matnet::Model teacher = matnet::initialize_model(type, matnet::Topology{depth}, rng);

    matnet::DatagenConfig dg;
    dg.sample_count = samples;
    dg.seed = g.seed;
    const matnet::Dataset dataset = matnet::generate_dataset(teacher, dg);

    fs::create_directories(g.out_dir);
    matnet::save_dataset(dataset, fs::path(g.out_dir) / "dataset.csv");
    matnet::save_model(teacher, fs::path(g.out_dir) / "teacher.json");

    ordered_json cfg;
    cfg["command"] = "gen-data";
    cfg["seed"] = g.seed;
    cfg["teacher"] = teacher_type;
    cfg["depth"] = depth;
    cfg["samples"] = samples;
    cfg["provenance"] = dataset.provenance;
    write_config_snapshot(g.out_dir, cfg);

    std::cout << "wrote " << (fs::path(g.out_dir) / "dataset.csv").string() << " (" << samples
              << " samples) and teacher.json\n";
    return 0;
}

struct TrainOpts {
    std::string model = "imn";
    int depth = 4;
    std::string data;
    matnet::TrainConfig train;
    matnet::LossConfig loss;
};

int cmd_train(const GlobalOpts& g, const TrainOpts& opt) {
    if (opt.depth < 1) {
        std::cerr << "error: depth must be >= 1\n";
        return 1;
    }
    const matnet::ModelType type = parse_model_type(opt.model);
    const matnet::Dataset dataset = matnet::load_dataset(opt.data);

    matnet::TrainConfig tc = opt.train;
    tc.seed = g.seed;
    tc.threads = g.threads;

    ordered_json cfg;
    cfg["command"] = "train";
    cfg["seed"] = g.seed;
    cfg["model"] = opt.model;
    cfg["depth"] = opt.depth;
    cfg["data"] = opt.data;
    cfg["epochs"] = tc.epochs;
    cfg["batch_size"] = tc.batch_size;
    cfg["initial_lr"] = tc.initial_lr;
    cfg["lr_factor"] = tc.lr_factor;
    cfg["patience"] = tc.patience;
    cfg["validation_fraction"] = tc.validation_fraction;
    cfg["eta"] = opt.loss.eta;
    cfg["xi"] = opt.loss.xi;
    cfg["threads"] = g.threads;
    write_config_snapshot(g.out_dir, cfg);

    const matnet::TrainResult result =
        matnet::train(type, matnet::Topology{opt.depth}, dataset, tc, opt.loss);
    matnet::save_model(result.best, fs::path(g.out_dir) / "model.json");
    matnet::save_model(result.final, fs::path(g.out_dir) / "model_final.json");
    matnet::save_history(result.history, fs::path(g.out_dir) / "history.csv");

    std::cout << "best epoch " << result.best_epoch << ", final validation e_C "
              << result.history.e_c_val.back() << "\n";
    std::cout << "wrote model.json, model_final.json, history.csv to " << g.out_dir << "\n";
    return 0;
}

struct PredictOpts {
    std::string model;
    std::string composite = "composite1";
    std::string materials_file;
    std::string scheme;
    double amplitude = 0.02;
    int steps = 20;
    double tol = 1e-6;
    int max_iter = 100;
};

int cmd_predict(const GlobalOpts& g, const PredictOpts& opt) {
    const matnet::Model model = matnet::load_model(opt.model);
    const matnet::PhaseMaterials materials = resolve_materials(opt.composite, opt.materials_file);

    matnet::SolverConfig sc;
    sc.tol = opt.tol;
    sc.max_iter = opt.max_iter;
    sc.scheme = opt.scheme.empty()
                    ? (model.type() == matnet::ModelType::dmn ? matnet::Scheme::dmn_residual
                                                              : matnet::Scheme::imn_newton)
                    : matnet::scheme_from_name(opt.scheme);

    ordered_json cfg;
    cfg["command"] = "predict";
    cfg["seed"] = g.seed;
    cfg["model"] = opt.model;
    cfg["composite"] = opt.materials_file.empty() ? opt.composite : opt.materials_file;
    cfg["scheme"] = matnet::scheme_name(sc.scheme);
    cfg["amplitude"] = opt.amplitude;
    cfg["steps"] = opt.steps;
    cfg["tol"] = sc.tol;
    cfg["max_iter"] = sc.max_iter;
    write_config_snapshot(g.out_dir, cfg);

    const matnet::OnlinePlan plan(model, materials);
    const auto increments = matnet::standard_loading_paths(opt.amplitude, opt.steps);
    static const char* names[6] = {"eps11", "eps22", "eps33", "gam23", "gam13", "gam12"};
    bool failed = false;
    std::string failure;
    for (int p = 0; p < 6; ++p) {
        const matnet::PathResult r =
            matnet::run_loading_path(plan, increments[static_cast<std::size_t>(p)], sc);
        matnet::save_path_csv(r, fs::path(g.out_dir) /
                                     ("path_" + std::string(names[p]) + ".csv"));
        if (!r.complete()) {
            failed = true;
            failure = "loading case " + std::string(names[p]) + " stopped at step " +
                      std::to_string(*r.failed_step) + " without convergence";
        }
    }
    if (failed) return fail_numeric(g, failure);
    std::cout << "wrote six path CSVs to " << g.out_dir << " (scheme "
              << matnet::scheme_name(sc.scheme) << ", " << plan.active_leaf_count()
              << " active nodes)\n";
    return 0;
}

struct BenchOpts {
    std::string study = "fp_vs_newton";
    std::vector<std::uint64_t> seeds;
    std::vector<double> values;
    std::string composite = "composite1";
    int depth = 4;
    int epochs = 0;
    int train_samples = 400;
    int val_samples = 100;
    int batch_size = 40;
    double amplitude = 0.02;
    int steps = 20;
    bool full_scale = false;
};

int cmd_bench(const GlobalOpts& g, const BenchOpts& opt) {
    matnet::StudyConfig sc;
    sc.study = matnet::study_from_name(opt.study);
    if (!opt.seeds.empty()) sc.seeds = opt.seeds;
    sc.values = opt.values;
    sc.composite = opt.composite;
    sc.depth = opt.depth;
    sc.epochs = opt.epochs;
    sc.train_samples = opt.train_samples;
    sc.val_samples = opt.val_samples;
    sc.batch_size = opt.batch_size;
    sc.amplitude = opt.amplitude;
    sc.steps = opt.steps;
    sc.full_scale = opt.full_scale;
    sc.threads = g.threads;
    sc.teacher_seed = g.seed != 0 ? g.seed : sc.teacher_seed;
    sc = matnet::resolve_study_config(sc);

    ordered_json cfg;
    cfg["command"] = "bench";
    cfg["study"] = opt.study;
    cfg["seed"] = g.seed;
    cfg["seeds"] = sc.seeds;
    cfg["values"] = sc.values;
    cfg["composite"] = sc.composite;
    cfg["depth"] = sc.depth;
    cfg["epochs"] = sc.epochs;
    cfg["train_samples"] = sc.train_samples;
    cfg["val_samples"] = sc.val_samples;
    cfg["batch_size"] = sc.batch_size;
    cfg["amplitude"] = sc.amplitude;
    cfg["steps"] = sc.steps;
    cfg["full_scale"] = sc.full_scale;
    cfg["threads"] = g.threads;
    write_config_snapshot(g.out_dir, cfg);

    const matnet::StudyReport report = matnet::run_study(sc);
    matnet::write_report(report, g.out_dir);

    for (const auto& a : report.aggregates) {
        std::printf("value %-8g n=%d  e_C %.4g±%.2g  e_sigma %.4g±%.2g  iters %.3g  "
                    "active %.3g  t/iter/node %.4g ns",
                    a.value, a.count, a.e_c_mean, a.e_c_std, a.e_sigma_mean, a.e_sigma_std,
                    a.iterations_mean, a.active_nodes_mean, a.tpin_mean);
        if (a.speedup_mean > 0) std::printf("  speedup %.3g", a.speedup_mean);
        std::printf("\n");
    }
    if (!report.complete) {
        std::cerr << "warning: some study cells failed; see report.csv\n";
        return fail_numeric(g, "study incomplete: at least one cell failed");
    }
    std::cout << "wrote report files to " << g.out_dir << "\n";
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    const matnet::Model model = matnet::load_model(model_path);
    const int n = model.topology.depth;
    const int expected = model.type() == matnet::ModelType::dmn ? 7 * (1 << n) - 3
                                                                : 3 * (1 << n) - 2;
    const int actual = model.parameter_count();
    std::cout << "model_type: " << (model.type() == matnet::ModelType::dmn ? "dmn" : "imn")
              << "\n";
    std::cout << "depth: " << n << "\n";
    std::cout << "parameters: " << actual << " (expected " << expected << ")\n";
    std::cout << "active_base_nodes: " << matnet::count_active_nodes(model) << " of "
              << model.topology.base_count() << "\n";
    if (actual != expected) {
        std::cerr << "error: parameter count does not match the formula\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Material network toolkit: offline training and online prediction of "
                 "two-phase composite surrogates"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--threads", g.threads, "Thread budget (0 = all logical cores)");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset from a teacher network");
    std::string gen_teacher = "imn";
    int gen_depth = 4;
    int gen_samples = 500;
    gen->add_option("--teacher", gen_teacher, "Teacher model type (dmn|imn)");
    gen->add_option("--depth", gen_depth, "Teacher depth");
    gen->add_option("--samples", gen_samples, "Number of samples");

    auto* tr = app.add_subcommand("train", "Train a model on a dataset");
    TrainOpts topt;
    tr->add_option("--model", topt.model, "Model type (dmn|imn)");
    tr->add_option("--depth", topt.depth, "Network depth");
    tr->add_option("--data", topt.data, "Dataset CSV path")->required();
    tr->add_option("--epochs", topt.train.epochs, "Training epochs");
    tr->add_option("--batch-size", topt.train.batch_size, "Mini-batch size");
    tr->add_option("--lr", topt.train.initial_lr, "Initial learning rate");
    tr->add_option("--lr-factor", topt.train.lr_factor, "Plateau reduction factor");
    tr->add_option("--patience", topt.train.patience, "Plateau patience (epochs)");
    tr->add_option("--val-fraction", topt.train.validation_fraction, "Validation fraction");
    tr->add_option("--eta", topt.loss.eta, "Activation regularization strength");
    tr->add_option("--xi", topt.loss.xi, "Target activation sum");

    auto* pr = app.add_subcommand("predict", "Six-path online prediction");
    PredictOpts popt;
    pr->add_option("--model", popt.model, "Trained model JSON")->required();
    pr->add_option("--composite", popt.composite, "Composite preset (composite1..3)");
    pr->add_option("--materials", popt.materials_file, "Custom materials JSON (overrides preset)");
    pr->add_option("--scheme", popt.scheme,
                   "dmn_residual|dmn_no_residual|imn_fixed_point|imn_newton");
    pr->add_option("--amplitude", popt.amplitude, "Total strain amplitude");
    pr->add_option("--steps", popt.steps, "Number of increments");
    pr->add_option("--tol", popt.tol, "Solver tolerance");
    pr->add_option("--max-iter", popt.max_iter, "Solver iteration cap");

    auto* be = app.add_subcommand("bench", "Run a benchmark study");
    BenchOpts bopt;
    be->add_option("--study", bopt.study,
                   "batch_size|data_size|eta_sweep|xi_sweep|depth_compare|residual_stress|"
                   "fp_vs_newton|dmn_vs_imn");
    be->add_option("--seeds", bopt.seeds, "Seed list");
    be->add_option("--values", bopt.values, "Sweep values (study-specific default otherwise)");
    be->add_option("--composite", bopt.composite, "Composite preset for online testing");
    be->add_option("--depth", bopt.depth, "Network depth");
    be->add_option("--epochs", bopt.epochs, "Training epochs (0 = default)");
    be->add_option("--train-samples", bopt.train_samples, "Training sample count");
    be->add_option("--val-samples", bopt.val_samples, "Validation sample count");
    be->add_option("--batch-size", bopt.batch_size, "Mini-batch size");
    be->add_option("--amplitude", bopt.amplitude, "Strain amplitude");
    be->add_option("--steps", bopt.steps, "Loading increments per path");
    be->add_flag("--full-scale", bopt.full_scale, "Paper-scale epochs and depths");

    auto* in = app.add_subcommand("inspect", "Print model metadata");
    std::string inspect_model;
    in->add_option("model", inspect_model, "Model JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(g, gen_teacher, gen_depth, gen_samples);
        if (tr->parsed()) return cmd_train(g, topt);
        if (pr->parsed()) return cmd_predict(g, popt);
        if (be->parsed()) return cmd_bench(g, bopt);
        if (in->parsed()) return cmd_inspect(inspect_model);
    } catch (const matnet::ConvergenceError& e) {
        return fail_numeric(g, e.what());
    } catch (const matnet::TrainingError& e) {
        return fail_numeric(g, e.what());
    } catch (const matnet::SingularInterfaceError& e) {
        return fail_numeric(g, e.what());
    } catch (const matnet::DegenerateNetworkError& e) {
        return fail_numeric(g, e.what());
    } catch (const matnet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
