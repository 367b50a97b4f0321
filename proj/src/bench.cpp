#include "matnet/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "matnet/datagen.hpp"
#include "matnet/errors.hpp"
#include "matnet/io.hpp"
#include "matnet/materials.hpp"
#include "matnet/parallel.hpp"
#include "matnet/training.hpp"

namespace matnet {

const char* study_name(Study s) {
    switch (s) {
        case Study::batch_size: return "batch_size";
        case Study::data_size: return "data_size";
        case Study::eta_sweep: return "eta_sweep";
        case Study::xi_sweep: return "xi_sweep";
        case Study::depth_compare: return "depth_compare";
        case Study::residual_stress: return "residual_stress";
        case Study::fp_vs_newton: return "fp_vs_newton";
        case Study::dmn_vs_imn: return "dmn_vs_imn";
    }
    return "unknown";
}

Study study_from_name(std::string_view name) {
    for (Study s : {Study::batch_size, Study::data_size, Study::eta_sweep, Study::xi_sweep,
                    Study::depth_compare, Study::residual_stress, Study::fp_vs_newton,
                    Study::dmn_vs_imn}) {
        if (name == study_name(s)) return s;
    }
    throw ConfigError("unknown study '" + std::string(name) + "'");
}

StudyConfig resolve_study_config(StudyConfig cfg) {
    if (cfg.seeds.empty()) throw ConfigError("study needs at least one seed");
    if (cfg.epochs == 0) cfg.epochs = cfg.full_scale ? 10000 : 2000;
    if (cfg.values.empty()) {
        switch (cfg.study) {
            case Study::batch_size: cfg.values = {20, 40, 128}; break;
            case Study::data_size: cfg.values = {256, 1024}; break;
            case Study::eta_sweep: cfg.values = {0.01, 0.1, 1.0, 10.0, 100.0}; break;
            case Study::xi_sweep: cfg.values = {0.5, 1.0, 2.0}; break;
            case Study::depth_compare:
                cfg.values = cfg.full_scale ? std::vector<double>{4, 5, 6, 7, 8}
                                            : std::vector<double>{4, 5, 6};
                break;
            // Paired studies enumerate their two arms.
            case Study::residual_stress: cfg.values = {0, 1}; break;
            case Study::fp_vs_newton: cfg.values = {0, 1}; break;
            case Study::dmn_vs_imn: cfg.values = {0, 1}; break;
        }
    }
    return cfg;
}

double stress_error(const std::array<PathResult, 6>& prediction,
                    const std::array<PathResult, 6>& reference) {
    double sum = 0.0;
    for (int p = 0; p < 6; ++p) {
        const auto& pred = prediction[static_cast<std::size_t>(p)];
        const auto& ref = reference[static_cast<std::size_t>(p)];
        if (pred.stress.size() != ref.stress.size())
            throw ConfigError("stress_error: path length mismatch on case " + std::to_string(p));
        double num = 0.0, den = 0.0;
        for (std::size_t s = 0; s < ref.stress.size(); ++s) {
            num += (pred.stress[s] - ref.stress[s]).squaredNorm();
            den += ref.stress[s].squaredNorm();
        }
        if (!(den > 0.0))
            throw ConfigError("stress_error: zero-norm reference on case " + std::to_string(p));
        sum += std::sqrt(num / den);
    }
    return sum / 6.0;
}

std::array<PathResult, 6> predict_six_paths(const OnlinePlan& plan, double amplitude, int steps,
                                            const SolverConfig& cfg) {
    const auto increments = standard_loading_paths(amplitude, steps);
    std::array<PathResult, 6> out;
    for (int p = 0; p < 6; ++p)
        out[static_cast<std::size_t>(p)] =
            run_loading_path(plan, increments[static_cast<std::size_t>(p)], cfg);
    return out;
}

namespace {

struct OnlineMetrics {
    double e_sigma = 0.0;
    double mean_iterations = 0.0;
    double time_per_iter_per_node_ns = 0.0;
    double online_seconds = 0.0;
    bool complete = true;
};

OnlineMetrics online_metrics(const std::array<PathResult, 6>& paths,
                             const std::array<PathResult, 6>& reference, int active_nodes) {
    OnlineMetrics m;
    long long iters = 0, steps = 0, ns = 0;
    for (const auto& p : paths) {
        if (!p.complete()) m.complete = false;
        iters += p.total_iterations();
        steps += static_cast<long long>(p.iterations.size());
        ns += p.total_elapsed_ns();
    }
    if (!m.complete) return m;
    m.e_sigma = stress_error(paths, reference);
    m.mean_iterations = steps > 0 ? static_cast<double>(iters) / static_cast<double>(steps) : 0.0;
    // Intrinsic per-iteration, per-active-node cost.
    const double denom = static_cast<double>(iters) * std::max(active_nodes, 1);
    m.time_per_iter_per_node_ns = denom > 0 ? static_cast<double>(ns) / denom : 0.0;
    m.online_seconds = static_cast<double>(ns) * 1e-9;
    return m;
}

Scheme default_scheme(ModelType type) {
    return type == ModelType::dmn ? Scheme::dmn_residual : Scheme::imn_newton;
}

struct CellRuntime {
    const StudyConfig& cfg;
    const PhaseMaterials& materials;
    const Dataset& dataset;
    const std::array<PathResult, 6>& reference;
};

TrainConfig make_train_config(const StudyConfig& cfg, std::uint64_t seed, int batch,
                              int train_samples) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = batch;
    tc.seed = seed;
    tc.validation_fraction = static_cast<double>(cfg.val_samples) /
                             static_cast<double>(train_samples + cfg.val_samples);
    tc.threads = 1; // cells run in parallel; keep each cell single-threaded
    return tc;
}

struct TrainedModel {
    Model model;
    double e_c_val = 0.0;
    double seconds = 0.0;
};

TrainedModel train_student(ModelType type, int depth, const Dataset& dataset,
                           const TrainConfig& tc, const LossConfig& lc) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult r = train(type, Topology{depth}, dataset, tc, lc);
    const auto t1 = std::chrono::steady_clock::now();
    TrainedModel out{std::move(r.best), 0.0,
                     std::chrono::duration<double>(t1 - t0).count()};
    const std::size_t total = dataset.samples.size();
    const auto val_count = static_cast<std::size_t>(
        std::llround(tc.validation_fraction * static_cast<double>(total)));
    const std::span<const TrainingSample> val(dataset.samples.data() + (total - val_count),
                                              val_count);
    out.e_c_val = mean_relative_error(out.model, val);
    return out;
}

// Warm-up pass excluded from timing.
void warm_up(const OnlinePlan& plan, const StudyConfig& cfg, const SolverConfig& sc) {
    const auto increments = standard_loading_paths(cfg.amplitude, cfg.steps);
    (void)run_loading_path(plan, increments[0], sc);
}

std::vector<StudyCell> run_paired_cell(const CellRuntime& rt, std::uint64_t seed) {
    const StudyConfig& cfg = rt.cfg;
    std::vector<StudyCell> cells(2);
    cells[0].value = 0;
    cells[1].value = 1;
    for (auto& c : cells) c.seed = seed;

    SolverConfig sc;
    sc.tol = cfg.tol;
    sc.max_iter = cfg.max_iter;
    const LossConfig lc{cfg.eta, cfg.xi};

    if (cfg.study == Study::dmn_vs_imn) {
        // Arm 0: rotation-based model; arm 1: rotation-free model. Both are
        // trained on the same dataset; the speedup field reports the offline
        // wall-time ratio (arm0 / arm1).
        const TrainConfig tc = make_train_config(cfg, seed, cfg.batch_size, cfg.train_samples);
        TrainedModel dmn = train_student(ModelType::dmn, cfg.depth, rt.dataset, tc, lc);
        TrainedModel imn = train_student(ModelType::imn, cfg.depth, rt.dataset, tc, lc);
        const TrainedModel* models[2] = {&dmn, &imn};
        for (int arm = 0; arm < 2; ++arm) {
            StudyCell& c = cells[static_cast<std::size_t>(arm)];
            const TrainedModel& tm = *models[arm];
            OnlinePlan plan(tm.model, rt.materials);
            SolverConfig arm_sc = sc;
            arm_sc.scheme = default_scheme(tm.model.type());
            warm_up(plan, cfg, arm_sc);
            const auto paths = predict_six_paths(plan, cfg.amplitude, cfg.steps, arm_sc);
            const OnlineMetrics m = online_metrics(paths, rt.reference, plan.active_leaf_count());
            if (!m.complete) {
                c.error = "online prediction did not converge";
                continue;
            }
            c.ok = true;
            c.e_c_val = tm.e_c_val;
            c.train_seconds = tm.seconds;
            c.active_nodes = plan.active_leaf_count();
            c.e_sigma = m.e_sigma;
            c.mean_iterations = m.mean_iterations;
            c.time_per_iter_per_node_ns = m.time_per_iter_per_node_ns;
            c.online_seconds = m.online_seconds;
        }
        const double ratio = imn.seconds > 0 ? dmn.seconds / imn.seconds : 0.0;
        cells[0].speedup = ratio;
        cells[1].speedup = ratio;
        return cells;
    }

    // residual_stress and fp_vs_newton share one trained model per seed.
    const ModelType type =
        cfg.study == Study::residual_stress ? ModelType::dmn : ModelType::imn;
    const TrainConfig tc = make_train_config(cfg, seed, cfg.batch_size, cfg.train_samples);
    const TrainedModel tm = train_student(type, cfg.depth, rt.dataset, tc, lc);
    OnlinePlan plan(tm.model, rt.materials);

    const Scheme schemes[2] = {
        cfg.study == Study::residual_stress ? Scheme::dmn_residual : Scheme::imn_newton,
        cfg.study == Study::residual_stress ? Scheme::dmn_no_residual : Scheme::imn_fixed_point};
    OnlineMetrics metrics[2];
    for (int arm = 0; arm < 2; ++arm) {
        StudyCell& c = cells[static_cast<std::size_t>(arm)];
        SolverConfig arm_sc = sc;
        arm_sc.scheme = schemes[arm];
        warm_up(plan, cfg, arm_sc);
        const auto paths = predict_six_paths(plan, cfg.amplitude, cfg.steps, arm_sc);
        metrics[arm] = online_metrics(paths, rt.reference, plan.active_leaf_count());
        if (!metrics[arm].complete) {
            c.error = "online prediction did not converge";
            continue;
        }
        c.ok = true;
        c.e_c_val = tm.e_c_val;
        c.train_seconds = tm.seconds;
        c.active_nodes = plan.active_leaf_count();
        c.e_sigma = metrics[arm].e_sigma;
        c.mean_iterations = metrics[arm].mean_iterations;
        c.time_per_iter_per_node_ns = metrics[arm].time_per_iter_per_node_ns;
        c.online_seconds = metrics[arm].online_seconds;
    }
    if (cells[0].ok && cells[1].ok && metrics[0].online_seconds > 0) {
        const double ratio = metrics[1].online_seconds / metrics[0].online_seconds;
        cells[0].speedup = ratio;
        cells[1].speedup = ratio;
    }
    return cells;
}

StudyCell run_sweep_cell(const CellRuntime& rt, double value, std::uint64_t seed) {
    const StudyConfig& cfg = rt.cfg;
    StudyCell cell;
    cell.value = value;
    cell.seed = seed;

    ModelType type = ModelType::imn;
    int depth = cfg.depth;
    int batch = cfg.batch_size;
    int train_samples = cfg.train_samples;
    LossConfig lc{cfg.eta, cfg.xi};
    const Dataset* data = &rt.dataset;
    Dataset sliced;

    switch (cfg.study) {
        case Study::batch_size:
            type = ModelType::dmn;
            batch = static_cast<int>(value);
            break;
        case Study::data_size: {
            type = ModelType::dmn;
            train_samples = static_cast<int>(value);
            // Shared validation tail, truncated training prefix.
            const auto& all = rt.dataset.samples;
            sliced.samples.assign(all.begin(), all.begin() + train_samples);
            sliced.samples.insert(sliced.samples.end(),
                                  all.end() - cfg.val_samples, all.end());
            data = &sliced;
            break;
        }
        case Study::eta_sweep: lc.eta = value; break;
        case Study::xi_sweep: lc.xi = value; break;
        case Study::depth_compare: depth = static_cast<int>(value); break;
        default: throw ConfigError("not a sweep study");
    }

    const TrainConfig tc = make_train_config(cfg, seed, batch, train_samples);
    const TrainedModel tm = train_student(type, depth, *data, tc, lc);

    SolverConfig sc;
    sc.tol = cfg.tol;
    sc.max_iter = cfg.max_iter;
    sc.scheme = default_scheme(type);
    OnlinePlan plan(tm.model, rt.materials);
    warm_up(plan, cfg, sc);
    const auto paths = predict_six_paths(plan, cfg.amplitude, cfg.steps, sc);
    const OnlineMetrics m = online_metrics(paths, rt.reference, plan.active_leaf_count());
    if (!m.complete) {
        cell.error = "online prediction did not converge";
        return cell;
    }
    cell.ok = true;
    cell.e_c_val = tm.e_c_val;
    cell.train_seconds = tm.seconds;
    cell.active_nodes = count_active_nodes(tm.model);
    cell.e_sigma = m.e_sigma;
    cell.mean_iterations = m.mean_iterations;
    cell.time_per_iter_per_node_ns = m.time_per_iter_per_node_ns;
    cell.online_seconds = m.online_seconds;
    return cell;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

StudyReport run_study(const StudyConfig& raw) {
    const StudyConfig cfg = resolve_study_config(raw);
    StudyReport report;
    report.config = cfg;

    const bool paired = cfg.study == Study::residual_stress || cfg.study == Study::fp_vs_newton ||
                        cfg.study == Study::dmn_vs_imn;

    // Hidden reference network and its synthetic dataset. The teacher also
    // produces the ground-truth stress paths for e_sigma.
    const ModelType teacher_type =
        (cfg.study == Study::residual_stress || cfg.study == Study::batch_size ||
         cfg.study == Study::data_size)
            ? ModelType::dmn
            : ModelType::imn;
    int max_train = cfg.train_samples;
    if (cfg.study == Study::data_size)
        for (double v : cfg.values) max_train = std::max(max_train, static_cast<int>(v));
    Rng teacher_rng(derive_seed(cfg.teacher_seed, 0x7eac));
    const Model teacher = initialize_model(teacher_type, Topology{cfg.depth}, teacher_rng);

    DatagenConfig dg;
    dg.sample_count = max_train + cfg.val_samples;
    dg.seed = derive_seed(cfg.teacher_seed, 0xda7a);
    const Dataset dataset = generate_dataset(teacher, dg);

    const CompositePreset preset = composite_preset(cfg.composite);
    const PhaseMaterials materials = preset.phases();

    SolverConfig ref_cfg;
    ref_cfg.tol = 1e-10;
    ref_cfg.max_iter = 500;
    ref_cfg.scheme = default_scheme(teacher_type);
    OnlinePlan teacher_plan(teacher, materials);
    const auto reference = predict_six_paths(teacher_plan, cfg.amplitude, cfg.steps, ref_cfg);
    for (const auto& p : reference)
        if (!p.complete()) throw ConvergenceError("teacher reference path did not converge", 0.0);

    const CellRuntime rt{cfg, materials, dataset, reference};

    // Flatten the study grid; cells are independent and run in parallel.
    struct Task {
        double value;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    if (paired) {
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({-1.0, seed});
    } else {
        for (double v : cfg.values)
            for (std::uint64_t seed : cfg.seeds) tasks.push_back({v, seed});
    }

    std::vector<std::vector<StudyCell>> results(tasks.size());
    parallel_chunks(tasks.size(), cfg.threads, [&](int, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                if (paired) {
                    results[i] = run_paired_cell(rt, tasks[i].seed);
                } else {
                    results[i] = {run_sweep_cell(rt, tasks[i].value, tasks[i].seed)};
                }
            } catch (const std::exception& e) {
                StudyCell failed;
                failed.value = tasks[i].value;
                failed.seed = tasks[i].seed;
                failed.error = e.what();
                results[i] = {failed};
            }
        }
    });

    for (auto& group : results)
        for (auto& cell : group) {
            if (!cell.ok) report.complete = false;
            report.cells.push_back(std::move(cell));
        }

    // Aggregate over seeds, grouped by value.
    std::map<double, std::vector<const StudyCell*>> groups;
    for (const auto& cell : report.cells)
        if (cell.ok) groups[cell.value].push_back(&cell);
    for (const auto& [value, cells] : groups) {
        StudyAggregate agg;
        agg.value = value;
        agg.count = static_cast<int>(cells.size());
        std::vector<double> ec, es, it, an, tp, ts, os, sp;
        for (const auto* c : cells) {
            ec.push_back(c->e_c_val);
            es.push_back(c->e_sigma);
            it.push_back(c->mean_iterations);
            an.push_back(c->active_nodes);
            tp.push_back(c->time_per_iter_per_node_ns);
            ts.push_back(c->train_seconds);
            os.push_back(c->online_seconds);
            sp.push_back(c->speedup);
        }
        agg.e_c_mean = mean_of(ec);
        agg.e_c_std = std_of(ec);
        agg.e_sigma_mean = mean_of(es);
        agg.e_sigma_std = std_of(es);
        agg.iterations_mean = mean_of(it);
        agg.iterations_std = std_of(it);
        agg.active_nodes_mean = mean_of(an);
        agg.active_nodes_std = std_of(an);
        agg.tpin_mean = mean_of(tp);
        agg.tpin_std = std_of(tp);
        agg.train_seconds_mean = mean_of(ts);
        agg.online_seconds_mean = mean_of(os);
        agg.speedup_mean = mean_of(sp);
        report.aggregates.push_back(agg);
    }
    return report;
}

void write_report(const StudyReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };

    {
        std::ofstream out(dir / "report.csv", std::ios::binary);
        out << "study,value,seed,ok,e_c_val,e_sigma,iterations_mean,active_nodes,"
               "time_per_iter_per_node_ns,train_seconds,online_seconds,speedup,error\n";
        for (const auto& c : report.cells) {
            out << study_name(report.config.study) << ',' << fmt(c.value) << ',' << c.seed << ','
                << (c.ok ? 1 : 0) << ',' << fmt(c.e_c_val) << ',' << fmt(c.e_sigma) << ','
                << fmt(c.mean_iterations) << ',' << fmt(c.active_nodes) << ','
                << fmt(c.time_per_iter_per_node_ns) << ',' << fmt(c.train_seconds) << ','
                << fmt(c.online_seconds) << ',' << fmt(c.speedup) << ',' << c.error << '\n';
        }
    }
    {
        std::ofstream out(dir / "report_agg.csv", std::ios::binary);
        out << "value,count,e_c_mean,e_c_std,e_sigma_mean,e_sigma_std,iterations_mean,"
               "iterations_std,active_nodes_mean,active_nodes_std,tpin_mean,tpin_std,"
               "train_seconds_mean,online_seconds_mean,speedup_mean\n";
        for (const auto& a : report.aggregates) {
            out << fmt(a.value) << ',' << a.count << ',' << fmt(a.e_c_mean) << ','
                << fmt(a.e_c_std) << ',' << fmt(a.e_sigma_mean) << ',' << fmt(a.e_sigma_std) << ','
                << fmt(a.iterations_mean) << ',' << fmt(a.iterations_std) << ','
                << fmt(a.active_nodes_mean) << ',' << fmt(a.active_nodes_std) << ','
                << fmt(a.tpin_mean) << ',' << fmt(a.tpin_std) << ',' << fmt(a.train_seconds_mean)
                << ',' << fmt(a.online_seconds_mean) << ',' << fmt(a.speedup_mean) << '\n';
        }
    }
    {
        nlohmann::ordered_json j;
        j["study"] = study_name(report.config.study);
        j["complete"] = report.complete;
        j["composite"] = report.config.composite;
        j["depth"] = report.config.depth;
        j["epochs"] = report.config.epochs;
        j["seeds"] = report.config.seeds;
        j["values"] = report.config.values;
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const auto& c : report.cells) {
            nlohmann::ordered_json jc;
            jc["value"] = c.value;
            jc["seed"] = c.seed;
            jc["ok"] = c.ok;
            jc["e_c_val"] = c.e_c_val;
            jc["e_sigma"] = c.e_sigma;
            jc["iterations_mean"] = c.mean_iterations;
            jc["active_nodes"] = c.active_nodes;
            jc["time_per_iter_per_node_ns"] = c.time_per_iter_per_node_ns;
            jc["train_seconds"] = c.train_seconds;
            jc["online_seconds"] = c.online_seconds;
            jc["speedup"] = c.speedup;
            if (!c.error.empty()) jc["error"] = c.error;
            cells.push_back(jc);
        }
        j["cells"] = cells;
        nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
        for (const auto& a : report.aggregates) {
            nlohmann::ordered_json ja;
            ja["value"] = a.value;
            ja["count"] = a.count;
            ja["e_c"] = {{"mean", a.e_c_mean}, {"std", a.e_c_std}};
            ja["e_sigma"] = {{"mean", a.e_sigma_mean}, {"std", a.e_sigma_std}};
            ja["iterations"] = {{"mean", a.iterations_mean}, {"std", a.iterations_std}};
            ja["active_nodes"] = {{"mean", a.active_nodes_mean}, {"std", a.active_nodes_std}};
            ja["time_per_iter_per_node_ns"] = {{"mean", a.tpin_mean}, {"std", a.tpin_std}};
            ja["train_seconds_mean"] = a.train_seconds_mean;
            ja["online_seconds_mean"] = a.online_seconds_mean;
            ja["speedup_mean"] = a.speedup_mean;
            aggs.push_back(ja);
        }
        j["aggregates"] = aggs;
        std::ofstream out(dir / "report.json", std::ios::binary);
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "report.gp", std::ios::binary);
        out << "# gnuplot recipe for the study aggregates\n"
               "set datafile separator \",\"\n"
               "set key autotitle columnhead\n"
               "set logscale y\n"
               "set xlabel \"" << study_name(report.config.study) << " value\"\n"
               "set ylabel \"e_sigma\"\n"
               "plot \"report_agg.csv\" using 1:5:6 with yerrorlines title \"e_sigma\", \\\n"
               "     \"report_agg.csv\" using 1:3:4 with yerrorlines title \"e_C\"\n";
    }
}

} // namespace matnet
