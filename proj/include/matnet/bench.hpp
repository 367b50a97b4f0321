#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "matnet/network.hpp"
#include "matnet/solvers.hpp"

namespace matnet {

enum class Study {
    batch_size,
    data_size,
    eta_sweep,
    xi_sweep,
    depth_compare,
    residual_stress,
    fp_vs_newton,
    dmn_vs_imn,
};

const char* study_name(Study s);
Study study_from_name(std::string_view name); // throws ConfigError

struct StudyConfig {
    Study study = Study::fp_vs_newton;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> values;         // sweep values; empty = per-study default
    std::string composite = "composite1";
    double amplitude = 0.02;
    int steps = 20;
    int depth = 4;
    int epochs = 0;                     // 0 = desk-scale default
    int train_samples = 400;
    int val_samples = 100;
    int batch_size = 40;
    double eta = 1.0;
    double xi = 1.0;
    double tol = 1e-6;
    int max_iter = 200;
    int threads = 0;
    bool full_scale = false;            // paper-scale epochs/depths
    std::uint64_t teacher_seed = 20240901;
};

/// Fill study-specific defaults (sweep values, model type, epochs).
StudyConfig resolve_study_config(StudyConfig cfg);

struct StudyCell {
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double e_c_val = 0.0;
    double e_sigma = 0.0;
    double mean_iterations = 0.0;
    double active_nodes = 0.0;
    double time_per_iter_per_node_ns = 0.0;
    double train_seconds = 0.0;
    double online_seconds = 0.0;
    double speedup = 0.0; // paired-scheme wall-time ratio where applicable
};

struct StudyAggregate {
    double value = 0.0;
    int count = 0;
    double e_c_mean = 0, e_c_std = 0;
    double e_sigma_mean = 0, e_sigma_std = 0;
    double iterations_mean = 0, iterations_std = 0;
    double active_nodes_mean = 0, active_nodes_std = 0;
    double tpin_mean = 0, tpin_std = 0; // time per iteration per node (ns)
    double train_seconds_mean = 0;
    double online_seconds_mean = 0;
    double speedup_mean = 0;
};

struct StudyReport {
    StudyConfig config;
    std::vector<StudyCell> cells;
    std::vector<StudyAggregate> aggregates;
    bool complete = true; // false when any cell failed
};

StudyReport run_study(const StudyConfig& cfg);

/// Emits report.csv (one row per cell), report_agg.csv, report.json, and a
/// gnuplot recipe report.gp into the directory.
void write_report(const StudyReport& report, const std::filesystem::path& dir);

/// Mean relative L2 error over the six loading cases. Throws ConfigError on
/// length mismatch or a zero-norm reference.
double stress_error(const std::array<PathResult, 6>& prediction,
                    const std::array<PathResult, 6>& reference);

/// Six-path online prediction with per-path results.
std::array<PathResult, 6> predict_six_paths(const OnlinePlan& plan, double amplitude, int steps,
                                            const SolverConfig& cfg);

} // namespace matnet
