#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "matnet/materials.hpp"
#include "matnet/network.hpp"

namespace matnet {

enum class Scheme { dmn_residual, dmn_no_residual, imn_fixed_point, imn_newton };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(std::string_view name); // throws ConfigError

struct SolverConfig {
    double tol = 1e-6; // relative convergence tolerance
    int max_iter = 100;
    Scheme scheme = Scheme::imn_newton;
};

struct PredictionStepResult {
    Stress6 dstress_macro = Stress6::Zero();
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;              // final scheme-specific residual measure
    std::vector<MaterialState> states;  // per base node, updated on convergence
    long ops = 0;                       // constitutive + block evaluations
};

/// Reduced Newton system over active base nodes and retained parents
/// (parents whose two children both carry weight). The block matrix maps the
/// jumping vector to the local strain deviations: eps_nodes - eps_macro = A a.
struct NewtonSystem {
    Eigen::MatrixXd a;                 // (6 M) x (3 P)
    std::vector<int> active_leaves;    // heap indices, base order
    std::vector<int> retained_parents; // heap indices, heap order
    Eigen::VectorXd leaf_weights;      // per active leaf
};

/// Throws ConfigError when the weight field is inconsistent with the
/// topology (orphan columns) or normals are missing.
NewtonSystem assemble_newton_system(const Topology& topo, const WeightField& weights,
                                    const std::vector<Vec3>& parent_normals);

/// Per-model evaluation plan for online prediction: pruned tree, interface
/// matrices, rotation operators, and the assembled Newton system. Immutable
/// after construction; step() is const and safe to call concurrently on
/// distinct state vectors.
class OnlinePlan {
public:
    OnlinePlan(const Model& model, const PhaseMaterials& materials);

    PredictionStepResult step(const std::vector<MaterialState>& states,
                              const Strain6& dstrain_macro, const SolverConfig& cfg) const;

    int active_leaf_count() const { return static_cast<int>(active_leaves_.size()); }
    int retained_parent_count() const { return static_cast<int>(block_parents_.size()); }
    std::vector<MaterialState> virgin_states() const;

private:
    struct Node {
        enum Kind : unsigned char { inactive, leaf, pass_left, pass_right, block } kind = inactive;
        double f1 = 0.0;
        Vec3 normal = Vec3::Zero();     // block interface
        Mat63 hn = Mat63::Zero();
        Mat6 rot = Mat6::Identity();    // rotation operator (identity when unrotated)
        bool rotated = false;
        int leaf_slot = -1;             // index into active leaf arrays
        const MaterialModel* material = nullptr;
        Stiffness6 c_elastic = Stiffness6::Zero();
    };

    PredictionStepResult fixed_point_step(const std::vector<MaterialState>& states,
                                          const Strain6& de, const SolverConfig& cfg,
                                          bool with_residual, bool secant) const;
    PredictionStepResult newton_step(const std::vector<MaterialState>& states, const Strain6& de,
                                     const SolverConfig& cfg) const;
    PredictionStepResult passthrough_step(const std::vector<MaterialState>& states,
                                          const Strain6& de) const;
    Stress6 commit(const std::vector<Strain6>& leaf_dstrain,
                   const std::vector<MaterialState>& states,
                   std::vector<MaterialState>& next, long& ops) const;

    Model model_;
    PhaseMaterials materials_;
    Topology topo_;
    WeightField weights_;
    std::vector<Node> nodes_;        // heap order
    std::vector<int> active_leaves_; // heap indices, base order
    std::vector<int> block_parents_;
    NewtonSystem system_;            // rotation-free models only
    bool has_system_ = false;
};

PredictionStepResult newton_predict(const Model& model, const PhaseMaterials& materials,
                                    const std::vector<MaterialState>& states,
                                    const Strain6& dstrain_macro, const SolverConfig& cfg);

PredictionStepResult fixed_point_predict_imn(const Model& model, const PhaseMaterials& materials,
                                             const std::vector<MaterialState>& states,
                                             const Strain6& dstrain_macro,
                                             const SolverConfig& cfg);

PredictionStepResult fixed_point_predict_dmn(const Model& model, const PhaseMaterials& materials,
                                             const std::vector<MaterialState>& states,
                                             const Strain6& dstrain_macro, const SolverConfig& cfg,
                                             bool use_residual);

struct PathResult {
    std::vector<Strain6> strain;  // cumulative macro strain after each step
    std::vector<Stress6> stress;  // cumulative macro stress after each step
    std::vector<int> iterations;
    std::vector<long long> elapsed_ns;
    std::vector<long> ops;
    int active_nodes = 0;
    std::optional<int> failed_step; // first non-converged step, if any

    bool complete() const { return !failed_step.has_value(); }
    long long total_iterations() const;
    long long total_elapsed_ns() const;
};

/// Drives a sequence of macro strain increments from virgin states,
/// committing after each converged step. Halts at the first non-converged
/// step with the partial history retained.
PathResult run_loading_path(const Model& model, const PhaseMaterials& materials,
                            const std::vector<Strain6>& increments, const SolverConfig& cfg);
PathResult run_loading_path(const OnlinePlan& plan, const std::vector<Strain6>& increments,
                            const SolverConfig& cfg);

/// Uniaxial strain ramps in the three normal directions followed by the
/// three simple shear ramps, each split into equal increments.
std::array<std::vector<Strain6>, 6> standard_loading_paths(double amplitude, int steps);

} // namespace matnet
