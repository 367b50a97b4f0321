#include "matnet/solvers.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "matnet/errors.hpp"

namespace matnet {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::dmn_residual: return "dmn_residual";
        case Scheme::dmn_no_residual: return "dmn_no_residual";
        case Scheme::imn_fixed_point: return "imn_fixed_point";
        case Scheme::imn_newton: return "imn_newton";
    }
    return "unknown";
}

Scheme scheme_from_name(std::string_view name) {
    if (name == "dmn_residual") return Scheme::dmn_residual;
    if (name == "dmn_no_residual") return Scheme::dmn_no_residual;
    if (name == "imn_fixed_point") return Scheme::imn_fixed_point;
    if (name == "imn_newton") return Scheme::imn_newton;
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

NewtonSystem assemble_newton_system(const Topology& topo, const WeightField& weights,
                                    const std::vector<Vec3>& parent_normals) {
    if (static_cast<int>(weights.w.size()) != topo.node_count() + 1)
        throw ConfigError("weight field does not match topology");
    if (static_cast<int>(parent_normals.size()) < topo.parent_count())
        throw ConfigError("missing parent normals");
    for (int h = 1; h < topo.first_leaf(); ++h) {
        const double sum = weights.w[static_cast<std::size_t>(2 * h)] +
                           weights.w[static_cast<std::size_t>(2 * h + 1)];
        if (std::abs(weights.w[static_cast<std::size_t>(h)] - sum) > 1e-12 * std::max(1.0, sum))
            throw ConfigError("weight field is not a consistent sum tree at node " +
                              std::to_string(h));
    }

    NewtonSystem sys;
    std::vector<int> column(static_cast<std::size_t>(topo.node_count()) + 1, -1);
    for (int h = 1; h < topo.first_leaf(); ++h) {
        if (weights.active(2 * h) && weights.active(2 * h + 1)) {
            column[static_cast<std::size_t>(h)] = static_cast<int>(sys.retained_parents.size());
            sys.retained_parents.push_back(h);
        }
    }
    for (int h = topo.first_leaf(); h <= topo.node_count(); ++h)
        if (weights.active(h)) sys.active_leaves.push_back(h);

    const auto m = static_cast<Eigen::Index>(sys.active_leaves.size());
    const auto p = static_cast<Eigen::Index>(sys.retained_parents.size());
    sys.a.setZero(6 * m, 3 * p);
    sys.leaf_weights.resize(m);
    for (Eigen::Index row = 0; row < m; ++row) {
        const int leaf = sys.active_leaves[static_cast<std::size_t>(row)];
        sys.leaf_weights(row) = weights.w[static_cast<std::size_t>(leaf)];
        int cur = leaf;
        while (cur > 1) {
            const int par = cur / 2;
            const int col = column[static_cast<std::size_t>(par)];
            if (col >= 0) {
                const double sign = (cur == 2 * par) ? 1.0 : -1.0;
                sys.a.block<6, 3>(6 * row, 3 * col) =
                    (sign / weights.w[static_cast<std::size_t>(cur)]) *
                    h_matrix(parent_normals[static_cast<std::size_t>(par - 1)]);
            }
            cur = par;
        }
    }
    return sys;
}

OnlinePlan::OnlinePlan(const Model& model, const PhaseMaterials& materials)
    : model_(model), materials_(materials), topo_(model.topology) {
    weights_ = propagate_weights(topo_, model.activations());
    nodes_.assign(static_cast<std::size_t>(topo_.node_count()) + 1, Node{});

    const bool dmn = model.type() == ModelType::dmn;
    const auto* dparams = std::get_if<DmnParams>(&model_.params);
    const auto* iparams = std::get_if<ImnParams>(&model_.params);

    std::vector<Vec3> normals(static_cast<std::size_t>(topo_.parent_count()), Vec3(0, 0, 1));
    for (int h = 1; h <= topo_.node_count(); ++h) {
        auto& node = nodes_[static_cast<std::size_t>(h)];
        if (!weights_.active(h)) continue;
        if (dmn) {
            node.rot = rotation_6(dparams->angles[static_cast<std::size_t>(h - 1)]);
            node.rotated = true;
        }
        if (topo_.is_leaf(h)) {
            node.kind = Node::leaf;
            node.leaf_slot = static_cast<int>(active_leaves_.size());
            active_leaves_.push_back(h);
            const bool odd = topo_.leaf_index(h) % 2 == 1;
            node.material = odd ? &materials_.phase1 : &materials_.phase2;
            node.c_elastic = material_elastic_stiffness(*node.material);
            continue;
        }
        const bool left = weights_.active(2 * h);
        const bool right = weights_.active(2 * h + 1);
        if (left && right) {
            node.kind = Node::block;
            node.f1 = weights_.left_fraction(h);
            node.normal = dmn ? Vec3(0, 0, 1)
                              : normal_from_angles(iparams->theta(h - 1), iparams->phi(h - 1));
            if (!dmn) normals[static_cast<std::size_t>(h - 1)] = node.normal;
            node.hn = h_matrix(node.normal);
            block_parents_.push_back(h);
        } else {
            node.kind = left ? Node::pass_left : Node::pass_right;
        }
    }

    if (!dmn) {
        system_ = assemble_newton_system(topo_, weights_, normals);
        has_system_ = true;
    }
}

std::vector<MaterialState> OnlinePlan::virgin_states() const {
    return std::vector<MaterialState>(static_cast<std::size_t>(topo_.base_count()));
}

namespace {

struct TreeScratch {
    std::vector<Mat6> c;      // per node working stiffness
    std::vector<Stress6> ds;  // per node working residual stress
    std::vector<Mat36> b;     // per block node
    std::vector<Vec3> bdel;
    std::vector<Strain6> eps; // per node incoming strain (working frame)
};

} // namespace

/// Evaluate base-node laws at the converged strain increments, commit state
/// updates, and homogenize the macro stress by the normalized rule of
/// mixtures over active base nodes.
Stress6 OnlinePlan::commit(const std::vector<Strain6>& leaf_dstrain,
                           const std::vector<MaterialState>& states,
                           std::vector<MaterialState>& next, long& ops) const {
    next = states;
    Stress6 weighted = Stress6::Zero();
    double wsum = 0.0;
    for (std::size_t slot = 0; slot < active_leaves_.size(); ++slot) {
        const int h = active_leaves_[slot];
        const Node& node = nodes_[static_cast<std::size_t>(h)];
        const int base = topo_.leaf_index(h) - 1;
        const StepResult r =
            material_step(*node.material, states[static_cast<std::size_t>(base)], leaf_dstrain[slot]);
        ++ops;
        next[static_cast<std::size_t>(base)] = r.next;
        const double w = weights_.w[static_cast<std::size_t>(h)];
        weighted += w * r.dstress;
        wsum += w;
    }
    return weighted / wsum;
}

PredictionStepResult OnlinePlan::passthrough_step(const std::vector<MaterialState>& states,
                                                  const Strain6& de) const {
    // No retained interfaces: de-homogenization is exact in one sweep.
    PredictionStepResult out;
    std::vector<Strain6> leaf_de(active_leaves_.size());
    for (std::size_t slot = 0; slot < active_leaves_.size(); ++slot) {
        Strain6 e = de;
        // Walk from the root down to the leaf, un-rotating at each node.
        const int leaf = active_leaves_[slot];
        int path[32];
        int depth = 0;
        for (int cur = leaf; cur >= 1; cur /= 2) path[depth++] = cur;
        for (int k = depth - 1; k >= 0; --k) {
            const Node& node = nodes_[static_cast<std::size_t>(path[k])];
            if (node.rotated) e = node.rot.transpose() * e;
        }
        leaf_de[slot] = e;
    }
    out.dstress_macro = commit(leaf_de, states, out.states, out.ops);
    out.iterations = 1;
    out.converged = true;
    return out;
}

PredictionStepResult OnlinePlan::fixed_point_step(const std::vector<MaterialState>& states,
                                                  const Strain6& de, const SolverConfig& cfg,
                                                  bool with_residual, bool secant) const {
    PredictionStepResult out;
    const int nn = topo_.node_count();
    TreeScratch ws;
    ws.c.resize(static_cast<std::size_t>(nn) + 1);
    ws.ds.assign(static_cast<std::size_t>(nn) + 1, Stress6::Zero());
    ws.b.resize(static_cast<std::size_t>(nn) + 1);
    ws.bdel.assign(static_cast<std::size_t>(nn) + 1, Vec3::Zero());
    ws.eps.resize(static_cast<std::size_t>(nn) + 1);

    const std::size_t m = active_leaves_.size();
    std::vector<Strain6> leaf_de(m, Strain6::Zero());
    std::vector<Strain6> leaf_new(m);

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        out.iterations = iter;
        // Base-node linearization at the current strain iterate.
        for (std::size_t slot = 0; slot < m; ++slot) {
            const int h = active_leaves_[slot];
            const Node& node = nodes_[static_cast<std::size_t>(h)];
            const int base = topo_.leaf_index(h) - 1;
            const StepResult r = material_step(*node.material,
                                               states[static_cast<std::size_t>(base)],
                                               leaf_de[slot]);
            ++out.ops;
            const auto hs = static_cast<std::size_t>(h);
            if (secant) {
                ws.c[hs] = secant_stiffness(node.c_elastic, r.dstress, leaf_de[slot]);
                ws.ds[hs].setZero();
            } else {
                ws.c[hs] = r.tangent;
                ws.ds[hs] = r.dstress - r.tangent * leaf_de[slot];
            }
            if (node.rotated) {
                ws.c[hs] = node.rot * ws.c[hs] * node.rot.transpose();
                if (with_residual) ws.ds[hs] = node.rot * ws.ds[hs];
            }
        }
        // Forward homogenization.
        for (int h = topo_.parent_count(); h >= 1; --h) {
            const auto hs = static_cast<std::size_t>(h);
            const Node& node = nodes_[hs];
            if (node.kind == Node::inactive) continue;
            if (node.kind == Node::pass_left || node.kind == Node::pass_right) {
                const auto child = static_cast<std::size_t>(2 * h + (node.kind == Node::pass_right));
                ws.c[hs] = ws.c[child];
                ws.ds[hs] = ws.ds[child];
            } else {
                const auto l = static_cast<std::size_t>(2 * h);
                const auto r = static_cast<std::size_t>(2 * h + 1);
                const LaminateAffineResult lam = laminate_block_affine(
                    ws.c[l], ws.c[r], ws.ds[l], ws.ds[r], node.f1, node.normal);
                ++out.ops;
                ws.c[hs] = lam.stiffness;
                ws.ds[hs] = lam.residual;
                ws.b[hs] = lam.strain_jump;
                ws.bdel[hs] = lam.jump_offset;
            }
            if (node.rotated) {
                ws.c[hs] = node.rot * ws.c[hs] * node.rot.transpose();
                if (with_residual) ws.ds[hs] = node.rot * ws.ds[hs];
            }
        }
        // Backward de-homogenization of the macro strain increment.
        ws.eps[1] = de;
        for (int h = 1; h <= topo_.parent_count(); ++h) {
            const auto hs = static_cast<std::size_t>(h);
            const Node& node = nodes_[hs];
            if (node.kind == Node::inactive) continue;
            Strain6 local = node.rotated ? Strain6(node.rot.transpose() * ws.eps[hs]) : ws.eps[hs];
            if (node.kind == Node::pass_left) {
                ws.eps[static_cast<std::size_t>(2 * h)] = local;
            } else if (node.kind == Node::pass_right) {
                ws.eps[static_cast<std::size_t>(2 * h + 1)] = local;
            } else {
                const Vec3 b = ws.b[hs] * local + ws.bdel[hs];
                const Strain6 jump = nodes_[hs].hn * b;
                ws.eps[static_cast<std::size_t>(2 * h)] = local + jump / node.f1;
                ws.eps[static_cast<std::size_t>(2 * h + 1)] = local - jump / (1.0 - node.f1);
            }
        }
        double diff2 = 0.0, den2 = 0.0;
        for (std::size_t slot = 0; slot < m; ++slot) {
            const int h = active_leaves_[slot];
            const Node& node = nodes_[static_cast<std::size_t>(h)];
            Strain6 e = ws.eps[static_cast<std::size_t>(h)];
            if (node.rotated) e = node.rot.transpose() * e;
            leaf_new[slot] = e;
            diff2 += (leaf_new[slot] - leaf_de[slot]).squaredNorm();
            den2 += leaf_de[slot].squaredNorm();
        }
        const double diff = std::sqrt(diff2);
        const double den = std::sqrt(den2);
        leaf_de.swap(leaf_new);
        // Relative test with a guarded denominator.
        const bool converged = den > 1e-14 ? diff <= cfg.tol * den : diff <= 1e-14;
        out.residual = den > 1e-14 ? diff / den : diff;
        if (converged) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        out.states = states;
        return out;
    }
    out.dstress_macro = commit(leaf_de, states, out.states, out.ops);
    return out;
}

PredictionStepResult OnlinePlan::newton_step(const std::vector<MaterialState>& states,
                                             const Strain6& de, const SolverConfig& cfg) const {
    PredictionStepResult out;
    const auto m = static_cast<Eigen::Index>(active_leaves_.size());
    const auto p = static_cast<Eigen::Index>(system_.retained_parents.size());
    const Eigen::MatrixXd& a = system_.a;

    Eigen::VectorXd jump = Eigen::VectorXd::Zero(3 * p);
    Eigen::VectorXd local(6 * m);
    Eigen::VectorXd stresses(6 * m);
    std::vector<Stiffness6> tangents(static_cast<std::size_t>(m));
    std::vector<Strain6> leaf_de(static_cast<std::size_t>(m));

    // Absolute residual floor in GPa units.
    constexpr double kFloor = 1e-14;
    double r0_norm = -1.0;
    int updates = 0;

    while (true) {
        local = a * jump;
        for (Eigen::Index slot = 0; slot < m; ++slot)
            leaf_de[static_cast<std::size_t>(slot)] = de + local.segment<6>(6 * slot);
        for (Eigen::Index slot = 0; slot < m; ++slot) {
            const int h = active_leaves_[static_cast<std::size_t>(slot)];
            const Node& node = nodes_[static_cast<std::size_t>(h)];
            const int base = topo_.leaf_index(h) - 1;
            const StepResult r = material_step(*node.material,
                                               states[static_cast<std::size_t>(base)],
                                               leaf_de[static_cast<std::size_t>(slot)]);
            ++out.ops;
            stresses.segment<6>(6 * slot) = system_.leaf_weights(slot) * r.dstress;
            tangents[static_cast<std::size_t>(slot)] = r.tangent;
        }
        const Eigen::VectorXd residual = a.transpose() * stresses;
        const double rnorm = residual.norm();
        if (r0_norm < 0.0) r0_norm = rnorm;
        out.residual = rnorm;
        if (rnorm <= std::max(cfg.tol * r0_norm, kFloor)) {
            out.converged = true;
            break;
        }
        if (updates >= cfg.max_iter) break;

        Eigen::MatrixXd wka(6 * m, 3 * p);
        for (Eigen::Index slot = 0; slot < m; ++slot)
            wka.middleRows<6>(6 * slot) = system_.leaf_weights(slot) *
                                          (tangents[static_cast<std::size_t>(slot)] *
                                           a.middleRows<6>(6 * slot));
        const Eigen::MatrixXd jac = a.transpose() * wka;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            const Eigen::Index block = std::min<Eigen::Index>(lu.rank() / 3, p - 1);
            const int parent = system_.retained_parents[static_cast<std::size_t>(block)];
            throw SingularInterfaceError(
                "Newton Jacobian is rank deficient near parent node " + std::to_string(parent));
        }
        jump -= lu.solve(residual);
        ++updates;
    }
    out.iterations = std::max(1, updates);
    if (!out.converged) {
        out.states = states;
        return out;
    }
    out.dstress_macro = commit(leaf_de, states, out.states, out.ops);
    return out;
}

PredictionStepResult OnlinePlan::step(const std::vector<MaterialState>& states,
                                      const Strain6& de, const SolverConfig& cfg) const {
    if (static_cast<int>(states.size()) != topo_.base_count())
        throw ConfigError("state vector does not match the base node count");
    if (block_parents_.empty()) return passthrough_step(states, de);
    const bool dmn = model_.type() == ModelType::dmn;
    switch (cfg.scheme) {
        case Scheme::dmn_residual:
            if (!dmn) throw ConfigError("dmn_residual scheme requires a rotation-based model");
            return fixed_point_step(states, de, cfg, true, false);
        case Scheme::dmn_no_residual:
            if (!dmn) throw ConfigError("dmn_no_residual scheme requires a rotation-based model");
            return fixed_point_step(states, de, cfg, false, true);
        case Scheme::imn_fixed_point:
            if (dmn) throw ConfigError("imn_fixed_point scheme requires a rotation-free model");
            return fixed_point_step(states, de, cfg, false, true);
        case Scheme::imn_newton:
            if (dmn) throw ConfigError("imn_newton scheme requires a rotation-free model");
            return newton_step(states, de, cfg);
    }
    throw ConfigError("invalid scheme");
}

PredictionStepResult newton_predict(const Model& model, const PhaseMaterials& materials,
                                    const std::vector<MaterialState>& states,
                                    const Strain6& dstrain_macro, const SolverConfig& cfg) {
    OnlinePlan plan(model, materials);
    SolverConfig c = cfg;
    c.scheme = Scheme::imn_newton;
    return plan.step(states, dstrain_macro, c);
}

PredictionStepResult fixed_point_predict_imn(const Model& model, const PhaseMaterials& materials,
                                             const std::vector<MaterialState>& states,
                                             const Strain6& dstrain_macro,
                                             const SolverConfig& cfg) {
    OnlinePlan plan(model, materials);
    SolverConfig c = cfg;
    c.scheme = Scheme::imn_fixed_point;
    return plan.step(states, dstrain_macro, c);
}

PredictionStepResult fixed_point_predict_dmn(const Model& model, const PhaseMaterials& materials,
                                             const std::vector<MaterialState>& states,
                                             const Strain6& dstrain_macro, const SolverConfig& cfg,
                                             bool use_residual) {
    OnlinePlan plan(model, materials);
    SolverConfig c = cfg;
    c.scheme = use_residual ? Scheme::dmn_residual : Scheme::dmn_no_residual;
    return plan.step(states, dstrain_macro, c);
}

long long PathResult::total_iterations() const {
    long long sum = 0;
    for (int it : iterations) sum += it;
    return sum;
}

long long PathResult::total_elapsed_ns() const {
    long long sum = 0;
    for (long long t : elapsed_ns) sum += t;
    return sum;
}

PathResult run_loading_path(const OnlinePlan& plan, const std::vector<Strain6>& increments,
                            const SolverConfig& cfg) {
    PathResult out;
    out.active_nodes = plan.active_leaf_count();
    std::vector<MaterialState> states = plan.virgin_states();
    Strain6 total_strain = Strain6::Zero();
    Stress6 total_stress = Stress6::Zero();
    for (std::size_t i = 0; i < increments.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const PredictionStepResult r = plan.step(states, increments[i], cfg);
        const auto t1 = std::chrono::steady_clock::now();
        if (!r.converged) {
            out.failed_step = static_cast<int>(i);
            break;
        }
        states = r.states;
        total_strain += increments[i];
        total_stress += r.dstress_macro;
        out.strain.push_back(total_strain);
        out.stress.push_back(total_stress);
        out.iterations.push_back(r.iterations);
        out.ops.push_back(r.ops);
        out.elapsed_ns.push_back(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    return out;
}

PathResult run_loading_path(const Model& model, const PhaseMaterials& materials,
                            const std::vector<Strain6>& increments, const SolverConfig& cfg) {
    OnlinePlan plan(model, materials);
    return run_loading_path(plan, increments, cfg);
}

std::array<std::vector<Strain6>, 6> standard_loading_paths(double amplitude, int steps) {
    std::array<std::vector<Strain6>, 6> paths;
    for (int c = 0; c < 6; ++c) {
        paths[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(steps),
                                                  Strain6::Zero());
        for (auto& inc : paths[static_cast<std::size_t>(c)])
            inc(c) = amplitude / static_cast<double>(steps);
    }
    return paths;
}

} // namespace matnet
