#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "matnet/voigt.hpp"

namespace matnet {

class Rng;

/// Binary tree of depth N: 2^N base nodes, 2^(N+1)-1 nodes total.
/// Nodes use 1-based heap indices: the root is 1, node h has children 2h and
/// 2h+1, and base node n (1-based) sits at heap index 2^N + n - 1. The left
/// child corresponds to the odd child index of the layer-wise numbering.
struct Topology {
    int depth = 1;

    int base_count() const { return 1 << depth; }
    int node_count() const { return (1 << (depth + 1)) - 1; }
    int parent_count() const { return (1 << depth) - 1; }
    int first_leaf() const { return 1 << depth; }
    bool is_leaf(int h) const { return h >= first_leaf(); }
    /// 1-based base-node index of leaf h.
    int leaf_index(int h) const { return h - first_leaf() + 1; }
};

/// Trainable parameters of the rotation-based network: one activation per
/// base node and three Euler angles per node (7 * 2^N - 3 in total).
struct DmnParams {
    Eigen::VectorXd z;               // size 2^N
    std::vector<EulerAngles> angles; // size 2^(N+1)-1, heap order (angles[h-1])

    int parameter_count() const {
        return static_cast<int>(z.size() + 3 * angles.size());
    }
};

/// Trainable parameters of the rotation-free network: one activation per
/// base node and an interface normal direction (theta, phi) per parent node
/// (3 * 2^N - 2 in total).
struct ImnParams {
    Eigen::VectorXd z;     // size 2^N
    Eigen::VectorXd theta; // size 2^N - 1, heap order (theta[h-1])
    Eigen::VectorXd phi;

    int parameter_count() const {
        return static_cast<int>(z.size() + theta.size() + phi.size());
    }
};

enum class ModelType { dmn, imn };

struct Model {
    Topology topology;
    std::variant<DmnParams, ImnParams> params;

    ModelType type() const {
        return std::holds_alternative<DmnParams>(params) ? ModelType::dmn : ModelType::imn;
    }
    const Eigen::VectorXd& activations() const;
    Eigen::VectorXd& activations();
    int parameter_count() const;
};

/// Node weights propagated from the base activations: base weights are
/// ReLU(z) and every parent weight is the sum of its children. Stored in
/// heap order with w[0] unused.
struct WeightField {
    std::vector<double> w;

    double top() const { return w[1]; }
    bool active(int h) const { return w[h] > 0.0; }
    /// Volume fraction of the left child of parent h (requires w[h] > 0).
    double left_fraction(int h) const { return w[2 * h] / w[h]; }
};

/// Throws DegenerateNetworkError when every activation is non-positive.
WeightField propagate_weights(const Topology& topo, const Eigen::VectorXd& z);

struct LaminateResult {
    Stiffness6 stiffness;  // C_h
    Mat36 strain_jump;     // B with b = B eps_h
};

/// Closed-form two-phase laminate with interface normal n:
///   B   = f1 f2 [H^T (f2 C1 + f1 C2) H]^-1 H^T (C2 - C1)
///   C_h = f1 C1 + f2 C2 - (C2 - C1) H B
/// Child strains eps_1 = eps_h + (1/f1) H b and eps_2 = eps_h - (1/f2) H b
/// satisfy traction continuity and the rule of mixtures for any eps_h.
/// Throws SingularInterfaceError when the 3x3 interface matrix is singular.
LaminateResult laminate_block(const Stiffness6& c1, const Stiffness6& c2, double f1,
                              const Vec3& n);

struct LaminateAffineResult {
    Stiffness6 stiffness;
    Stress6 residual;   // dsig_h
    Mat36 strain_jump;  // B
    Vec3 jump_offset;   // b_delta with b = B eps_h + b_delta
};

/// Laminate of two affine laws sigma_k = C_k eps_k + dsig_k. The parent law
/// is sigma_h = C_h eps_h + dsig_h with
///   b_delta = f1 f2 [H^T (f2 C1 + f1 C2) H]^-1 H^T (dsig2 - dsig1)
///   dsig_h  = f1 dsig1 + f2 dsig2 + (C1 - C2) H b_delta.
LaminateAffineResult laminate_block_affine(const Stiffness6& c1, const Stiffness6& c2,
                                           const Stress6& dsig1, const Stress6& dsig2,
                                           double f1, const Vec3& n);

/// Homogenized stiffness at the top node. Base stiffnesses (phase 1 at odd
/// base nodes, phase 2 at even) are rotated by the base-node angles, then
/// each parent laminates its children across n = e3 and rotates the result
/// by its own angles. Zero-weight children are skipped; their sibling passes
/// through with unit volume fraction.
Stiffness6 forward_dmn(const Topology& topo, const DmnParams& params, const Stiffness6& cp1,
                       const Stiffness6& cp2);

/// Rotation-free forward pass: base stiffnesses enter unrotated and each
/// parent laminates across the normal given by its (theta, phi).
Stiffness6 forward_imn(const Topology& topo, const ImnParams& params, const Stiffness6& cp1,
                       const Stiffness6& cp2);

Stiffness6 forward_model(const Model& model, const Stiffness6& cp1, const Stiffness6& cp2);

/// Base nodes with positive activation.
int count_active_nodes(const Model& model);

/// Random parameters: z ~ U(2/(3*2^N), 4/(3*2^N)) so the expected activation
/// sum is one; Euler angles ~ U(-pi, pi); theta, phi ~ U(0, 1).
Model initialize_model(ModelType type, const Topology& topo, Rng& rng);

} // namespace matnet
