#include "matnet/network.hpp"

#include <cmath>

#include "matnet/errors.hpp"
#include "matnet/rng.hpp"

namespace matnet {

const Eigen::VectorXd& Model::activations() const {
    if (const auto* d = std::get_if<DmnParams>(&params)) return d->z;
    return std::get<ImnParams>(params).z;
}

Eigen::VectorXd& Model::activations() {
    if (auto* d = std::get_if<DmnParams>(&params)) return d->z;
    return std::get<ImnParams>(params).z;
}

int Model::parameter_count() const {
    if (const auto* d = std::get_if<DmnParams>(&params)) return d->parameter_count();
    return std::get<ImnParams>(params).parameter_count();
}

WeightField propagate_weights(const Topology& topo, const Eigen::VectorXd& z) {
    WeightField field;
    field.w.assign(static_cast<std::size_t>(topo.node_count()) + 1, 0.0);
    const int first = topo.first_leaf();
    for (int n = 0; n < topo.base_count(); ++n)
        field.w[static_cast<std::size_t>(first + n)] = std::max(z(n), 0.0);
    for (int h = first - 1; h >= 1; --h)
        field.w[static_cast<std::size_t>(h)] =
            field.w[static_cast<std::size_t>(2 * h)] + field.w[static_cast<std::size_t>(2 * h + 1)];
    if (field.w[1] <= 0.0)
        throw DegenerateNetworkError("all base activations are non-positive");
    return field;
}

namespace {

// Shared interface solve: returns G = [H^T (f2 C1 + f1 C2) H]^-1 and H.
void interface_inverse(const Stiffness6& c1, const Stiffness6& c2, double f1, const Vec3& n,
                       Mat63& h, Mat3& g) {
    h = h_matrix(n);
    const double f2 = 1.0 - f1;
    const Mat3 d = h.transpose() * (f2 * c1 + f1 * c2) * h;
    const double det = d.determinant();
    const double scale = d.cwiseAbs().maxCoeff();
    if (!(std::abs(det) > 1e-30 * std::max(scale * scale * scale, 1e-300)))
        throw SingularInterfaceError("interface matrix H^T C H is singular");
    g = d.inverse();
}

} // namespace

LaminateResult laminate_block(const Stiffness6& c1, const Stiffness6& c2, double f1,
                              const Vec3& n) {
    LaminateResult out;
    if (f1 <= 0.0) {
        out.stiffness = c2;
        out.strain_jump.setZero();
        return out;
    }
    if (f1 >= 1.0) {
        out.stiffness = c1;
        out.strain_jump.setZero();
        return out;
    }
    Mat63 h;
    Mat3 g;
    interface_inverse(c1, c2, f1, n, h, g);
    const double f2 = 1.0 - f1;
    const Mat6 delta = c2 - c1;
    out.strain_jump = (f1 * f2) * (g * (h.transpose() * delta));
    out.stiffness = f1 * c1 + f2 * c2 - delta * h * out.strain_jump;
    return out;
}

LaminateAffineResult laminate_block_affine(const Stiffness6& c1, const Stiffness6& c2,
                                           const Stress6& dsig1, const Stress6& dsig2,
                                           double f1, const Vec3& n) {
    LaminateAffineResult out;
    if (f1 <= 0.0 || f1 >= 1.0) {
        const bool first = f1 >= 1.0;
        out.stiffness = first ? c1 : c2;
        out.residual = first ? dsig1 : dsig2;
        out.strain_jump.setZero();
        out.jump_offset.setZero();
        return out;
    }
    Mat63 h;
    Mat3 g;
    interface_inverse(c1, c2, f1, n, h, g);
    const double f2 = 1.0 - f1;
    const Mat6 delta = c2 - c1;
    out.strain_jump = (f1 * f2) * (g * (h.transpose() * delta));
    out.jump_offset = (f1 * f2) * (g * (h.transpose() * (dsig2 - dsig1)));
    out.stiffness = f1 * c1 + f2 * c2 - delta * h * out.strain_jump;
    out.residual = f1 * dsig1 + f2 * dsig2 - delta * (h * out.jump_offset);
    return out;
}

namespace {

template <typename LeafStiffness, typename ParentFinish>
Stiffness6 forward_tree(const Topology& topo, const Eigen::VectorXd& z,
                        LeafStiffness&& leaf_stiffness, ParentFinish&& parent_block) {
    const WeightField field = propagate_weights(topo, z);
    std::vector<Stiffness6> c(static_cast<std::size_t>(topo.node_count()) + 1);
    for (int h = topo.node_count(); h >= 1; --h) {
        if (!field.active(h)) continue;
        if (topo.is_leaf(h)) {
            c[static_cast<std::size_t>(h)] = leaf_stiffness(h);
            continue;
        }
        const int l = 2 * h, r = 2 * h + 1;
        Stiffness6 pre;
        if (!field.active(r)) {
            pre = c[static_cast<std::size_t>(l)];
        } else if (!field.active(l)) {
            pre = c[static_cast<std::size_t>(r)];
        } else {
            pre = parent_block(h, c[static_cast<std::size_t>(l)], c[static_cast<std::size_t>(r)],
                               field.left_fraction(h), true);
            c[static_cast<std::size_t>(h)] = pre;
            continue;
        }
        c[static_cast<std::size_t>(h)] = parent_block(h, pre, pre, 1.0, false);
    }
    return c[1];
}

} // namespace

Stiffness6 forward_dmn(const Topology& topo, const DmnParams& params, const Stiffness6& cp1,
                       const Stiffness6& cp2) {
    const Vec3 e3{0.0, 0.0, 1.0};
    return forward_tree(
        topo, params.z,
        [&](int h) {
            const Stiffness6& base = (topo.leaf_index(h) % 2 == 1) ? cp1 : cp2;
            return rotate_stiffness(params.angles[static_cast<std::size_t>(h - 1)], base);
        },
        [&](int h, const Stiffness6& cl, const Stiffness6& cr, double f1, bool laminate) {
            const Stiffness6 pre = laminate ? laminate_block(cl, cr, f1, e3).stiffness : cl;
            return rotate_stiffness(params.angles[static_cast<std::size_t>(h - 1)], pre);
        });
}

Stiffness6 forward_imn(const Topology& topo, const ImnParams& params, const Stiffness6& cp1,
                       const Stiffness6& cp2) {
    return forward_tree(
        topo, params.z,
        [&](int h) -> Stiffness6 { return (topo.leaf_index(h) % 2 == 1) ? cp1 : cp2; },
        [&](int h, const Stiffness6& cl, const Stiffness6& cr, double f1, bool laminate) {
            if (!laminate) return cl;
            const Vec3 n = normal_from_angles(params.theta(h - 1), params.phi(h - 1));
            return laminate_block(cl, cr, f1, n).stiffness;
        });
}

Stiffness6 forward_model(const Model& model, const Stiffness6& cp1, const Stiffness6& cp2) {
    if (const auto* d = std::get_if<DmnParams>(&model.params))
        return forward_dmn(model.topology, *d, cp1, cp2);
    return forward_imn(model.topology, std::get<ImnParams>(model.params), cp1, cp2);
}

int count_active_nodes(const Model& model) {
    const auto& z = model.activations();
    int count = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (z(i) > 0.0) ++count;
    return count;
}

Model initialize_model(ModelType type, const Topology& topo, Rng& rng) {
    Model model;
    model.topology = topo;
    const double lo = 2.0 / (3.0 * topo.base_count());
    const double hi = 4.0 / (3.0 * topo.base_count());
    Eigen::VectorXd z(topo.base_count());
    for (int i = 0; i < topo.base_count(); ++i) z(i) = rng.uniform(lo, hi);
    if (type == ModelType::dmn) {
        DmnParams p;
        p.z = z;
        p.angles.resize(static_cast<std::size_t>(topo.node_count()));
        constexpr double pi = 3.14159265358979323846;
        for (auto& a : p.angles) {
            a.alpha = rng.uniform(-pi, pi);
            a.beta = rng.uniform(-pi, pi);
            a.gamma = rng.uniform(-pi, pi);
        }
        model.params = std::move(p);
    } else {
        ImnParams p;
        p.z = z;
        p.theta.resize(topo.parent_count());
        p.phi.resize(topo.parent_count());
        for (int i = 0; i < topo.parent_count(); ++i) {
            p.theta(i) = rng.uniform(0.0, 1.0);
            p.phi(i) = rng.uniform(0.0, 1.0);
        }
        model.params = std::move(p);
    }
    return model;
}

} // namespace matnet
