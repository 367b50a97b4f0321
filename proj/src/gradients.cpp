#include <array>
#include <cmath>

#include "matnet/errors.hpp"
#include "matnet/parallel.hpp"
#include "matnet/training.hpp"

// Reverse-mode differentiation of the forward homogenization. The batch
// engine caches everything that depends only on the parameters (weights,
// volume fractions, interface matrices, rotation operators and their angle
// derivatives) once per call and reuses it across samples. Per-sample
// gradients are written to slots and reduced in sample order so the result
// is independent of the thread budget.

namespace matnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

enum class NodeKind : unsigned char { inactive, leaf, pass_left, pass_right, block };

struct ParamCache {
    Topology topo;
    bool dmn = false;
    WeightField weights;
    std::vector<NodeKind> kind;   // heap, [node_count+1]
    std::vector<double> f1;       // block nodes
    // Rotation-free variant: interface data per parent.
    std::vector<Vec3> normal;
    std::vector<Mat63> hmat;
    std::vector<Vec3> dn_dtheta;
    std::vector<Vec3> dn_dphi;
    // Rotation-based variant: per node.
    std::vector<Mat6> rot;
    std::vector<std::array<Mat6, 3>> drot;
};

ParamCache build_cache(const Model& model, bool with_grad) {
    ParamCache pc;
    pc.topo = model.topology;
    pc.dmn = model.type() == ModelType::dmn;
    pc.weights = propagate_weights(pc.topo, model.activations());
    const int nn = pc.topo.node_count();
    pc.kind.assign(static_cast<std::size_t>(nn) + 1, NodeKind::inactive);
    pc.f1.assign(static_cast<std::size_t>(nn) + 1, 0.0);
    for (int h = 1; h <= nn; ++h) {
        if (!pc.weights.active(h)) continue;
        if (pc.topo.is_leaf(h)) {
            pc.kind[static_cast<std::size_t>(h)] = NodeKind::leaf;
        } else if (!pc.weights.active(2 * h + 1)) {
            pc.kind[static_cast<std::size_t>(h)] = NodeKind::pass_left;
        } else if (!pc.weights.active(2 * h)) {
            pc.kind[static_cast<std::size_t>(h)] = NodeKind::pass_right;
        } else {
            pc.kind[static_cast<std::size_t>(h)] = NodeKind::block;
            pc.f1[static_cast<std::size_t>(h)] = pc.weights.left_fraction(h);
        }
    }
    if (pc.dmn) {
        const auto& params = std::get<DmnParams>(model.params);
        pc.rot.resize(static_cast<std::size_t>(nn) + 1);
        if (with_grad) pc.drot.resize(static_cast<std::size_t>(nn) + 1);
        for (int h = 1; h <= nn; ++h) {
            if (pc.kind[static_cast<std::size_t>(h)] == NodeKind::inactive) continue;
            const EulerAngles& a = params.angles[static_cast<std::size_t>(h - 1)];
            const Mat3 q = rotation_matrix(a);
            pc.rot[static_cast<std::size_t>(h)] = rotation_6(q);
            if (with_grad) {
                Mat3 dq[3];
                rotation_matrix_derivatives(a, dq[0], dq[1], dq[2]);
                for (int k = 0; k < 3; ++k)
                    pc.drot[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)] =
                        bond_stress_bilinear(dq[k], q) + bond_stress_bilinear(q, dq[k]);
            }
        }
    } else {
        const auto& params = std::get<ImnParams>(model.params);
        const int np = pc.topo.parent_count();
        pc.normal.resize(static_cast<std::size_t>(np) + 1);
        pc.hmat.resize(static_cast<std::size_t>(np) + 1);
        if (with_grad) {
            pc.dn_dtheta.resize(static_cast<std::size_t>(np) + 1);
            pc.dn_dphi.resize(static_cast<std::size_t>(np) + 1);
        }
        for (int h = 1; h <= np; ++h) {
            if (pc.kind[static_cast<std::size_t>(h)] != NodeKind::block) continue;
            pc.normal[static_cast<std::size_t>(h)] =
                normal_from_angles(params.theta(h - 1), params.phi(h - 1));
            pc.hmat[static_cast<std::size_t>(h)] = h_matrix(pc.normal[static_cast<std::size_t>(h)]);
            if (with_grad)
                normal_from_angles_jacobian(params.theta(h - 1), params.phi(h - 1),
                                            pc.dn_dtheta[static_cast<std::size_t>(h)],
                                            pc.dn_dphi[static_cast<std::size_t>(h)]);
        }
    }
    return pc;
}

struct SampleWork {
    std::vector<Mat6> c_out;  // node outputs (post-rotation)
    std::vector<Mat6> c_pre;  // pre-rotation values (rotation-based variant)
    std::vector<Mat3> ginv;   // block: [H^T (f2 C1 + f1 C2) H]^-1
    std::vector<Mat63> pmat;  // block: (C2 - C1) H
    std::vector<Mat6> cbar;   // adjoints
    std::vector<double> wbar; // weight adjoints

    void resize(int node_count, bool dmn) {
        const auto n = static_cast<std::size_t>(node_count) + 1;
        c_out.resize(n);
        if (dmn) c_pre.resize(n);
        ginv.resize(n);
        pmat.resize(n);
        cbar.resize(n);
        wbar.resize(n);
    }
};

// Forward through the tree for one sample; returns the top stiffness.
Mat6 forward_sample(const ParamCache& pc, const Stiffness6& cp1, const Stiffness6& cp2,
                    SampleWork& w) {
    const Topology& topo = pc.topo;
    for (int h = topo.node_count(); h >= 1; --h) {
        const auto hs = static_cast<std::size_t>(h);
        Mat6 pre;
        switch (pc.kind[hs]) {
            case NodeKind::inactive:
                continue;
            case NodeKind::leaf:
                pre = (topo.leaf_index(h) % 2 == 1) ? cp1 : cp2;
                break;
            case NodeKind::pass_left:
                pre = w.c_out[static_cast<std::size_t>(2 * h)];
                break;
            case NodeKind::pass_right:
                pre = w.c_out[static_cast<std::size_t>(2 * h + 1)];
                break;
            case NodeKind::block: {
                const Mat6& c1 = w.c_out[static_cast<std::size_t>(2 * h)];
                const Mat6& c2 = w.c_out[static_cast<std::size_t>(2 * h + 1)];
                const double f1 = pc.f1[hs];
                const double f2 = 1.0 - f1;
                const Mat63 hm = pc.dmn ? h_matrix(Vec3(0, 0, 1)) : pc.hmat[hs];
                const Mat3 d = hm.transpose() * (f2 * c1 + f1 * c2) * hm;
                const double det = d.determinant();
                const double scale = d.cwiseAbs().maxCoeff();
                if (!(std::abs(det) > 1e-30 * std::max(scale * scale * scale, 1e-300)))
                    throw SingularInterfaceError("interface matrix H^T C H is singular");
                w.ginv[hs] = d.inverse();
                w.pmat[hs] = (c2 - c1) * hm;
                pre = f1 * c1 + f2 * c2 -
                      (f1 * f2) * (w.pmat[hs] * w.ginv[hs] * w.pmat[hs].transpose());
                break;
            }
        }
        if (pc.dmn) {
            w.c_pre[hs] = pre;
            const Mat6& m = pc.rot[hs];
            w.c_out[hs] = m * pre * m.transpose();
        } else {
            w.c_out[hs] = pre;
        }
    }
    return w.c_out[1];
}

// Packed layout offsets.
struct Layout {
    int z_count;
    int total;
    bool dmn;
    int angle_base() const { return z_count; }      // 3 per node, heap order
    int theta_base() const { return z_count; }      // per parent
    int phi_base(int parents) const { return z_count + parents; }
};

Layout layout_of(const Model& model) {
    Layout l{};
    l.z_count = model.topology.base_count();
    l.dmn = model.type() == ModelType::dmn;
    l.total = model.parameter_count();
    return l;
}

// Backward pass: seeds w.cbar[1], writes into grad (packed layout).
void backward_sample(const ParamCache& pc, SampleWork& w, const Layout& lay,
                     Eigen::Ref<Eigen::VectorXd> grad) {
    const Topology& topo = pc.topo;
    const int nn = topo.node_count();
    const int parents = topo.parent_count();
    std::fill(w.wbar.begin(), w.wbar.end(), 0.0);
    for (int h = 2; h <= nn; ++h) w.cbar[static_cast<std::size_t>(h)].setZero();

    for (int h = 1; h <= nn; ++h) {
        const auto hs = static_cast<std::size_t>(h);
        if (pc.kind[hs] == NodeKind::inactive) continue;
        Mat6 gb = w.cbar[hs];
        if (pc.dmn) {
            const Mat6& m = pc.rot[hs];
            const Mat6 mbar = (gb + gb.transpose()) * m * w.c_pre[hs];
            const int base = lay.angle_base() + 3 * (h - 1);
            for (int k = 0; k < 3; ++k)
                grad(base + k) += (mbar.array() * pc.drot[hs][static_cast<std::size_t>(k)].array()).sum();
            gb = m.transpose() * gb * m; // adjoint of the pre-rotation value
        }
        switch (pc.kind[hs]) {
            case NodeKind::leaf:
                break;
            case NodeKind::pass_left:
                w.cbar[static_cast<std::size_t>(2 * h)] += gb;
                break;
            case NodeKind::pass_right:
                w.cbar[static_cast<std::size_t>(2 * h + 1)] += gb;
                break;
            case NodeKind::block: {
                const int l = 2 * h, r = 2 * h + 1;
                const Mat6& c1 = w.c_out[static_cast<std::size_t>(l)];
                const Mat6& c2 = w.c_out[static_cast<std::size_t>(r)];
                const double f1 = pc.f1[hs];
                const double f2 = 1.0 - f1;
                const double s = f1 * f2;
                const Mat63 hm = pc.dmn ? h_matrix(Vec3(0, 0, 1)) : pc.hmat[hs];
                const Mat3& g = w.ginv[hs];
                const Mat63& p = w.pmat[hs];

                const Mat63 pg = p * g;
                const Mat6 t = pg * p.transpose();
                Mat6 c1b = f1 * gb;
                Mat6 c2b = f2 * gb;
                double f1b = (gb.array() * (c1 - c2).array()).sum();
                f1b += -(gb.array() * t.array()).sum() * (1.0 - 2.0 * f1);
                const Mat63 pb = -s * ((gb + gb.transpose()) * pg);
                const Mat3 dbar = s * (pg.transpose() * gb * pg);
                const Mat6 eb = hm * dbar * hm.transpose();
                c1b += f2 * eb;
                c2b += f1 * eb;
                f1b += (eb.array() * (c2 - c1).array()).sum();
                const Mat6 dlb = pb * hm.transpose();
                c2b += dlb;
                c1b -= dlb;

                w.cbar[static_cast<std::size_t>(l)] += c1b;
                w.cbar[static_cast<std::size_t>(r)] += c2b;
                const double wl = pc.weights.w[static_cast<std::size_t>(l)];
                const double wr = pc.weights.w[static_cast<std::size_t>(r)];
                const double sum = wl + wr;
                w.wbar[static_cast<std::size_t>(l)] += f1b * wr / (sum * sum);
                w.wbar[static_cast<std::size_t>(r)] -= f1b * wl / (sum * sum);

                if (!pc.dmn) {
                    const Mat6 e = f2 * c1 + f1 * c2;
                    const Mat63 hb = (c2 - c1).transpose() * pb +
                                     e * hm * (dbar + dbar.transpose());
                    const Vec3 nb{hb(0, 0) + hb(4, 2) + hb(5, 1),
                                  hb(1, 1) + hb(3, 2) + hb(5, 0),
                                  hb(2, 2) + hb(3, 1) + hb(4, 0)};
                    grad(lay.theta_base() + h - 1) += nb.dot(pc.dn_dtheta[hs]);
                    grad(lay.phi_base(parents) + h - 1) += nb.dot(pc.dn_dphi[hs]);
                }
                break;
            }
            case NodeKind::inactive:
                break;
        }
    }

    // Parent weights are sums of child weights; push adjoints down, then
    // through the ReLU at the leaves. Active leaves have z > 0 where the
    // ReLU derivative is one; inactive leaves stay at zero gradient.
    for (int h = 1; h < topo.first_leaf(); ++h) {
        if (pc.kind[static_cast<std::size_t>(h)] == NodeKind::inactive) continue;
        w.wbar[static_cast<std::size_t>(2 * h)] += w.wbar[static_cast<std::size_t>(h)];
        w.wbar[static_cast<std::size_t>(2 * h + 1)] += w.wbar[static_cast<std::size_t>(h)];
    }
    for (int h = topo.first_leaf(); h <= nn; ++h) {
        if (pc.kind[static_cast<std::size_t>(h)] != NodeKind::leaf) continue;
        grad(topo.leaf_index(h) - 1) += w.wbar[static_cast<std::size_t>(h)];
    }
}

} // namespace

BatchEval evaluate_batch(const Model& model, std::span<const TrainingSample> batch,
                         const LossConfig& cfg, bool with_grad, int threads) {
    if (batch.empty()) throw ConfigError("empty batch");
    const ParamCache pc = build_cache(model, with_grad);
    const Layout lay = layout_of(model);
    const auto n = batch.size();

    std::vector<double> ratio(n);   // |C - Chat|^2 / |C|^2
    Eigen::MatrixXd grads;          // one column per sample
    if (with_grad) grads.setZero(lay.total, static_cast<Eigen::Index>(n));

    const int budget = resolve_threads(threads);
    parallel_chunks(n, budget, [&](int, std::size_t begin, std::size_t end) {
        SampleWork work;
        work.resize(pc.topo.node_count(), pc.dmn);
        for (std::size_t j = begin; j < end; ++j) {
            const TrainingSample& sample = batch[j];
            const double target_norm2 = sample.target.squaredNorm();
            if (!(target_norm2 > 0.0))
                throw ConfigError("invalid sample: zero-norm target stiffness");
            const Mat6 chat = forward_sample(pc, sample.phase1, sample.phase2, work);
            const Mat6 diff = chat - sample.target;
            ratio[j] = diff.squaredNorm() / target_norm2;
            if (with_grad) {
                work.cbar[1] = diff / target_norm2;
                backward_sample(pc, work, lay, grads.col(static_cast<Eigen::Index>(j)));
            }
        }
    });

    BatchEval out;
    double loss_sum = 0.0, err_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        loss_sum += ratio[j];
        err_sum += std::sqrt(ratio[j]);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.data_loss = 0.5 * inv_n * loss_sum;
    out.mean_rel_error = inv_n * err_sum;

    const auto& z = model.activations();
    double relu_sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) relu_sum += std::max(z(i), 0.0);
    const double excess = relu_sum - cfg.xi;
    out.reg_loss = cfg.eta * excess * excess;

    if (with_grad) {
        out.grad.setZero(lay.total);
        for (Eigen::Index j = 0; j < grads.cols(); ++j) out.grad += grads.col(j);
        out.grad *= inv_n;
        const double reg_coeff = 2.0 * cfg.eta * excess;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            if (z(i) > 0.0) out.grad(i) += reg_coeff;
    }
    return out;
}

double loss(const Model& model, std::span<const TrainingSample> batch, const LossConfig& cfg) {
    return evaluate_batch(model, batch, cfg, false, 1).total();
}

Eigen::VectorXd grad_loss(const Model& model, std::span<const TrainingSample> batch,
                          const LossConfig& cfg, int threads) {
    return evaluate_batch(model, batch, cfg, true, threads).grad;
}

double mean_relative_error(const Model& model, std::span<const TrainingSample> samples) {
    if (samples.empty()) throw ConfigError("empty sample set");
    LossConfig cfg;
    cfg.eta = 0.0;
    return evaluate_batch(model, samples, cfg, false, 1).mean_rel_error;
}

Eigen::VectorXd pack_params(const Model& model) {
    Eigen::VectorXd out(model.parameter_count());
    if (const auto* d = std::get_if<DmnParams>(&model.params)) {
        const int b = model.topology.base_count();
        out.head(b) = d->z;
        for (std::size_t i = 0; i < d->angles.size(); ++i) {
            out(b + 3 * static_cast<Eigen::Index>(i) + 0) = d->angles[i].alpha;
            out(b + 3 * static_cast<Eigen::Index>(i) + 1) = d->angles[i].beta;
            out(b + 3 * static_cast<Eigen::Index>(i) + 2) = d->angles[i].gamma;
        }
    } else {
        const auto& p = std::get<ImnParams>(model.params);
        const int b = model.topology.base_count();
        const int np = model.topology.parent_count();
        out.head(b) = p.z;
        out.segment(b, np) = p.theta;
        out.segment(b + np, np) = p.phi;
    }
    return out;
}

void unpack_params(Model& model, const Eigen::VectorXd& packed) {
    if (packed.size() != model.parameter_count())
        throw ConfigError("packed parameter vector has the wrong length");
    if (auto* d = std::get_if<DmnParams>(&model.params)) {
        const int b = model.topology.base_count();
        d->z = packed.head(b);
        for (std::size_t i = 0; i < d->angles.size(); ++i) {
            d->angles[i].alpha = packed(b + 3 * static_cast<Eigen::Index>(i) + 0);
            d->angles[i].beta = packed(b + 3 * static_cast<Eigen::Index>(i) + 1);
            d->angles[i].gamma = packed(b + 3 * static_cast<Eigen::Index>(i) + 2);
        }
    } else {
        auto& p = std::get<ImnParams>(model.params);
        const int b = model.topology.base_count();
        const int np = model.topology.parent_count();
        p.z = packed.head(b);
        p.theta = packed.segment(b, np);
        p.phi = packed.segment(b + np, np);
    }
}

} // namespace matnet
