#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "matnet/errors.hpp"
#include "matnet/network.hpp"
#include "matnet/rng.hpp"
#include "oracles.hpp"

using namespace matnet;

TEST_CASE("weight propagation: ReLU at the base and sums above") {
    Topology topo{1};
    Eigen::VectorXd z(2);
    z << 0.3, -0.2;
    const WeightField field = propagate_weights(topo, z);
    CHECK(field.w[2] == 0.3);
    CHECK(field.w[3] == 0.0);
    CHECK(field.top() == 0.3);
    CHECK(field.left_fraction(1) == 1.0);

    Topology topo2{2};
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    const WeightField f2 = propagate_weights(topo2, ones);
    for (int h = 1; h <= 3; ++h) CHECK(f2.left_fraction(h) == 0.5);

    Rng rng(5);
    Eigen::VectorXd zr(8);
    for (int i = 0; i < 8; ++i) zr(i) = rng.normal();
    const WeightField fr = propagate_weights(Topology{3}, zr);
    double expected = 0.0;
    for (int i = 0; i < 8; ++i) expected += std::max(zr(i), 0.0);
    CHECK(fr.top() == doctest::Approx(expected).epsilon(1e-15));
    // Exact child-sum invariant.
    for (int h = 1; h <= 7; ++h) CHECK(fr.w[h] == fr.w[2 * h] + fr.w[2 * h + 1]);

    Eigen::VectorXd dead = Eigen::VectorXd::Constant(4, -1.0);
    CHECK_THROWS_AS((void)propagate_weights(Topology{2}, dead), DegenerateNetworkError);
}

TEST_CASE("laminate block identity cases") {
    Rng rng(15);
    const Mat6 c = oracle::random_spd(rng);
    const Vec3 n = oracle::random_unit(rng);
    const LaminateResult same = laminate_block(c, c, 0.42, n);
    CHECK((same.stiffness - c).norm() <= 1e-12 * c.norm());
    CHECK(same.strain_jump.norm() <= 1e-12 * c.norm());

    const Mat6 c2 = oracle::random_spd(rng);
    const LaminateResult full = laminate_block(c, c2, 1.0, n);
    CHECK((full.stiffness - c).norm() == 0.0);
    CHECK(full.strain_jump.norm() == 0.0);
}

TEST_CASE("laminate block matches the brute-force equilibrium solve") {
    Rng rng(25);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat6 c1 = oracle::random_spd(rng);
        const Mat6 c2 = oracle::random_spd(rng);
        const double f1 = rng.uniform(0.05, 0.95);
        const Vec3 n = oracle::random_unit(rng);
        Vec6 eps;
        for (int k = 0; k < 6; ++k) eps(k) = rng.normal();

        const LaminateResult lam = laminate_block(c1, c2, f1, n);
        const oracle::BlockSolution ref =
            oracle::solve_block(c1, c2, Vec6::Zero(), Vec6::Zero(), f1, n, eps);
        CHECK((lam.stiffness * eps - ref.stress_h).norm() <= 1e-8 * ref.stress_h.norm());
        // Child strains from the stored jump matrix agree with the solve.
        const Vec3 b = lam.strain_jump * eps;
        const Vec6 e1 = eps + h_matrix(n) * b / f1;
        const Vec6 e2 = eps - h_matrix(n) * b / (1.0 - f1);
        CHECK((e1 - ref.strain1).norm() <= 1e-7 * std::max(1.0, ref.strain1.norm()));
        CHECK((e2 - ref.strain2).norm() <= 1e-7 * std::max(1.0, ref.strain2.norm()));
    }
}

TEST_CASE("affine laminate block: residual handling") {
    Rng rng(35);
    const Mat6 c1 = oracle::random_spd(rng);
    const Mat6 c2 = oracle::random_spd(rng);
    const Vec3 n = oracle::random_unit(rng);
    Vec6 ds;
    for (int k = 0; k < 6; ++k) ds(k) = rng.normal();

    // Equal residuals pass straight through.
    const LaminateAffineResult eq = laminate_block_affine(c1, c2, ds, ds, 0.3, n);
    CHECK(eq.jump_offset.norm() <= 1e-12 * ds.norm());
    CHECK((eq.residual - ds).norm() <= 1e-12 * ds.norm());

    // Equal stiffnesses kill the correction term.
    Vec6 ds2;
    for (int k = 0; k < 6; ++k) ds2(k) = rng.normal();
    const LaminateAffineResult samec = laminate_block_affine(c1, c1, ds, ds2, 0.3, n);
    CHECK((samec.residual - (0.3 * ds + 0.7 * ds2)).norm() <= 1e-12);
}

TEST_CASE("affine laminate block matches the brute-force oracle") {
    Rng rng(45);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat6 c1 = oracle::random_spd(rng);
        const Mat6 c2 = oracle::random_spd(rng);
        const double f1 = rng.uniform(0.05, 0.95);
        const Vec3 n = oracle::random_unit(rng);
        Vec6 ds1, ds2, eps;
        for (int k = 0; k < 6; ++k) {
            ds1(k) = rng.normal();
            ds2(k) = rng.normal();
            eps(k) = rng.normal();
        }
        const LaminateAffineResult lam = laminate_block_affine(c1, c2, ds1, ds2, f1, n);
        const oracle::BlockSolution ref = oracle::solve_block(c1, c2, ds1, ds2, f1, n, eps);
        const Vec6 sh = lam.stiffness * eps + lam.residual;
        CHECK((sh - ref.stress_h).norm() <= 1e-8 * std::max(1.0, ref.stress_h.norm()));

        // Traction continuity and exact rule of mixtures from the closed form.
        const Vec3 b = lam.strain_jump * eps + lam.jump_offset;
        const Vec6 e1 = eps + h_matrix(n) * b / f1;
        const Vec6 e2 = eps - h_matrix(n) * b / (1.0 - f1);
        const Vec6 s1 = c1 * e1 + ds1;
        const Vec6 s2 = c2 * e2 + ds2;
        CHECK((h_matrix(n).transpose() * (s2 - s1)).norm() <= 1e-10);
        CHECK((sh - (f1 * s1 + (1 - f1) * s2)).norm() <= 1e-12 * std::max(1.0, sh.norm()));
    }
}

TEST_CASE("laminate block satisfies Hill-Mandel and the Voigt-Reuss bounds") {
    Rng rng(55);
    for (int trial = 0; trial < 500; ++trial) {
        const Mat6 c1 = oracle::random_spd(rng);
        const Mat6 c2 = oracle::random_spd(rng);
        const double f1 = rng.uniform(0.05, 0.95);
        const double f2 = 1.0 - f1;
        const Vec3 n = oracle::random_unit(rng);
        const LaminateResult lam = laminate_block(c1, c2, f1, n);
        Vec6 eps;
        for (int k = 0; k < 6; ++k) eps(k) = rng.normal();

        const Vec3 b = lam.strain_jump * eps;
        const Vec6 e1 = eps + h_matrix(n) * b / f1;
        const Vec6 e2 = eps - h_matrix(n) * b / f2;
        const Vec6 s1 = c1 * e1;
        const Vec6 s2 = c2 * e2;
        const double macro = eps.dot(lam.stiffness * eps);
        const double micro = f1 * e1.dot(s1) + f2 * e2.dot(s2);
        CHECK(std::abs(macro - micro) <= 1e-10 * std::max(1.0, std::abs(macro)));

        // Upper (Voigt) bound and lower (Reuss) bound on the quadratic form.
        const Mat6 voigt = f1 * c1 + f2 * c2;
        CHECK(eps.dot(lam.stiffness * eps) <= eps.dot(voigt * eps) + 1e-10);
        const Mat6 reuss = (f1 * c1.inverse() + f2 * c2.inverse()).inverse();
        CHECK(eps.dot(lam.stiffness * eps) >= eps.dot(reuss * eps) - 1e-10);

        // The result stays symmetric PSD.
        CHECK((lam.stiffness - lam.stiffness.transpose()).norm() <= 1e-12 * lam.stiffness.norm());
        Eigen::SelfAdjointEigenSolver<Mat6> eig(lam.stiffness, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
    }
}

TEST_CASE("singular interface is reported") {
    Mat6 c = Mat6::Zero();
    c(5, 5) = 1.0; // no stiffness along the z-normal at all
    CHECK_THROWS_AS((void)laminate_block(c, c, 0.5, Vec3(0, 0, 1)), SingularInterfaceError);
}

TEST_CASE("parameter counts follow the closed formulas") {
    Rng rng(65);
    for (int n = 1; n <= 8; ++n) {
        const Topology topo{n};
        const Model dmn = initialize_model(ModelType::dmn, topo, rng);
        const Model imn = initialize_model(ModelType::imn, topo, rng);
        CHECK(dmn.parameter_count() == 7 * (1 << n) - 3);
        CHECK(imn.parameter_count() == 3 * (1 << n) - 2);
    }
}

TEST_CASE("forward passes: equal phases propagate unchanged") {
    Rng rng(75);
    const Mat6 c = oracle::random_spd(rng);
    for (int depth : {1, 3, 4}) {
        const Topology topo{depth};
        Model imn = initialize_model(ModelType::imn, topo, rng);
        CHECK((forward_model(imn, c, c) - c).norm() <= 1e-11 * c.norm());

        Model dmn = initialize_model(ModelType::dmn, topo, rng);
        // With all angles zero the output is exactly the input.
        auto& params = std::get<DmnParams>(dmn.params);
        for (auto& a : params.angles) a = EulerAngles{};
        CHECK((forward_dmn(topo, params, c, c) - c).norm() <= 1e-12 * c.norm());
    }
}

TEST_CASE("depth-1 networks reduce to a single laminate") {
    Rng rng(85);
    const Mat6 c1 = oracle::random_spd(rng);
    const Mat6 c2 = oracle::random_spd(rng);
    const Topology topo{1};

    DmnParams dmn;
    dmn.z = Eigen::VectorXd::Ones(2);
    dmn.angles.assign(3, EulerAngles{});
    const Mat6 via_dmn = forward_dmn(topo, dmn, c1, c2);
    const Mat6 direct = laminate_block(c1, c2, 0.5, Vec3(0, 0, 1)).stiffness;
    CHECK((via_dmn - direct).norm() <= 1e-13 * direct.norm());

    // phi = 0 aligns the interface normal with e3 and matches the other model.
    ImnParams imn;
    imn.z = Eigen::VectorXd::Ones(2);
    imn.theta = Eigen::VectorXd::Zero(1);
    imn.phi = Eigen::VectorXd::Zero(1);
    const Mat6 via_imn = forward_imn(topo, imn, c1, c2);
    CHECK((via_imn - direct).norm() <= 1e-13 * direct.norm());
}

TEST_CASE("phase swap with mirrored activations is a relabeling") {
    // Swapping the phases and mirroring each bottom-layer sibling pair
    // relabels the children of every bottom parent; flipping that parent's
    // interface normal (theta -> theta + 0.5, phi -> 1 - phi) restores the
    // identical block.
    Rng rng(95);
    const Topology topo{3};
    Model model = initialize_model(ModelType::imn, topo, rng);
    auto& p = std::get<ImnParams>(model.params);
    const Mat6 c1 = oracle::random_spd(rng);
    const Mat6 c2 = oracle::random_spd(rng);
    const Mat6 out = forward_imn(topo, p, c1, c2);

    ImnParams mirror = p;
    for (int i = 0; i < topo.base_count(); i += 2) std::swap(mirror.z(i), mirror.z(i + 1));
    const int first_bottom_parent = 1 << (topo.depth - 1); // heap index of layer N-1 start
    for (int h = first_bottom_parent; h <= topo.parent_count(); ++h) {
        mirror.theta(h - 1) = p.theta(h - 1) + 0.5;
        mirror.phi(h - 1) = 1.0 - p.phi(h - 1);
    }
    const Mat6 swapped = forward_imn(topo, mirror, c2, c1);
    CHECK((swapped - out).norm() <= 1e-11 * out.norm());
}

TEST_CASE("single active base node passes its phase through") {
    Rng rng(105);
    const Topology topo{3};
    Model model = initialize_model(ModelType::imn, topo, rng);
    auto& p = std::get<ImnParams>(model.params);
    p.z.setConstant(-1.0);
    p.z(2) = 0.7; // base node 3 (odd) carries phase 1
    const Mat6 c1 = oracle::random_spd(rng);
    const Mat6 c2 = oracle::random_spd(rng);
    CHECK((forward_imn(topo, p, c1, c2) - c1).norm() == 0.0);
    p.z(2) = -1.0;
    p.z(5) = 0.4; // base node 6 (even) carries phase 2
    CHECK((forward_imn(topo, p, c1, c2) - c2).norm() == 0.0);
}

TEST_CASE("whole-network output is symmetric PSD for random parameters") {
    Rng rng(115);
    for (int trial = 0; trial < 1000; ++trial) {
        const Topology topo{3};
        const ModelType type = trial % 2 == 0 ? ModelType::imn : ModelType::dmn;
        Model model = initialize_model(type, topo, rng);
        // Random sign flips keep some nodes inactive.
        auto& z = model.activations();
        for (int i = 0; i < z.size(); ++i)
            if (rng.next_double() < 0.3) z(i) = -z(i);
        bool all_dead = true;
        for (int i = 0; i < z.size(); ++i) all_dead = all_dead && z(i) <= 0.0;
        if (all_dead) z(0) = 0.1;

        const Mat6 c1 = oracle::random_spd(rng);
        const Mat6 c2 = oracle::random_spd(rng);
        const Mat6 out = forward_model(model, c1, c2);
        CHECK((out - out.transpose()).norm() <= 1e-11 * out.norm());
        Eigen::SelfAdjointEigenSolver<Mat6> eig(out, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
    }
}

TEST_CASE("dmn forward with identical phases composes the rotations") {
    // All-zero angles except the root: output is the rotated input.
    Rng rng(125);
    const Topology topo{2};
    DmnParams p;
    p.z = Eigen::VectorXd::Ones(4);
    p.angles.assign(static_cast<std::size_t>(topo.node_count()), EulerAngles{});
    const EulerAngles root{0.4, -0.9, 1.3};
    p.angles[0] = root;
    const Mat6 c = oracle::random_spd(rng);
    CHECK((forward_dmn(topo, p, c, c) - rotate_stiffness(root, c)).norm() <= 1e-12 * c.norm());
}
