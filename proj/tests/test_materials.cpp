#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "matnet/errors.hpp"
#include "matnet/materials.hpp"
#include "matnet/voigt.hpp"
#include "oracles.hpp"

using namespace matnet;

TEST_CASE("isotropic stiffness closed form") {
    // E = 72, nu = 0.22: C_1111 = E(1-nu)/((1+nu)(1-2nu)).
    const auto iso = ElasticOrthotropic::isotropic(72.0, 0.22);
    const Stiffness6 c = stiffness_of(iso);
    const double expected = 72.0 * (1 - 0.22) / ((1 + 0.22) * (1 - 2 * 0.22));
    CHECK(c(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(82.2014).epsilon(1e-4));
    // nu = 0 decouples: C = diag(E, E, E, G, G, G) with G = E/2.
    const Stiffness6 c0 = stiffness_of(ElasticOrthotropic::isotropic(10.0, 0.0));
    Stiffness6 expect0 = Stiffness6::Zero();
    expect0.diagonal() << 10, 10, 10, 5, 5, 5;
    CHECK((c0 - expect0).norm() < 1e-12);
}

TEST_CASE("composite presets are admissible and PSD") {
    for (const char* name : {"composite1", "composite2", "composite3"}) {
        const CompositePreset p = composite_preset(name);
        const Stiffness6 c = stiffness_of(p.fiber);
        CHECK((c - c.transpose()).norm() < 1e-12 * c.norm());
        Eigen::SelfAdjointEigenSolver<Mat6> eig(c, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
        CHECK_NOTHROW(validate(p.matrix));
    }
    CHECK(composite_preset("composite3").matrix.h_lin == 0.0);
    CHECK_THROWS_AS((void)composite_preset("composite9"), ConfigError);
}

TEST_CASE("inadmissible orthotropic constants name the violated minor") {
    ElasticOrthotropic bad = ElasticOrthotropic::isotropic(10.0, 0.0);
    bad.nu12 = 1.2; // breaks the 2x2 minor
    CHECK_THROWS_WITH_AS((void)stiffness_of(bad),
                         doctest::Contains("2x2 leading minor"), AdmissibilityError);
    bad = ElasticOrthotropic::isotropic(10.0, 0.0);
    bad.g12 = -1.0;
    CHECK_THROWS_WITH_AS((void)stiffness_of(bad), doctest::Contains("G12"), AdmissibilityError);
}

namespace {

J2Plasticity test_matrix_material() {
    // Exponential-hardening matrix constants with defaulted moduli.
    J2Plasticity m;
    m.youngs = 3.8;
    m.poisson = 0.387;
    m.yield0 = 0.03;
    m.h_lin = 0.0;
    m.k_exp = m.yield0;
    m.m_exp = 100.0;
    return m;
}

} // namespace

TEST_CASE("elastic step below yield returns the elastic law") {
    const J2Plasticity mat = test_matrix_material();
    MaterialState state;
    Strain6 de = Strain6::Zero();
    de(0) = 1e-4; // far below the ~0.8% yield strain
    const StepResult r = j2_step(mat, state, de);
    CHECK((r.dstress - elastic_stiffness(mat) * de).norm() < 1e-15);
    CHECK(r.next.eq_plastic == 0.0);
    CHECK((r.tangent - elastic_stiffness(mat)).norm() == 0.0);
}

TEST_CASE("zero increment is a no-op") {
    const J2Plasticity mat = test_matrix_material();
    MaterialState state;
    state.stress(0) = 0.01;
    const StepResult r = j2_step(mat, state, Strain6::Zero());
    CHECK(r.dstress.norm() == 0.0);
    CHECK(r.next.eq_plastic == state.eq_plastic);
    CHECK((r.next.stress - state.stress).norm() == 0.0);
}

TEST_CASE("monotonic uniaxial stress loading matches the 1D closed form") {
    const J2Plasticity mat = test_matrix_material();
    const oracle::Uniaxial1D ref{mat};

    // Drive the exact uniaxial-stress strain path; the deviatoric direction
    // is radial, so the return mapping should land on the closed form.
    MaterialState state;
    const int n_steps = 60;
    const double p_max = 0.02;
    double eps_ax_prev = 0.0, eps_lat_prev = 0.0;
    // Elastic ramp to the yield point first.
    {
        Strain6 de = Strain6::Zero();
        const double eps_y = mat.yield0 / mat.youngs;
        de(0) = eps_y;
        de(1) = de(2) = -mat.poisson * eps_y;
        const StepResult r = j2_step(mat, state, de);
        state = r.next;
        CHECK(state.stress(0) == doctest::Approx(mat.yield0).epsilon(1e-10));
        eps_ax_prev = de(0);
        eps_lat_prev = de(1);
    }
    for (int k = 1; k <= n_steps; ++k) {
        const double p = p_max * k / n_steps;
        Strain6 de = Strain6::Zero();
        de(0) = ref.axial_strain_at(p) - eps_ax_prev;
        de(1) = de(2) = ref.lateral_strain_at(p) - eps_lat_prev;
        eps_ax_prev = ref.axial_strain_at(p);
        eps_lat_prev = ref.lateral_strain_at(p);
        const StepResult r = j2_step(mat, state, de);
        state = r.next;
        CHECK(state.stress(0) == doctest::Approx(ref.stress_at(p)).epsilon(1e-9));
        CHECK(std::abs(state.stress(1)) < 1e-10);
        CHECK(std::abs(state.stress(2)) < 1e-10);
        CHECK(state.eq_plastic == doctest::Approx(p).epsilon(1e-9));
    }
}

TEST_CASE("stress stays on or inside the yield surface and dissipation is non-negative") {
    const J2Plasticity mat = test_matrix_material();
    Rng rng(7);
    MaterialState state;
    double last_p = 0.0;
    for (int k = 0; k < 200; ++k) {
        Strain6 de;
        for (int c = 0; c < 6; ++c) de(c) = 2e-3 * rng.normal();
        const StepResult r = j2_step(mat, state, de);
        const Stress6 dev = [&] {
            Stress6 d = r.next.stress;
            const double m = (d(0) + d(1) + d(2)) / 3.0;
            d(0) -= m;
            d(1) -= m;
            d(2) -= m;
            return d;
        }();
        const double q = std::sqrt(1.5 * (dev(0) * dev(0) + dev(1) * dev(1) + dev(2) * dev(2) +
                                          2 * (dev(3) * dev(3) + dev(4) * dev(4) + dev(5) * dev(5))));
        CHECK(q - mat.yield_stress(r.next.eq_plastic) <= 1e-10);
        CHECK(r.next.eq_plastic >= last_p);
        const Strain6 dplastic = r.next.plastic_strain - state.plastic_strain;
        CHECK(r.dstress.dot(dplastic) >= -1e-12);
        last_p = r.next.eq_plastic;
        state = r.next;
    }
}

TEST_CASE("consistent tangent matches finite differences") {
    const J2Plasticity mat = test_matrix_material();
    Rng rng(17);
    MaterialState state;
    // Walk into the plastic regime, checking the tangent in both regimes.
    for (int k = 0; k < 8; ++k) {
        Strain6 de;
        for (int c = 0; c < 6; ++c) de(c) = 4e-3 * rng.normal();
        const StepResult r = j2_step(mat, state, de);
        const double h = 1e-7;
        double worst = 0.0;
        for (int c = 0; c < 6; ++c) {
            Strain6 dp = de, dm = de;
            dp(c) += h;
            dm(c) -= h;
            const Vec6 col = (j2_step(mat, state, dp).dstress - j2_step(mat, state, dm).dstress) /
                             (2 * h);
            worst = std::max(worst, (r.tangent.col(c) - col).norm() / std::max(1e-3, col.norm()));
        }
        CHECK(worst < 1e-5);
        state = r.next;
    }
}

TEST_CASE("isotropy: rotating the increment commutes with the step") {
    const J2Plasticity mat = test_matrix_material();
    Rng rng(27);
    for (int trial = 0; trial < 20; ++trial) {
        const EulerAngles a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const EulerAngles inv{-a.gamma, -a.beta, -a.alpha};
        MaterialState virgin;
        Strain6 de;
        for (int c = 0; c < 6; ++c) de(c) = 5e-3 * rng.normal();
        const Stress6 direct = j2_step(mat, virgin, de).dstress;
        // Rotate the engineering strain with the inverse-transpose operator.
        const Strain6 de_rot = tensor_to_strain(rotation_matrix(a) * strain_to_tensor(de) *
                                                rotation_matrix(a).transpose());
        const Stress6 rotated_back = rotate_stress(inv, j2_step(mat, virgin, de_rot).dstress);
        CHECK((direct - rotated_back).norm() <= 1e-10 * std::max(1.0, direct.norm()));
    }
}

TEST_CASE("secant stiffness reproduces the increment exactly and stays symmetric") {
    const J2Plasticity mat = test_matrix_material();
    Rng rng(37);
    MaterialState state;
    for (int k = 0; k < 50; ++k) {
        Strain6 de;
        for (int c = 0; c < 6; ++c) de(c) = 5e-3 * rng.normal();
        const StepResult r = j2_step(mat, state, de);
        const Stiffness6 sec = secant_stiffness(elastic_stiffness(mat), r.dstress, de);
        CHECK((sec * de - r.dstress).norm() <= 1e-12 * std::max(1.0, r.dstress.norm()));
        CHECK((sec - sec.transpose()).norm() <= 1e-12 * sec.norm());
        state = r.next;
    }
    // Zero increment falls back to the reference stiffness.
    const Stiffness6 sec0 = secant_stiffness(elastic_stiffness(mat), Stress6::Zero(),
                                             Strain6::Zero());
    CHECK((sec0 - elastic_stiffness(mat)).norm() == 0.0);
}

TEST_CASE("j2 parameter validation") {
    J2Plasticity bad = test_matrix_material();
    bad.poisson = 0.5;
    CHECK_THROWS_AS(validate(bad), AdmissibilityError);
    bad = test_matrix_material();
    bad.yield0 = 0.0;
    CHECK_THROWS_AS(validate(bad), AdmissibilityError);
}
