#include <doctest.h>

#include <cmath>

#include "matnet/voigt.hpp"
#include "oracles.hpp"

using namespace matnet;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("normal_from_angles hits the axes") {
    CHECK((normal_from_angles(0.0, 0.5) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((normal_from_angles(0.25, 0.5) - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((normal_from_angles(0.37, 0.0) - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((normal_from_angles(-1.3, 0.0) - Vec3(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("normal_from_angles is unit and matches its jacobian") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const double theta = rng.uniform(-2, 2), phi = rng.uniform(-2, 2);
        CHECK(normal_from_angles(theta, phi).norm() == doctest::Approx(1.0).epsilon(1e-12));
        Vec3 dt, dp;
        normal_from_angles_jacobian(theta, phi, dt, dp);
        const double h = 1e-6;
        const Vec3 fd_t = (normal_from_angles(theta + h, phi) - normal_from_angles(theta - h, phi)) / (2 * h);
        const Vec3 fd_p = (normal_from_angles(theta, phi + h) - normal_from_angles(theta, phi - h)) / (2 * h);
        CHECK((dt - fd_t).norm() < 1e-7);
        CHECK((dp - fd_p).norm() < 1e-7);
    }
}

TEST_CASE("h_matrix for the z-normal") {
    const Mat63 h = h_matrix(Vec3(0, 0, 1));
    Mat63 expected = Mat63::Zero();
    expected(2, 2) = 1;
    expected(3, 1) = 1;
    expected(4, 0) = 1;
    CHECK((h - expected).norm() == 0.0);
}

TEST_CASE("h_matrix traction on the x-plane") {
    Stress6 sigma = Stress6::Zero();
    sigma(0) = 5.0;
    const Vec3 t = h_matrix(Vec3(1, 0, 0)).transpose() * sigma;
    CHECK((t - Vec3(5, 0, 0)).norm() == 0.0);
}

TEST_CASE("h_matrix matches the tensor traction and jump oracles") {
    Rng rng(21);
    for (int i = 0; i < 10000; ++i) {
        const Vec3 n = oracle::random_unit(rng);
        Stress6 s;
        for (int k = 0; k < 6; ++k) s(k) = rng.normal();
        const Vec3 traction = h_matrix(n).transpose() * s;
        CHECK((traction - oracle::traction(s, n)).norm() <= 1e-12 * s.norm());
    }
    for (int i = 0; i < 100; ++i) {
        const Vec3 n = oracle::random_unit(rng);
        const Vec3 b{rng.normal(), rng.normal(), rng.normal()};
        const Mat3 jump = 0.5 * (b * n.transpose() + n * b.transpose());
        CHECK((h_matrix(n) * b - oracle::strain_voigt(jump)).norm() < 1e-14);
    }
}

TEST_CASE("energy pairing equals the tensor double contraction") {
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        Stress6 s;
        Strain6 e;
        for (int k = 0; k < 6; ++k) {
            s(k) = rng.normal();
            e(k) = rng.normal();
        }
        CHECK(std::abs(e.dot(s) - oracle::energy_contraction(s, e)) <= 1e-12 *
              std::max(1.0, std::abs(e.dot(s))));
    }
}

TEST_CASE("rotation_6 of identity angles is identity") {
    CHECK((rotation_6(EulerAngles{}) - Mat6::Identity()).norm() < 1e-15);
}

TEST_CASE("rotate_stress matches the 3x3 tensor rotation") {
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const EulerAngles a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Stress6 s;
        for (int k = 0; k < 6; ++k) s(k) = rng.normal();
        const Mat3 q = rotation_matrix(a);
        CHECK((rotate_stress(a, s) - oracle::rotate_stress_tensor(q, s)).norm() < 1e-13 * s.norm());
    }
}

TEST_CASE("rotate_stiffness matches the 81-component tensor oracle") {
    Rng rng(51);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const EulerAngles a{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
        const Mat6 c = oracle::random_spd(rng);
        const Mat6 rotated = rotate_stiffness(a, c);
        const Mat6 expected = oracle::rotate_stiffness_tensor(rotation_matrix(a), c);
        worst = std::max(worst, (rotated - expected).norm() / c.norm());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("90 degree rotation about z swaps the 11 and 22 entries") {
    Rng rng(61);
    Mat6 c = oracle::random_spd(rng);
    const EulerAngles a{kPi / 2, 0, 0};
    const Mat6 r = rotate_stiffness(a, c);
    CHECK(r(0, 0) == doctest::Approx(c(1, 1)).epsilon(1e-12));
    CHECK(r(1, 1) == doctest::Approx(c(0, 0)).epsilon(1e-12));
    CHECK(r(2, 2) == doctest::Approx(c(2, 2)).epsilon(1e-12));
}

TEST_CASE("rotation round trip restores stress and stiffness") {
    Rng rng(71);
    for (int i = 0; i < 50; ++i) {
        const EulerAngles a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const EulerAngles inv{-a.gamma, -a.beta, -a.alpha};
        Stress6 s;
        for (int k = 0; k < 6; ++k) s(k) = rng.normal();
        CHECK((rotate_stress(inv, rotate_stress(a, s)) - s).norm() < 1e-12 * std::max(1.0, s.norm()));
        const Mat6 c = oracle::random_spd(rng);
        CHECK((rotate_stiffness(inv, rotate_stiffness(a, c)) - c).norm() < 1e-12 * c.norm());
    }
}

TEST_CASE("isotropic stiffness is rotation invariant") {
    Mat6 c = Mat6::Zero();
    const double lambda = 2.3, mu = 1.7;
    c.topLeftCorner<3, 3>().setConstant(lambda);
    c(0, 0) = c(1, 1) = c(2, 2) = lambda + 2 * mu;
    c(3, 3) = c(4, 4) = c(5, 5) = mu;
    Rng rng(81);
    for (int i = 0; i < 50; ++i) {
        const EulerAngles a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        CHECK((rotate_stiffness(a, c) - c).norm() < 1e-12 * c.norm());
        CHECK((oracle::rotate_stiffness_tensor(rotation_matrix(a), c) - c).norm() < 1e-12 * c.norm());
    }
}

TEST_CASE("rotated stiffness stays symmetric PSD and preserves the bulk trace") {
    Rng rng(91);
    for (int i = 0; i < 1000; ++i) {
        const EulerAngles a{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const Mat6 c = oracle::random_spd(rng);
        const Mat6 r = rotate_stiffness(a, c);
        CHECK((r - r.transpose()).norm() <= 1e-12 * r.norm());
        Eigen::SelfAdjointEigenSolver<Mat6> eig(r, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
        // C : I(x)I, the hydrostatic projection, is rotation invariant.
        const double bulk = c.topLeftCorner<3, 3>().sum();
        const double bulk_r = r.topLeftCorner<3, 3>().sum();
        CHECK(std::abs(bulk - bulk_r) <= 1e-10 * std::abs(bulk));
    }
}

TEST_CASE("tensor conversions round trip") {
    Rng rng(101);
    for (int i = 0; i < 20; ++i) {
        Vec6 v;
        for (int k = 0; k < 6; ++k) v(k) = rng.normal();
        CHECK((tensor_to_stress(stress_to_tensor(v)) - v).norm() == 0.0);
        CHECK((tensor_to_strain(strain_to_tensor(v)) - v).norm() == 0.0);
    }
}
