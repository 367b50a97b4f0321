#include "matnet/voigt.hpp"

#include <cmath>

namespace matnet {

namespace {
constexpr int kRow[6] = {0, 1, 2, 1, 0, 0};
constexpr int kCol[6] = {0, 1, 2, 2, 2, 1};
constexpr double kPi = 3.14159265358979323846;
} // namespace

Vec3 normal_from_angles(double theta, double phi) {
    const double a = 2.0 * kPi * theta;
    const double b = kPi * phi;
    return {std::cos(a) * std::sin(b), std::sin(a) * std::sin(b), std::cos(b)};
}

void normal_from_angles_jacobian(double theta, double phi, Vec3& d_theta, Vec3& d_phi) {
    const double a = 2.0 * kPi * theta;
    const double b = kPi * phi;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    d_theta = {-2.0 * kPi * sa * sb, 2.0 * kPi * ca * sb, 0.0};
    d_phi = {kPi * ca * cb, kPi * sa * cb, -kPi * sb};
}

Mat63 h_matrix(const Vec3& n) {
    Mat63 h = Mat63::Zero();
    h(0, 0) = n(0);
    h(1, 1) = n(1);
    h(2, 2) = n(2);
    h(3, 1) = n(2);
    h(3, 2) = n(1);
    h(4, 0) = n(2);
    h(4, 2) = n(0);
    h(5, 0) = n(1);
    h(5, 1) = n(0);
    return h;
}

Mat3 rotation_matrix(const EulerAngles& angles) {
    const double ca = std::cos(angles.alpha), sa = std::sin(angles.alpha);
    const double cb = std::cos(angles.beta), sb = std::sin(angles.beta);
    const double cg = std::cos(angles.gamma), sg = std::sin(angles.gamma);
    Mat3 rz1, rx, rz2;
    rz1 << ca, -sa, 0, sa, ca, 0, 0, 0, 1;
    rx << 1, 0, 0, 0, cb, -sb, 0, sb, cb;
    rz2 << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    return rz1 * rx * rz2;
}

void rotation_matrix_derivatives(const EulerAngles& angles, Mat3& d_alpha, Mat3& d_beta,
                                 Mat3& d_gamma) {
    const double ca = std::cos(angles.alpha), sa = std::sin(angles.alpha);
    const double cb = std::cos(angles.beta), sb = std::sin(angles.beta);
    const double cg = std::cos(angles.gamma), sg = std::sin(angles.gamma);
    Mat3 rz1, rx, rz2, dz1, dx, dz2;
    rz1 << ca, -sa, 0, sa, ca, 0, 0, 0, 1;
    rx << 1, 0, 0, 0, cb, -sb, 0, sb, cb;
    rz2 << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    dz1 << -sa, -ca, 0, ca, -sa, 0, 0, 0, 0;
    dx << 0, 0, 0, 0, -sb, -cb, 0, cb, -sb;
    dz2 << -sg, -cg, 0, cg, -sg, 0, 0, 0, 0;
    d_alpha = dz1 * rx * rz2;
    d_beta = rz1 * dx * rz2;
    d_gamma = rz1 * rx * dz2;
}

Mat6 bond_stress_bilinear(const Mat3& a, const Mat3& b) {
    Mat6 m;
    for (int r = 0; r < 6; ++r) {
        const int i = kRow[r], j = kCol[r];
        for (int c = 0; c < 6; ++c) {
            const int k = kRow[c], l = kCol[c];
            if (k == l) {
                m(r, c) = 0.5 * (a(i, k) * b(j, k) + b(i, k) * a(j, k));
            } else {
                m(r, c) = 0.5 * (a(i, k) * b(j, l) + a(i, l) * b(j, k) +
                                 b(i, k) * a(j, l) + b(i, l) * a(j, k));
            }
        }
    }
    return m;
}

Mat6 rotation_6(const Mat3& q) { return bond_stress_bilinear(q, q); }

Mat6 rotation_6(const EulerAngles& angles) { return rotation_6(rotation_matrix(angles)); }

Stress6 rotate_stress(const EulerAngles& angles, const Stress6& sigma) {
    return rotation_6(angles) * sigma;
}

Stiffness6 rotate_stiffness(const EulerAngles& angles, const Stiffness6& c) {
    const Mat6 m = rotation_6(angles);
    return m * c * m.transpose();
}

Mat3 stress_to_tensor(const Stress6& v) {
    Mat3 t;
    t << v(0), v(5), v(4), v(5), v(1), v(3), v(4), v(3), v(2);
    return t;
}

Stress6 tensor_to_stress(const Mat3& t) {
    Stress6 v;
    v << t(0, 0), t(1, 1), t(2, 2), t(1, 2), t(0, 2), t(0, 1);
    return v;
}

Mat3 strain_to_tensor(const Strain6& v) {
    Mat3 t;
    t << v(0), 0.5 * v(5), 0.5 * v(4), 0.5 * v(5), v(1), 0.5 * v(3), 0.5 * v(4), 0.5 * v(3), v(2);
    return t;
}

Strain6 tensor_to_strain(const Mat3& t) {
    Strain6 v;
    v << t(0, 0), t(1, 1), t(2, 2), 2.0 * t(1, 2), 2.0 * t(0, 2), 2.0 * t(0, 1);
    return v;
}

} // namespace matnet
