#pragma once

#include <Eigen/Dense>

namespace matnet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

// Voigt component order is (11, 22, 33, 23, 13, 12) throughout.
// Stresses are plain tensor components (GPa); strains carry engineering
// shear (gamma = 2*eps off-diagonal), so eps^T sigma is an energy density.
using Stress6 = Vec6;
using Strain6 = Vec6;
using Stiffness6 = Mat6;

struct EulerAngles {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// Interface normal from two angles:
/// n = (cos(2*pi*theta) sin(pi*phi), sin(2*pi*theta) sin(pi*phi), cos(pi*phi)).
Vec3 normal_from_angles(double theta, double phi);

/// Derivatives of normal_from_angles with respect to (theta, phi).
void normal_from_angles_jacobian(double theta, double phi, Vec3& d_theta, Vec3& d_phi);

/// 6x3 orientation matrix of a unit normal. H^T sigma is the traction
/// vector sigma.n, and H b is the engineering-Voigt strain of sym(b (x) n).
Mat63 h_matrix(const Vec3& n);

/// Intrinsic Z-X-Z rotation matrix Q = Rz(alpha) Rx(beta) Rz(gamma).
Mat3 rotation_matrix(const EulerAngles& angles);

/// d(rotation_matrix)/d(alpha, beta, gamma).
void rotation_matrix_derivatives(const EulerAngles& angles, Mat3& d_alpha, Mat3& d_beta,
                                 Mat3& d_gamma);

/// Symmetric bilinear form underlying the stress transformation matrix:
/// bond_stress_bilinear(Q, Q) = rotation_6(Q), and the differential of
/// rotation_6 along dQ is bond_stress_bilinear(dQ, Q) + bond_stress_bilinear(Q, dQ).
Mat6 bond_stress_bilinear(const Mat3& a, const Mat3& b);

/// 6x6 stress transformation of the 3x3 rotation q:
/// rotation_6(q) * voigt(S) = voigt(q S q^T).
Mat6 rotation_6(const Mat3& q);
Mat6 rotation_6(const EulerAngles& angles);

/// Rotate a stress vector: voigt(Q S Q^T).
Stress6 rotate_stress(const EulerAngles& angles, const Stress6& sigma);

/// Rotate a stiffness: M C M^T with M = rotation_6(angles). Matches the
/// component-wise fourth-order tensor rotation under the engineering-strain
/// convention; the congruence with M^T on the left is not a tensor rotation
/// in this convention.
Stiffness6 rotate_stiffness(const EulerAngles& angles, const Stiffness6& c);

// 3x3 tensor <-> Voigt conversions.
Mat3 stress_to_tensor(const Stress6& v);
Stress6 tensor_to_stress(const Mat3& t);
Mat3 strain_to_tensor(const Strain6& v);
Strain6 tensor_to_strain(const Mat3& t);

} // namespace matnet
