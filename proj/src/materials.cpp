#include "matnet/materials.hpp"

#include <cmath>

#include "matnet/errors.hpp"

namespace matnet {

ElasticOrthotropic ElasticOrthotropic::isotropic(double youngs, double poisson) {
    ElasticOrthotropic m;
    m.e11 = m.e22 = m.e33 = youngs;
    m.g12 = m.g13 = m.g23 = youngs / (2.0 * (1.0 + poisson));
    m.nu12 = m.nu13 = m.nu23 = poisson;
    return m;
}

Stiffness6 stiffness_of(const ElasticOrthotropic& mat) {
    // Compliance: eps_i = sigma_i/E_i - sum_j nu_ij sigma_j / E_i.
    Mat3 s;
    s << 1.0 / mat.e11, -mat.nu12 / mat.e11, -mat.nu13 / mat.e11,
        -mat.nu12 / mat.e11, 1.0 / mat.e22, -mat.nu23 / mat.e22,
        -mat.nu13 / mat.e11, -mat.nu23 / mat.e22, 1.0 / mat.e33;

    if (mat.e11 <= 0.0 || !(s(0, 0) > 0.0))
        throw AdmissibilityError("orthotropic compliance: 1x1 minor (1/E11) not positive");
    const double minor2 = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    if (mat.e22 <= 0.0 || !(minor2 > 0.0))
        throw AdmissibilityError("orthotropic compliance: 2x2 leading minor not positive");
    if (mat.e33 <= 0.0 || !(s.determinant() > 0.0))
        throw AdmissibilityError("orthotropic compliance: 3x3 determinant not positive");
    if (mat.g23 <= 0.0) throw AdmissibilityError("orthotropic compliance: G23 not positive");
    if (mat.g13 <= 0.0) throw AdmissibilityError("orthotropic compliance: G13 not positive");
    if (mat.g12 <= 0.0) throw AdmissibilityError("orthotropic compliance: G12 not positive");

    Stiffness6 c = Stiffness6::Zero();
    c.topLeftCorner<3, 3>() = s.inverse();
    // Symmetrize away inversion round-off.
    c.topLeftCorner<3, 3>() = (0.5 * (c.topLeftCorner<3, 3>() +
                                      c.topLeftCorner<3, 3>().transpose())).eval();
    c(3, 3) = mat.g23;
    c(4, 4) = mat.g13;
    c(5, 5) = mat.g12;
    return c;
}

double J2Plasticity::yield_stress(double p) const {
    return yield0 + h_lin * p + k_exp * (1.0 - std::exp(-m_exp * p));
}

double J2Plasticity::hardening_slope(double p) const {
    return h_lin + k_exp * m_exp * std::exp(-m_exp * p);
}

void validate(const J2Plasticity& mat) {
    if (!(mat.youngs > 0.0)) throw AdmissibilityError("J2 material: E must be positive");
    if (!(mat.poisson > -1.0 && mat.poisson < 0.5))
        throw AdmissibilityError("J2 material: nu must lie in (-1, 0.5)");
    if (!(mat.yield0 > 0.0)) throw AdmissibilityError("J2 material: initial yield must be positive");
    if (mat.h_lin < 0.0 || mat.k_exp < 0.0 || mat.m_exp < 0.0)
        throw AdmissibilityError("J2 material: hardening parameters must be non-negative");
}

Stiffness6 elastic_stiffness(const J2Plasticity& mat) {
    const double mu = mat.shear_modulus();
    const double lambda = mat.youngs * mat.poisson / ((1.0 + mat.poisson) * (1.0 - 2.0 * mat.poisson));
    Stiffness6 c = Stiffness6::Zero();
    c.topLeftCorner<3, 3>().setConstant(lambda);
    c(0, 0) = c(1, 1) = c(2, 2) = lambda + 2.0 * mu;
    c(3, 3) = c(4, 4) = c(5, 5) = mu;
    return c;
}

namespace {

// Deviatoric part in stress-Voigt components.
Stress6 deviator(const Stress6& s) {
    const double m = (s(0) + s(1) + s(2)) / 3.0;
    Stress6 d = s;
    d(0) -= m;
    d(1) -= m;
    d(2) -= m;
    return d;
}

double equivalent_stress(const Stress6& dev) {
    const double j2 = dev(0) * dev(0) + dev(1) * dev(1) + dev(2) * dev(2) +
                      2.0 * (dev(3) * dev(3) + dev(4) * dev(4) + dev(5) * dev(5));
    return std::sqrt(1.5 * j2);
}

} // namespace

StepResult j2_step(const J2Plasticity& mat, const MaterialState& state, const Strain6& dstrain) {
    const Stiffness6 c_el = elastic_stiffness(mat);
    const double mu = mat.shear_modulus();

    StepResult out;
    const Stress6 trial = state.stress + c_el * dstrain;
    const Stress6 s_tr = deviator(trial);
    const double q_tr = equivalent_stress(s_tr);
    const double f_trial = q_tr - mat.yield_stress(state.eq_plastic);

    if (f_trial <= 0.0) {
        out.dstress = c_el * dstrain;
        out.next = state;
        out.next.stress = trial;
        out.next.strain = state.strain + dstrain;
        out.tangent = c_el;
        return out;
    }

    // Consistency: q_tr - 3*mu*dgamma - sigma_y(p_old + dgamma) = 0.
    double dgamma = 0.0;
    double residual = f_trial;
    bool solved = false;
    for (int it = 0; it < 50; ++it) {
        const double slope = -3.0 * mu - mat.hardening_slope(state.eq_plastic + dgamma);
        dgamma -= residual / slope;
        if (dgamma < 0.0) dgamma = 0.0;
        residual = q_tr - 3.0 * mu * dgamma - mat.yield_stress(state.eq_plastic + dgamma);
        if (std::abs(residual) <= 1e-14 * std::max(1.0, q_tr)) {
            solved = true;
            break;
        }
    }
    if (!solved)
        throw ConvergenceError("J2 return mapping: plastic multiplier iteration did not converge",
                               residual);

    // Flow direction n = 1.5 * s_tr / q_tr (stress-Voigt components).
    const Stress6 n_dir = (1.5 / q_tr) * s_tr;
    out.dstress = c_el * dstrain - (2.0 * mu * dgamma) * n_dir;

    out.next = state;
    out.next.stress = state.stress + out.dstress;
    out.next.strain = state.strain + dstrain;
    out.next.eq_plastic = state.eq_plastic + dgamma;
    Strain6 dplastic;
    dplastic << n_dir(0), n_dir(1), n_dir(2), 2.0 * n_dir(3), 2.0 * n_dir(4), 2.0 * n_dir(5);
    out.next.plastic_strain = state.plastic_strain + dgamma * dplastic;

    // Consistent tangent (unit deviatoric direction nh = s_tr / |s_tr|):
    // C = K 1(x)1 + 2*mu*theta*I_dev - 2*mu*theta_bar*nh(x)nh.
    const double kb = mat.bulk_modulus();
    const double hprime = mat.hardening_slope(out.next.eq_plastic);
    const double theta = 1.0 - 3.0 * mu * dgamma / q_tr;
    const double theta_bar = 3.0 * mu / (3.0 * mu + hprime) - 3.0 * mu * dgamma / q_tr;

    Stiffness6 tan = Stiffness6::Zero();
    tan.topLeftCorner<3, 3>().setConstant(kb - 2.0 * mu * theta / 3.0);
    tan(0, 0) = tan(1, 1) = tan(2, 2) = kb + 4.0 * mu * theta / 3.0;
    tan(3, 3) = tan(4, 4) = tan(5, 5) = mu * theta;
    const double snorm = std::sqrt(s_tr(0) * s_tr(0) + s_tr(1) * s_tr(1) + s_tr(2) * s_tr(2) +
                                   2.0 * (s_tr(3) * s_tr(3) + s_tr(4) * s_tr(4) + s_tr(5) * s_tr(5)));
    const Stress6 nh = s_tr / snorm;
    tan -= (2.0 * mu * theta_bar) * (nh * nh.transpose());
    out.tangent = tan;
    return out;
}

Stiffness6 secant_stiffness(const Stiffness6& reference, const Stress6& dstress,
                            const Strain6& dstrain) {
    const double e2 = dstrain.squaredNorm();
    if (e2 <= 0.0) return reference;
    const Stress6 rho = dstress - reference * dstrain;
    if (rho.squaredNorm() <= 1e-30 * dstress.squaredNorm()) return reference;
    const double re = rho.dot(dstrain);
    Stiffness6 c = reference;
    c += (rho * dstrain.transpose() + dstrain * rho.transpose()) / e2;
    c -= (re / (e2 * e2)) * (dstrain * dstrain.transpose());
    return c;
}

StepResult material_step(const MaterialModel& mat, const MaterialState& state,
                         const Strain6& dstrain) {
    if (const auto* el = std::get_if<ElasticOrthotropic>(&mat)) {
        StepResult out;
        const Stiffness6 c = stiffness_of(*el);
        out.dstress = c * dstrain;
        out.next = state;
        out.next.stress = state.stress + out.dstress;
        out.next.strain = state.strain + dstrain;
        out.tangent = c;
        return out;
    }
    return j2_step(std::get<J2Plasticity>(mat), state, dstrain);
}

Stiffness6 material_elastic_stiffness(const MaterialModel& mat) {
    if (const auto* el = std::get_if<ElasticOrthotropic>(&mat)) return stiffness_of(*el);
    return elastic_stiffness(std::get<J2Plasticity>(mat));
}

bool is_elastic(const MaterialModel& mat) {
    return std::holds_alternative<ElasticOrthotropic>(mat);
}

CompositePreset composite_preset(std::string_view name) {
    CompositePreset p;
    p.name = std::string(name);
    if (name == "composite1" || name == "composite3") {
        p.fiber.e11 = 19.8;
        p.fiber.e22 = 19.8;
        p.fiber.e33 = 245.0;
        p.fiber.g12 = 5.9;
        p.fiber.g13 = 29.2;
        p.fiber.g23 = 29.2;
        p.fiber.nu12 = 0.67;
        p.fiber.nu13 = 0.02;
        p.fiber.nu23 = 0.02;
        p.matrix.youngs = 3.8;
        p.matrix.poisson = 0.387;
        if (name == "composite1") {
            p.matrix.yield0 = 0.01;
            p.matrix.h_lin = p.matrix.youngs / 50.0;
        } else {
            // Exponential hardening only.
            p.matrix.yield0 = 0.03;
            p.matrix.h_lin = 0.0;
        }
    } else if (name == "composite2") {
        p.fiber.e11 = p.fiber.e22 = p.fiber.e33 = 72.0;
        p.fiber.g12 = p.fiber.g13 = p.fiber.g23 = 29.5;
        p.fiber.nu12 = p.fiber.nu13 = p.fiber.nu23 = 0.22;
        p.matrix.youngs = 2.1;
        p.matrix.poisson = 0.3;
        p.matrix.yield0 = 0.029;
        p.matrix.h_lin = p.matrix.youngs / 50.0;
    } else {
        throw ConfigError("unknown composite preset '" + std::string(name) +
                          "' (expected composite1, composite2, or composite3)");
    }
    p.matrix.k_exp = p.matrix.yield0;
    p.matrix.m_exp = 100.0;
    return p;
}

} // namespace matnet
