#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "matnet/voigt.hpp"

namespace matnet {

/// Orthotropic linear elasticity by engineering constants (moduli in GPa).
struct ElasticOrthotropic {
    double e11 = 0, e22 = 0, e33 = 0;
    double g12 = 0, g13 = 0, g23 = 0;
    double nu12 = 0, nu13 = 0, nu23 = 0;

    static ElasticOrthotropic isotropic(double youngs, double poisson);
};

/// Stiffness from the inverted orthotropic compliance. Throws
/// AdmissibilityError naming the first violated principal minor when the
/// compliance is not positive definite.
Stiffness6 stiffness_of(const ElasticOrthotropic& mat);

/// Small-strain J2 plasticity with combined linear + exponential isotropic
/// hardening: sigma_y(p) = yield0 + h_lin*p + k_exp*(1 - exp(-m_exp*p)).
struct J2Plasticity {
    double youngs = 0;   // GPa
    double poisson = 0;
    double yield0 = 0;   // GPa
    double h_lin = 0;    // GPa
    double k_exp = 0;    // GPa
    double m_exp = 0;

    double shear_modulus() const { return youngs / (2.0 * (1.0 + poisson)); }
    double bulk_modulus() const { return youngs / (3.0 * (1.0 - 2.0 * poisson)); }
    double yield_stress(double eq_plastic) const;
    double hardening_slope(double eq_plastic) const;
};

void validate(const J2Plasticity& mat); // throws AdmissibilityError

Stiffness6 elastic_stiffness(const J2Plasticity& mat);

struct MaterialState {
    Stress6 stress = Stress6::Zero();  // GPa
    Strain6 strain = Strain6::Zero();
    double eq_plastic = 0.0;
    Strain6 plastic_strain = Strain6::Zero();
};

struct StepResult {
    Stress6 dstress = Stress6::Zero();
    MaterialState next;
    Stiffness6 tangent = Stiffness6::Zero(); // algorithmically consistent
};

/// Radial-return update for a strain increment from the given state.
/// Elastic steps return the elastic stiffness as the tangent exactly.
StepResult j2_step(const J2Plasticity& mat, const MaterialState& state, const Strain6& dstrain);

/// Symmetric matrix S with S * dstrain == dstress exactly (rank-two update
/// of the reference stiffness). Falls back to the reference when the strain
/// increment vanishes.
Stiffness6 secant_stiffness(const Stiffness6& reference, const Stress6& dstress,
                            const Strain6& dstrain);

/// One base phase: either linear elastic or elastoplastic.
using MaterialModel = std::variant<ElasticOrthotropic, J2Plasticity>;

StepResult material_step(const MaterialModel& mat, const MaterialState& state,
                         const Strain6& dstrain);
Stiffness6 material_elastic_stiffness(const MaterialModel& mat);
bool is_elastic(const MaterialModel& mat);

/// Two-phase material pairing used at the base nodes: odd base nodes carry
/// phase 1, even base nodes carry phase 2.
struct PhaseMaterials {
    MaterialModel phase1;
    MaterialModel phase2;
};

/// Named matrix/fiber presets ("composite1".."composite3"). Phase 1 is the
/// matrix, phase 2 the fiber.
struct CompositePreset {
    std::string name;
    J2Plasticity matrix;
    ElasticOrthotropic fiber;
    PhaseMaterials phases() const { return PhaseMaterials{matrix, fiber}; }
};

CompositePreset composite_preset(std::string_view name); // throws ConfigError

} // namespace matnet
