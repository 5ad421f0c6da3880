#pragma once

#include "mortv/systems.hpp"

namespace mortv::models {

/// Simply supported Timoshenko beam with a moving transverse point force.
/// Defaults: steel, 1 cm square cross-section, light Rayleigh damping.
struct BeamParams {
    double length = 1.0;            // m
    int num_elements = 451;         // first-order dimension n = 4 * num_elements
    double elastic_modulus = 2.1e11; // Pa
    double density = 7850.0;        // kg/m^3
    double width = 0.01;            // m
    double height = 0.01;           // m
    double shear_correction = 5.0 / 6.0;
    double poisson_ratio = 0.3;     // for the shear modulus
    double rayleigh_alpha = 1e-4;   // 1/s
    double rayleigh_beta = 1e-4;    // s
};

/// Assembles M, K from 2-node Timoshenko elements (linear interpolation,
/// selective reduced integration on shear), D = alpha M + beta K, and
/// eliminates w = 0 at both supports. load_map(p) distributes a unit
/// transverse force with the element shape functions; output_map(p)
/// samples the deflection the same way.
SecondOrderSystem build_beam(const BeamParams& params);

/// 1D heat rod with a moving source, zero Dirichlet ends.
struct HeatRodParams {
    double length = 10.0;   // m
    int num_nodes = 2500;   // interior nodes = system dimension n
    double diffusivity = 1e-3; // m^2/s
    double source_width = 0.2; // m, support of the unit-integral hat source
    bool fem_mass = true;      // false: finite differences with E = I
};

/// E = FEM mass (or identity), A = -diffusivity * stiffness, b(p) the
/// hat-function load of unit integral centered at p, c(p) = b(p)ᵀ
/// (collocated: the output is the source-weighted mean temperature).
MovingBoundarySystem build_heat_rod(const HeatRodParams& params, Trajectory trajectory);

} // namespace mortv::models
