#pragma once

namespace modalsim::fem {

// Isotropic linear elasticity plus proportional damping weights.
// rayleigh_mass (1/s) scales the identity and rayleigh_stiffness (s) scales
// the eigenvalues in the diagonalized damping term.
struct MaterialParams {
    double young_modulus = 15e3;    // Pa
    double poisson_ratio = 0.49;
    double density = 1040.0;        // kg/m^3
    double rayleigh_mass = 0.0;     // 1/s
    double rayleigh_stiffness = 0.0; // s

    void validate() const;

    double lame_lambda() const;
    double lame_mu() const;

    // Soft-tissue-plausible placeholders used when a config omits the
    // material block; callers should flag them as defaults in output.
    static MaterialParams soft_tissue_default() { return MaterialParams{}; }
};

} // namespace modalsim::fem
